"""
Dense linear algebra for exact DMD at desk scale.

Everything here works on plain numpy arrays; numpy is used for storage and
vectorised level-1/2 kernels only.  The factorizations themselves are
implemented locally:

* thin SVD by one-sided (Hestenes) Jacobi on the triangular factor of a
  Householder QR,
* randomized SVD (Gaussian sketch + subspace power iteration),
* nonsymmetric eigendecomposition by Householder reduction to Hessenberg
  form, Francis double-shift QR to real Schur form, and eigenvectors by
  back-substitution on the complex triangular form,
* complex least squares via complex QR + Jacobi SVD of the triangular factor.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericError, RankDeficiencyWarning

EPS = np.finfo(float).eps
DROP_TOL = 1e-12
MAX_SWEEPS = 60
MAX_EIG_DIM = 512


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``m ~ u @ diag(sigma) @ v.T``.

    Only the leading ``rank_used`` triplets are meaningful for
    reconstruction and pseudo-inversion; the rest are kept for inspection.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray
    rank_used: int

    def reconstruct(self) -> np.ndarray:
        k = self.rank_used
        return (self.u[:, :k] * self.sigma[:k]) @ self.v[:, :k].conj().T


@dataclass(frozen=True)
class EigPair:
    values: np.ndarray
    vectors: np.ndarray


def _as_real_matrix(m, name="matrix") -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.ndim != 2:
        raise InputError(f"{name} must be two-dimensional, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise InputError(f"{name} must be non-empty, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError(f"{name} contains non-finite entries")
    return a


# ---------------------------------------------------------------------------
# Householder QR


def _householder(x):
    """Reflector (v, beta, alpha) with (I - beta v v^H) x = alpha e_0."""
    norm = np.linalg.norm(x)
    v = x.copy()
    if norm == 0.0:
        return v, 0.0, 0.0
    x0 = x[0]
    if np.iscomplexobj(x):
        phase = x0 / abs(x0) if x0 != 0 else 1.0
    else:
        phase = 1.0 if x0 >= 0 else -1.0
    alpha = -phase * norm
    v[0] = x0 - alpha
    vnorm2 = np.vdot(v, v).real
    if vnorm2 == 0.0:
        return v, 0.0, x0
    return v, 2.0 / vnorm2, alpha


def _panel_reflectors(panel):
    """Unblocked Householder on a (rows x nb) panel, in place.

    Returns (V, T, alphas) with ``I - V T V^H`` the product of the panel's
    reflectors (compact WY form).
    """
    rows, nb = panel.shape
    vmat = np.zeros((rows, nb), dtype=panel.dtype, order="F")
    tmat = np.zeros((nb, nb), dtype=panel.dtype)
    alphas = np.zeros(nb, dtype=panel.dtype)
    for j in range(nb):
        v, beta, alpha = _householder(panel[j:, j])
        alphas[j] = alpha
        if beta != 0.0 and j + 1 < nb:
            block = panel[j:, j + 1:]
            block -= beta * np.outer(v, v.conj() @ block)
        vmat[j:, j] = v
        # T update for H_0 ... H_j = I - V T V^H
        if j > 0:
            tmat[:j, j] = -beta * (tmat[:j, :j] @ (vmat[:, :j].conj().T @ vmat[:, j]))
        tmat[j, j] = beta
    return vmat, tmat, alphas


def householder_qr(a, *, want_q=True, apply_to=None, block=32):
    """Thin QR of a tall matrix (real or complex), blocked Householder.

    Returns ``(q, r)`` when ``want_q``; otherwise ``(None, r)``.  When
    ``apply_to`` is given (a vector or matrix with ``a.shape[0]`` rows) its
    image under ``Q^H`` is returned as a third element.
    """
    a = np.array(a, order="F", copy=True)
    rows, cols = a.shape
    if rows < cols:
        raise InputError("householder_qr expects rows >= cols")
    extra = None
    if apply_to is not None:
        extra = np.array(apply_to, dtype=np.result_type(a, apply_to), copy=True)
        if extra.ndim == 1:
            extra = extra[:, None]
    panels = []
    for k in range(0, cols, block):
        nb = min(block, cols - k)
        panel = a[k:, k:k + nb]
        vmat, tmat, alphas = _panel_reflectors(panel)
        panels.append((k, vmat, tmat))
        if k + nb < cols:
            trail = a[k:, k + nb:]
            trail -= vmat @ (tmat.conj().T @ (vmat.conj().T @ trail))
        if extra is not None:
            tail = extra[k:]
            tail -= vmat @ (tmat.conj().T @ (vmat.conj().T @ tail))
        idx = np.arange(nb)
        panel[idx, idx] = alphas
    r = np.triu(a[:cols, :])
    q = None
    if want_q:
        q = np.zeros((rows, cols), dtype=a.dtype, order="F")
        q[np.arange(cols), np.arange(cols)] = 1.0
        for k, vmat, tmat in reversed(panels):
            tail = q[k:, k:]
            tail -= vmat @ (tmat @ (vmat.conj().T @ tail))
    if extra is not None:
        if apply_to is not None and np.ndim(apply_to) == 1:
            extra = extra[:, 0]
        return q, r, extra
    return q, r


# ---------------------------------------------------------------------------
# One-sided Jacobi SVD


def _round_robin(n):
    """Rounds of disjoint column pairs covering every pair once per sweep."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    size = len(players)
    rounds = []
    for _ in range(size - 1):
        p, q = [], []
        for i in range(size // 2):
            a, b = players[i], players[size - 1 - i]
            if a >= 0 and b >= 0:
                p.append(min(a, b))
                q.append(max(a, b))
        rounds.append((np.array(p, dtype=int), np.array(q, dtype=int)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _jacobi_orthogonalize(b):
    """Rotate the columns of ``b`` until mutually orthogonal.

    Returns ``(b_rotated, v)`` with ``b @ v == b_rotated``.
    """
    rows, n = b.shape
    # rotations act on b and v alike, so carry them stacked
    w = np.zeros((rows + n, n), dtype=np.result_type(b, float), order="F")
    w[:rows] = b
    w[rows + np.arange(n), np.arange(n)] = 1.0
    if n == 1:
        return w[:rows], w[rows:]
    tol = EPS * max(rows, n)
    rounds = _round_robin(n)
    is_complex = np.iscomplexobj(w)
    worst = None
    # columns this small carry no information above the drop tolerance
    floor = EPS**4 * np.max(np.einsum("ij,ij->j", b.conj(), b).real)
    for _ in range(MAX_SWEEPS):
        rotated = False
        worst = None
        for p, q in rounds:
            if p.size == 0:
                continue
            x = w[:rows, p]
            y = w[:rows, q]
            alpha = np.einsum("ij,ij->j", x.conj(), x).real
            beta = np.einsum("ij,ij->j", y.conj(), y).real
            gamma = np.einsum("ij,ij->j", x.conj(), y)
            mag = np.abs(gamma)
            scale = np.sqrt(alpha) * np.sqrt(beta)
            active = (mag > tol * scale) & (np.minimum(alpha, beta) > floor)
            if not np.any(active):
                continue
            rotated = True
            idx = np.flatnonzero(active)
            worst = (int(p[idx[0]]), int(q[idx[0]]))
            if idx.size < p.size:
                p, q = p[idx], q[idx]
                alpha, beta, gamma, mag, scale = alpha[idx], beta[idx], gamma[idx], mag[idx], scale[idx]
            x = w[:, p]
            y = w[:, q]
            if is_complex:
                y *= (gamma / mag).conj()
                g = mag
            else:
                g = gamma
            zeta = ((beta - alpha) / scale) / (2.0 * (g / scale))
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            w[:, p] = c * x - s * y
            w[:, q] = s * x + c * y
        if not rotated:
            return w[:rows], w[rows:]
    raise NumericError(
        f"Jacobi SVD did not converge in {MAX_SWEEPS} sweeps "
        f"(column {worst[0]} still coupled to column {worst[1]})"
    )


def _complete_basis(u, missing):
    """Fill columns ``missing`` of ``u`` with unit vectors orthogonal to the rest."""
    rows = u.shape[0]
    filled = [k for k in range(u.shape[1]) if k not in missing]
    for j in missing:
        basis = u[:, filled]
        best, best_norm = None, -1.0
        for i in range(rows):
            e = np.zeros(rows, dtype=u.dtype)
            e[i] = 1.0
            for _ in range(2):
                e = e - basis @ (basis.conj().T @ e)
            nrm = np.linalg.norm(e)
            if nrm > best_norm:
                best, best_norm = e, nrm
            if nrm > 0.5:
                break
        u[:, j] = best / best_norm
        filled.append(j)
    return u


def _fix_signs(u, v):
    """Make the largest-magnitude entry of every column of ``u`` real non-negative."""
    if u.shape[0] == 0:
        return u, v
    idx = np.argmax(np.abs(u), axis=0)  # first occurrence wins ties
    lead = u[idx, np.arange(u.shape[1])]
    mag = np.abs(lead)
    phase = np.where(mag > 0, lead / np.where(mag > 0, mag, 1.0), 1.0)
    return u * phase.conj(), v * phase.conj()


def _pivoted_qr(r):
    """Householder QR with column pivoting of a small square factor.

    Returns ``(q, rp, perm)`` with ``r[:, perm] == q @ rp``.
    """
    n = r.shape[1]
    a = r.copy()
    q = np.eye(r.shape[0], dtype=r.dtype)
    perm = np.arange(n)
    for k in range(min(a.shape) - 1):
        norms = np.einsum("ij,ij->j", a[k:, k:].conj(), a[k:, k:]).real
        j = k + int(np.argmax(norms))
        if j != k:
            a[:, [k, j]] = a[:, [j, k]]
            perm[[k, j]] = perm[[j, k]]
        v, beta, alpha = _householder(a[k:, k])
        if beta == 0.0:
            continue
        a[k:, k:] -= beta * np.outer(v, v.conj() @ a[k:, k:])
        a[k + 1 :, k] = 0.0
        a[k, k] = alpha
        q[:, k:] -= beta * np.outer(q[:, k:] @ v, v.conj())
    return q, np.triu(a), perm


def _svd_tall(a):
    """Thin SVD of a finite tall matrix (real or complex), sorted and sign-fixed.

    ``a = q1 r``; ``r[:, perm] = q2 rp``; Jacobi then orthogonalizes the
    columns of ``rp^H``.  Pivoting grades the rows of ``rp``, which cuts
    the sweep count severalfold on the graded spectra DMD produces.
    """
    q1, r = householder_qr(a)
    q2, rp, perm = _pivoted_qr(r)
    b, j = _jacobi_orthogonalize(rp.conj().T)
    sigma = np.linalg.norm(b, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma, b, j = sigma[order], b[:, order], j[:, order]
    ux = np.zeros_like(b)
    # below eps^2 relative the Jacobi floor leaves columns unrotated
    nz = sigma > EPS**2 * sigma[0] if sigma[0] > 0 else np.zeros(sigma.shape, dtype=bool)
    ux[:, nz] = b[:, nz] / sigma[nz]
    if not np.all(nz):
        ux = _complete_basis(ux, list(np.flatnonzero(~nz)))
    v = np.empty_like(ux)
    v[perm] = ux
    u = q1 @ (q2 @ j)
    u, v = _fix_signs(u, v)
    return u, sigma, v


def _rank(sigma):
    if sigma.size == 0 or sigma[0] == 0.0:
        return 0
    return int(np.count_nonzero(sigma / sigma[0] >= DROP_TOL))


def svd(m) -> SvdFactors:
    """Thin SVD of a real matrix with ``rows >= cols``.

    Singular values are sorted non-increasing and the largest-magnitude entry
    of each left singular vector is non-negative (lowest row index on ties).
    """
    a = _as_real_matrix(m)
    if a.shape[0] < a.shape[1]:
        raise InputError(f"svd expects rows >= cols, got {a.shape}; transpose first")
    u, sigma, v = _svd_tall(a)
    return SvdFactors(u, sigma, v, _rank(sigma))


def truncated_svd(m, r: int) -> SvdFactors:
    """Leading ``r`` singular triplets of ``m`` (any orientation).

    ``rank_used`` excludes trailing triplets with ``sigma_i / sigma_0 < 1e-12``.
    """
    a = _as_real_matrix(m)
    if not 1 <= r <= min(a.shape):
        raise InputError(f"truncation rank {r} outside [1, {min(a.shape)}]")
    if a.shape[0] >= a.shape[1]:
        u, sigma, v = _svd_tall(a)
    else:
        v, sigma, u = _svd_tall(a.T)
        u, v = _fix_signs(u, v)
    u, sigma, v = u[:, :r], sigma[:r], v[:, :r]
    return SvdFactors(u, sigma, v, _rank(sigma))


def randomized_svd(m, r: int, oversample: int = 10, power_iters: int = 2, seed: int = 0) -> SvdFactors:
    """Approximate rank-``r`` SVD from a Gaussian range sketch.

    The sketch has ``r + oversample`` columns and is refined by
    ``power_iters`` rounds of re-orthonormalised subspace iteration.
    """
    a = _as_real_matrix(m)
    rows, cols = a.shape
    k = r + oversample
    if r < 1 or oversample < 0 or power_iters < 0:
        raise InputError("rank must be >= 1; oversample and power_iters must be >= 0")
    if k > min(rows, cols):
        raise InputError(f"r + oversample = {k} exceeds min(rows, cols) = {min(rows, cols)}")
    rng = np.random.default_rng(seed)
    omega = rng.standard_normal((cols, k))
    q, _ = householder_qr(a @ omega)
    for _ in range(power_iters):
        z, _ = householder_qr(a.T @ q)
        q, _ = householder_qr(a @ z)
    small = q.T @ a  # k x cols, wide
    v, sigma, ub = _svd_tall(small.T)
    u = q @ ub
    u, v = _fix_signs(u, v)
    u, sigma, v = u[:, :r], sigma[:r], v[:, :r]
    return SvdFactors(u, sigma, v, _rank(sigma))


def pseudoinverse_apply(f: SvdFactors, y) -> np.ndarray:
    """Apply ``V_r diag(1/sigma_r) U_r^T`` using only the retained triplets."""
    y = np.asarray(y)
    if y.shape[0] != f.u.shape[0]:
        raise InputError(f"vector length {y.shape[0]} does not match {f.u.shape[0]} rows")
    k = f.rank_used
    coeff = (f.u[:, :k].conj().T @ y) / (f.sigma[:k] if y.ndim == 1 else f.sigma[:k, None])
    return f.v[:, :k] @ coeff


# ---------------------------------------------------------------------------
# Nonsymmetric eigenproblem


def _hessenberg(a):
    """Return (h, z) with z orthogonal and z.T @ a @ z == h upper Hessenberg."""
    n = a.shape[0]
    h = np.array(a, dtype=float, copy=True)
    z = np.eye(n)
    for k in range(n - 2):
        v, beta, alpha = _householder(h[k + 1:, k])
        if beta == 0.0:
            continue
        h[k + 1:, k:] -= beta * np.outer(v, v @ h[k + 1:, k:])
        h[:, k + 1:] -= beta * np.outer(h[:, k + 1:] @ v, v)
        z[:, k + 1:] -= beta * np.outer(z[:, k + 1:] @ v, v)
        h[k + 1, k] = alpha
        h[k + 2:, k] = 0.0
    return h, z


def _francis_schur(h, z):
    """Reduce Hessenberg ``h`` in place to real Schur form, accumulating into ``z``.

    Double-shift implicit QR with Wilkinson-style exceptional shifts.  Real
    eigenvalue pairs are split with a Givens rotation so that only complex
    conjugate pairs remain as 2x2 diagonal blocks.
    """
    n = h.shape[0]
    az = np.vstack([h, z])
    a, z = az[:n], az[n:]
    anorm = np.sum(np.abs(np.triu(a, -1)))
    nn = n - 1
    t = 0.0
    while nn >= 0:
        its = 0
        while True:
            l = 0
            for ll in range(nn, 0, -1):
                s = abs(a[ll - 1, ll - 1]) + abs(a[ll, ll])
                if s == 0.0:
                    s = anorm
                if abs(a[ll, ll - 1]) <= EPS * s:
                    a[ll, ll - 1] = 0.0
                    l = ll
                    break
            x = a[nn, nn]
            if l == nn:
                a[nn, nn] = x + t
                nn -= 1
                break
            y = a[nn - 1, nn - 1]
            w = a[nn, nn - 1] * a[nn - 1, nn]
            if l == nn - 1:
                p = 0.5 * (y - x)
                q = p * p + w
                zz = np.sqrt(abs(q))
                x += t
                a[nn, nn] = x
                a[nn - 1, nn - 1] = y + t
                if q >= 0.0:
                    zz = p + (zz if p >= 0 else -zz)
                    xx = a[nn, nn - 1]
                    s = abs(xx) + abs(zz)
                    pp, qq = xx / s, zz / s
                    rr = np.hypot(pp, qq)
                    pp /= rr
                    qq /= rr
                    row_a = a[nn - 1, nn - 1:].copy()
                    row_b = a[nn, nn - 1:].copy()
                    a[nn - 1, nn - 1:] = qq * row_a + pp * row_b
                    a[nn, nn - 1:] = qq * row_b - pp * row_a
                    col_a = a[: nn + 1, nn - 1].copy()
                    col_b = a[: nn + 1, nn].copy()
                    a[: nn + 1, nn - 1] = qq * col_a + pp * col_b
                    a[: nn + 1, nn] = qq * col_b - pp * col_a
                    za = z[:, nn - 1].copy()
                    zb = z[:, nn].copy()
                    z[:, nn - 1] = qq * za + pp * zb
                    z[:, nn] = qq * zb - pp * za
                    a[nn, nn - 1] = 0.0
                nn -= 2
                break
            if its == 60:
                raise NumericError(f"QR iteration did not converge for eigenvalue {nn}")
            if its in (10, 20, 30, 40, 50):
                t += x
                idx = np.arange(nn + 1)
                a[idx, idx] -= x
                s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                x = y = 0.75 * s
                w = -0.4375 * s * s
            its += 1
            m = nn - 2
            while True:
                zm = a[m, m]
                r = x - zm
                s = y - zm
                p = (r * s - w) / a[m + 1, m] + a[m, m + 1]
                q = a[m + 1, m + 1] - zm - r - s
                r = a[m + 2, m + 1]
                s = abs(p) + abs(q) + abs(r)
                p, q, r = p / s, q / s, r / s
                if m == l:
                    break
                u = abs(a[m, m - 1]) * (abs(q) + abs(r))
                v = abs(p) * (abs(a[m - 1, m - 1]) + abs(zm) + abs(a[m + 1, m + 1]))
                if u <= EPS * v:
                    break
                m -= 1
            for i in range(m + 2, nn + 1):
                a[i, i - 2] = 0.0
                if i != m + 2:
                    a[i, i - 3] = 0.0
            xk = 0.0
            for k in range(m, nn):
                if k != m:
                    p = a[k, k - 1]
                    q = a[k + 1, k - 1]
                    r = a[k + 2, k - 1] if k + 1 != nn else 0.0
                    xk = abs(p) + abs(q) + abs(r)
                    if xk != 0.0:
                        p, q, r = p / xk, q / xk, r / xk
                s = np.sqrt(p * p + q * q + r * r)
                if p < 0:
                    s = -s
                if s == 0.0:
                    continue
                if k == m:
                    if l != m:
                        a[k, k - 1] = -a[k, k - 1]
                else:
                    a[k, k - 1] = -s * xk
                    a[k + 1, k - 1] = 0.0
                    if k + 1 != nn:
                        a[k + 2, k - 1] = 0.0
                p += s
                xr, yr, zr = p / s, q / s, r / s
                q /= p
                r /= p
                # rows k..k+2 (all trailing columns), then columns k..k+2 of the
                # stacked [H; Z]; rows of H below k+3 are zero in those columns
                w = 3 if k + 1 != nn else 2
                coef_row = np.array([1.0, q, r][:w])
                rows = a[k:k + w, k:]
                pv = coef_row @ rows
                rows -= np.outer(np.array([xr, yr, zr][:w]), pv)
                cols = az[:, k:k + w]
                pc = cols @ np.array([xr, yr, zr][:w])
                cols -= np.outer(pc, coef_row)
    return a.copy(), z.copy()


def _to_complex_schur(t, z):
    """Triangularise the remaining 2x2 blocks with complex Givens rotations.

    Returns the complex triangular factor, the unitary Schur vectors and a
    list of (k, k+1) index pairs that hold conjugate eigenvalues.
    """
    n = t.shape[0]
    tc = t.astype(complex)
    zc = z.astype(complex)
    pairs = []
    k = 0
    while k < n:
        if k + 1 < n and t[k + 1, k] != 0.0:
            a_, b_, c_, d_ = t[k, k], t[k, k + 1], t[k + 1, k], t[k + 1, k + 1]
            mean = 0.5 * (a_ + d_)
            disc = 0.25 * (a_ - d_) ** 2 + b_ * c_
            lam = complex(mean, np.sqrt(max(-disc, 0.0)))
            if abs(b_) >= abs(c_):
                vec = np.array([b_, lam - a_], dtype=complex)
            else:
                vec = np.array([lam - d_, c_], dtype=complex)
            vec /= np.linalg.norm(vec)
            g = np.array([[vec[0], -np.conj(vec[1])], [vec[1], np.conj(vec[0])]])
            tc[k:k + 2, :] = g.conj().T @ tc[k:k + 2, :]
            tc[:, k:k + 2] = tc[:, k:k + 2] @ g
            zc[:, k:k + 2] = zc[:, k:k + 2] @ g
            tc[k + 1, k] = 0.0
            tc[k, k] = lam
            tc[k + 1, k + 1] = np.conj(lam)
            pairs.append((k, k + 1))
            k += 2
        else:
            k += 1
    return np.triu(tc), zc, pairs


def _triangular_eigenvectors(tc, zc, pairs):
    n = tc.shape[0]
    tnorm = max(np.max(np.abs(tc)), np.finfo(float).tiny)
    smin = EPS * tnorm
    partner = {j: i for i, j in pairs}
    vecs = np.zeros((n, n), dtype=complex)
    for k in range(n):
        if k in partner:
            vecs[:, k] = vecs[:, partner[k]].conj()
            continue
        lam = tc[k, k]
        x = np.zeros(k + 1, dtype=complex)
        x[k] = 1.0
        for i in range(k - 1, -1, -1):
            den = tc[i, i] - lam
            if abs(den) < smin:
                den = smin
            x[i] = -(tc[i, i + 1:k + 1] @ x[i + 1:k + 1]) / den
            big = abs(x[i])
            if big > 1e100:
                x /= big
        vec = zc[:, :k + 1] @ x
        vecs[:, k] = vec / np.linalg.norm(vec)
    return vecs


def eig_real(a) -> EigPair:
    """Eigen-decomposition of a real square matrix.

    Eigenvalues are ordered by non-increasing modulus, then non-increasing
    real part, then non-decreasing imaginary part.  Eigenvectors have unit
    Euclidean norm; conjugate eigenvalues get conjugate eigenvectors.
    """
    a = _as_real_matrix(a)
    n = a.shape[0]
    if a.shape[1] != n:
        raise InputError(f"eig_real expects a square matrix, got {a.shape}")
    if n > MAX_EIG_DIM:
        raise InputError(f"matrix dimension {n} exceeds the supported bound {MAX_EIG_DIM}")
    if n == 1:
        return EigPair(np.array([complex(a[0, 0])]), np.ones((1, 1), dtype=complex))
    h, z = _hessenberg(a)
    t, z = _francis_schur(h, z)
    tc, zc, pairs = _to_complex_schur(t, z)
    vecs = _triangular_eigenvectors(tc, zc, pairs)
    values = np.diag(tc).copy()
    # real eigenvalues carry no imaginary part
    real_idx = np.ones(n, dtype=bool)
    for i, j in pairs:
        real_idx[i] = real_idx[j] = False
    values[real_idx] = values[real_idx].real
    vecs[:, real_idx] = vecs[:, real_idx].real
    order = np.lexsort((values.imag, -values.real, -np.abs(values)))
    return EigPair(values[order], vecs[:, order])


# ---------------------------------------------------------------------------
# Complex least squares


def complex_least_squares(psi, y, *, full_output=False):
    """Minimise ``||psi @ b - y||_2`` over complex ``b``.

    Uses a complex Householder QR of ``psi`` followed by a Jacobi SVD of the
    triangular factor.  Singular values below ``1e-12`` of the largest are
    discarded, giving the minimum-norm solution; a
    :class:`RankDeficiencyWarning` is issued when that happens.

    With ``full_output=True`` returns ``(b, effective_rank)``.
    """
    psi = np.asarray(psi, dtype=complex)
    y = np.asarray(y)
    if psi.ndim != 2 or y.ndim != 1:
        raise InputError("psi must be a matrix and y a vector")
    rows, cols = psi.shape
    if y.shape[0] != rows:
        raise InputError(f"psi has {rows} rows but y has length {y.shape[0]}")
    if cols > rows:
        raise InputError("psi must have at least as many rows as columns")
    if not (np.all(np.isfinite(psi)) and np.all(np.isfinite(y))):
        raise InputError("non-finite entries in least-squares data")
    _, r, qhy = householder_qr(psi, want_q=False, apply_to=y.astype(complex))
    u, sigma, v = _svd_tall(r)
    rank = _rank(sigma)
    if rank < cols:
        warnings.warn(
            f"least-squares matrix is rank deficient ({rank} of {cols} columns kept); "
            "returning the minimum-norm solution",
            RankDeficiencyWarning,
            stacklevel=2,
        )
    coeff = (u[:, :rank].conj().T @ qhy[:cols]) / sigma[:rank]
    b = v[:, :rank] @ coeff
    if full_output:
        return b, rank
    return b
