"""
Exact DMD on compartmental snapshot data.

The coupled strategy fits one model to the vertical stack of all
compartments; the uncoupled strategy fits one model per compartment.  Both
share :func:`fit`, which implements the projected-operator pipeline::

    Y' = U S V^T                       (rank-r SVD)
    A~ = U_r^T Y'' V_r S_r^-1          (r x r)
    A~ W = W Lambda
    Psi = Y'' V_r S_r^-1 W
    b = argmin ||Psi b - u_0||
    u~_k = Psi Lambda^k b,   u~(t) = Psi exp(Omega t) b
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import BranchWarning, InputError, NumericError, RankDeficiencyWarning
from .linalg import complex_least_squares, eig_real, randomized_svd, truncated_svd


@dataclass(frozen=True)
class CompartmentLayout:
    """Ordered compartment names, each holding ``node_count`` state rows."""

    names: tuple[str, ...]
    node_count: int

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        if len(self.names) < 1:
            raise InputError("a layout needs at least one compartment")
        if len(set(self.names)) != len(self.names):
            raise InputError(f"duplicate compartment names in {self.names}")
        if self.node_count < 1:
            raise InputError("node_count must be >= 1")
        for name in self.names:
            if not name or any(c in name for c in ":,= \n"):
                raise InputError(f"invalid compartment name {name!r}")

    @property
    def compartments(self) -> int:
        return len(self.names)

    @property
    def state_dim(self) -> int:
        return self.compartments * self.node_count

    def block(self, i: int) -> slice:
        if not 0 <= i < self.compartments:
            raise InputError(f"compartment index {i} outside [0, {self.compartments})")
        s = self.node_count
        return slice(i * s, (i + 1) * s)

    def index(self, name_or_index) -> int:
        if isinstance(name_or_index, (int, np.integer)):
            self.block(int(name_or_index))
            return int(name_or_index)
        try:
            return self.names.index(name_or_index)
        except ValueError:
            raise InputError(f"unknown compartment {name_or_index!r}; layout has {self.names}") from None

    def subset_mask(self, subset) -> np.ndarray:
        mask = np.zeros(self.state_dim, dtype=bool)
        for i in subset:
            mask[self.block(self.index(i))] = True
        return mask

    def __str__(self):
        return ",".join(f"{n}:{self.node_count}" for n in self.names)

    @classmethod
    def parse(cls, text: str) -> "CompartmentLayout":
        names, counts = [], []
        for item in text.strip().split(","):
            name, sep, count = item.partition(":")
            if not sep:
                raise InputError(f"layout entry {item!r} is not name:count")
            names.append(name.strip())
            try:
                counts.append(int(count))
            except ValueError:
                raise InputError(f"bad node count in layout entry {item!r}") from None
        if len(set(counts)) != 1:
            raise InputError(f"compartments must share a node count, got {counts}")
        return cls(tuple(names), counts[0])


@dataclass(frozen=True)
class SnapshotMatrix:
    """Column-per-output-step state history."""

    data: np.ndarray
    dt: float
    layout: CompartmentLayout
    cell_weight: float = 1.0

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2 or data.shape[1] < 1:
            raise InputError(f"snapshot data must be a non-empty matrix, got shape {data.shape}")
        if data.shape[0] != self.layout.state_dim:
            raise InputError(
                f"snapshot has {data.shape[0]} rows but layout {self.layout} needs {self.layout.state_dim}"
            )
        if not np.all(np.isfinite(data)):
            raise InputError("snapshot data contains non-finite values")
        if not self.dt > 0:
            raise InputError(f"dt must be positive, got {self.dt}")
        if not self.cell_weight > 0:
            raise InputError(f"cell_weight must be positive, got {self.cell_weight}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "cell_weight", float(self.cell_weight))

    @property
    def columns(self) -> int:
        return self.data.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.columns)

    def compartment(self, i) -> "SnapshotMatrix":
        idx = self.layout.index(i)
        sub = CompartmentLayout((self.layout.names[idx],), self.layout.node_count)
        return SnapshotMatrix(self.data[self.layout.block(idx)], self.dt, sub, self.cell_weight)

    def split(self) -> list["SnapshotMatrix"]:
        return [self.compartment(i) for i in range(self.layout.compartments)]

    def head(self, columns: int) -> "SnapshotMatrix":
        return replace(self, data=self.data[:, :columns])


@dataclass(frozen=True)
class Randomized:
    """Randomized-SVD backend settings."""

    seed: int = 0
    oversample: int = 10
    power_iters: int = 2


EXACT = "exact"


@dataclass(frozen=True)
class FitDetails:
    a_tilde: np.ndarray
    sigma: np.ndarray
    training_residual: float
    dropped_rank: int
    initial_misfit: float = 0.0
    amplitude_rank: int = 0


@dataclass(frozen=True)
class DmdModel:
    psi: np.ndarray
    lam: np.ndarray
    omega: np.ndarray
    b: np.ndarray
    dt: float
    layout: CompartmentLayout
    cell_weight: float = 1.0
    train_columns: int = 0
    fit_details: FitDetails | None = field(default=None, compare=False)

    @property
    def rank(self) -> int:
        return self.lam.shape[0]

    @property
    def train_end(self) -> float:
        return self.dt * max(self.train_columns - 1, 0)


def split_pair(y: SnapshotMatrix):
    """Return (Y', Y''): columns 0..m-1 and 1..m."""
    if y.columns < 2:
        raise InputError("need at least two snapshot columns to form a shifted pair")
    return y.data[:, :-1], y.data[:, 1:]


def stack_coupled(parts: Sequence[SnapshotMatrix]) -> SnapshotMatrix:
    """Row-concatenate single-compartment snapshot matrices in the given order."""
    if not parts:
        raise InputError("nothing to stack")
    first = parts[0]
    names = []
    for p in parts:
        if p.layout.compartments != 1:
            raise InputError(f"stack_coupled expects single-compartment parts, got {p.layout}")
        if p.columns != first.columns:
            raise InputError(f"column count mismatch: {p.columns} vs {first.columns}")
        if p.dt != first.dt:
            raise InputError(f"time step mismatch: {p.dt} vs {first.dt}")
        if p.cell_weight != first.cell_weight:
            raise InputError(f"cell weight mismatch: {p.cell_weight} vs {first.cell_weight}")
        if p.layout.node_count != first.layout.node_count:
            raise InputError("parts must share a node count")
        names.append(p.layout.names[0])
    layout = CompartmentLayout(tuple(names), first.layout.node_count)
    return SnapshotMatrix(np.vstack([p.data for p in parts]), first.dt, layout, first.cell_weight)


def permute_compartments(y: SnapshotMatrix, perm: Sequence[int]) -> SnapshotMatrix:
    """Reorder the compartment blocks of ``y``; ``perm[j]`` is the source of block j."""
    perm = list(perm)
    if sorted(perm) != list(range(y.layout.compartments)):
        raise InputError(f"{perm} is not a permutation of {y.layout.compartments} compartments")
    return stack_coupled([y.compartment(i) for i in perm])


def extract_compartment(state, layout: CompartmentLayout, i: int) -> np.ndarray:
    state = np.asarray(state)
    if state.shape[0] != layout.state_dim:
        raise InputError(f"state has length {state.shape[0]}, layout needs {layout.state_dim}")
    return state[layout.block(i)]


def continuous_eigenvalues(lam, dt: float) -> np.ndarray:
    """Principal-branch ``log(lam) / dt``.

    Zero eigenvalues map to ``-inf + 0j`` (a fully decayed mode).
    """
    if not dt > 0:
        raise InputError(f"dt must be positive, got {dt}")
    lam = np.asarray(lam, dtype=complex)
    # -0.0 imaginary parts would land on -pi
    lam = np.where(lam.imag == 0, lam.real + 0j, lam)
    omega = np.full(lam.shape, complex(-np.inf, 0.0))
    live = lam != 0
    omega[live] = np.log(lam[live]) / dt
    return omega


def _resolve_svd(y1, r, backend):
    if backend == EXACT or backend is None:
        return truncated_svd(y1, r)
    if isinstance(backend, Randomized):
        return randomized_svd(y1, r, backend.oversample, backend.power_iters, backend.seed)
    raise InputError(f"unknown SVD backend {backend!r}")


def fit(y: SnapshotMatrix, r: int, backend=EXACT) -> DmdModel:
    """Fit an exact DMD model of rank at most ``r`` to all columns of ``y``.

    ``backend`` is ``"exact"`` or a :class:`Randomized` instance.  The
    returned model may have fewer than ``r`` modes when trailing singular
    values fall below the drop tolerance.
    """
    if y.columns < 2:
        raise InputError("need at least two snapshot columns")
    m = y.columns - 1
    if not 1 <= r <= min(y.layout.state_dim, m):
        raise InputError(f"rank {r} outside [1, {min(y.layout.state_dim, m)}]")
    if not np.any(y.data):
        raise NumericError("snapshot matrix is identically zero; there are no dynamics to fit")
    y1, y2 = split_pair(y)
    f = _resolve_svd(y1, r, backend)
    k = f.rank_used
    if k == 0:
        raise NumericError("first snapshot block is zero; there are no dynamics to fit")
    u, s, v = f.u[:, :k], f.sigma[:k], f.v[:, :k]
    y2v = (y2 @ v) / s
    a_tilde = u.T @ y2v
    pair = eig_real(a_tilde)
    psi = y2v @ pair.vectors
    u0 = y.data[:, 0]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RankDeficiencyWarning)
        b, amp_rank = complex_least_squares(psi, u0, full_output=True)
    for w in caught:
        warnings.warn(w.message, w.category, stacklevel=2)
    omega = continuous_eigenvalues(pair.values, y.dt)
    norm2 = np.linalg.norm(y2)
    residual = np.linalg.norm(y2 - y2v @ (u.T @ y1)) / norm2 if norm2 > 0 else 0.0
    norm0 = np.linalg.norm(u0)
    misfit = np.linalg.norm((psi @ b).real - u0) / (norm0 if norm0 > 0 else 1.0)
    details = FitDetails(
        a_tilde=a_tilde,
        sigma=s,
        training_residual=float(residual),
        dropped_rank=r - k,
        initial_misfit=float(misfit),
        amplitude_rank=amp_rank,
    )
    return DmdModel(
        psi=psi,
        lam=pair.values,
        omega=omega,
        b=b,
        dt=y.dt,
        layout=y.layout,
        cell_weight=y.cell_weight,
        train_columns=y.columns,
        fit_details=details,
    )


def fit_uncoupled(parts: Sequence[SnapshotMatrix], r: int, backend=EXACT) -> list[DmdModel]:
    """One independent model per compartment, in input order."""
    models = []
    for part in parts:
        name = ",".join(part.layout.names)
        try:
            models.append(fit(part, r, backend))
        except InputError as exc:
            raise InputError(f"compartment {name}: {exc}") from exc
        except NumericError as exc:
            raise NumericError(f"compartment {name}: {exc}") from exc
    return models


def _check_step(k):
    k = np.asarray(k)
    if np.any(k < 0):
        raise InputError("time index must be non-negative")
    return k


def evaluate_discrete(model: DmdModel, steps) -> np.ndarray:
    """Complex ``Psi Lambda^k b`` for each k in ``steps`` (one column each)."""
    ks = np.atleast_1d(_check_step(steps))
    powers = np.power(model.lam[:, None], ks[None, :].astype(float))
    return model.psi @ (powers * model.b[:, None])


def reconstruct_discrete(model: DmdModel, k: int) -> np.ndarray:
    """Real part of ``Psi Lambda^k b``."""
    return evaluate_discrete(model, [k])[:, 0].real


def imaginary_residual(model: DmdModel, k: int) -> float:
    """``||Im(u~_k)||_inf / ||Re(u~_k)||_inf``; near zero for real training data."""
    z = evaluate_discrete(model, [k])[:, 0]
    denom = np.max(np.abs(z.real))
    return float(np.max(np.abs(z.imag)) / denom) if denom > 0 else float(np.max(np.abs(z.imag)))


def on_branch_cut(model: DmdModel) -> np.ndarray:
    lam = model.lam
    return (lam.imag == 0) & (lam.real < 0)


def evaluate_continuous(model: DmdModel, times) -> np.ndarray:
    """Complex ``Psi exp(Omega t) b`` for each t in ``times``."""
    ts = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(ts < 0):
        raise InputError("reconstruction time must be non-negative")
    if np.any(on_branch_cut(model)):
        warnings.warn(
            "eigenvalues on the negative real axis; continuous reconstruction uses the principal "
            "logarithm and only matches the discrete one at whole output steps",
            BranchWarning,
            stacklevel=2,
        )
    decayed = np.isneginf(model.omega.real)
    with np.errstate(invalid="ignore"):
        factors = np.exp(model.omega[:, None] * ts[None, :])
    factors[decayed, :] = (ts == 0).astype(float)
    return model.psi @ (factors * model.b[:, None])


def reconstruct_continuous(model: DmdModel, t: float) -> np.ndarray:
    """Real part of ``Psi exp(Omega t) b``."""
    return evaluate_continuous(model, [t])[:, 0].real


def reconstruct_series(models, steps) -> np.ndarray:
    """Stack real discrete reconstructions of one or more models (uncoupled recombination)."""
    if isinstance(models, DmdModel):
        models = [models]
    return np.vstack([evaluate_discrete(m, steps).real for m in models])


def reconstruction_snapshots(models, columns: int) -> SnapshotMatrix:
    """Reconstructions at output steps ``0..columns-1`` as a snapshot matrix."""
    if isinstance(models, DmdModel):
        models = [models]
    first = models[0]
    names = [n for m in models for n in m.layout.names]
    if len({m.layout.node_count for m in models}) != 1:
        raise InputError("models disagree on node count")
    layout = CompartmentLayout(tuple(names), first.layout.node_count)
    data = reconstruct_series(models, np.arange(columns))
    return SnapshotMatrix(data, first.dt, layout, first.cell_weight)
