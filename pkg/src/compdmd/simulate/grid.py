"""
Uniform cell-centred grids and conservative diffusion operators.

Each node is the centre of an ``hx`` by ``hy`` cell, so discrete integrals
are ``cell_weight * sum(values)``.  Diffusive fluxes are taken across cell
faces; a zero-flux edge contributes no face, so the operator's columns sum to
zero and implicit steps conserve the discrete mass exactly.  A fixed-value
edge couples boundary cells to the prescribed value half a cell away.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import InputError

EDGES = ("left", "right", "bottom", "top")


@dataclass(frozen=True)
class Boundary:
    """Edge condition: ``value is None`` means zero flux."""

    value: float | None = None

    @property
    def fixed(self) -> bool:
        return self.value is not None

    @classmethod
    def parse(cls, text: str) -> "Boundary":
        text = text.strip()
        if text == "zero-flux":
            return cls()
        kind, sep, value = text.partition(":")
        if kind == "fixed" and sep:
            try:
                return cls(float(value))
            except ValueError:
                pass
        raise InputError(f"boundary must be 'zero-flux' or 'fixed:<value>', got {text!r}")

    def __str__(self):
        return "zero-flux" if self.value is None else f"fixed:{self.value!r}"


def _zero_flux():
    return {edge: Boundary() for edge in EDGES}


@dataclass(frozen=True)
class Grid:
    """Uniform grid; ``ny == 1`` selects 1D and ignores ``hy`` and the y edges."""

    nx: int
    ny: int = 1
    hx: float = 1.0
    hy: float = 1.0
    boundary: tuple = field(default_factory=lambda: tuple(_zero_flux().items()))

    def __post_init__(self):
        if self.nx < 2 or self.ny < 1:
            raise InputError(f"grid needs nx >= 2 and ny >= 1, got {self.nx}x{self.ny}")
        if not (self.hx > 0 and self.hy > 0):
            raise InputError("grid spacing must be positive")
        bc = dict(self.boundary)
        unknown = set(bc) - set(EDGES)
        if unknown:
            raise InputError(f"unknown boundary edges {sorted(unknown)}")
        merged = _zero_flux()
        merged.update(bc)
        object.__setattr__(self, "boundary", tuple((e, merged[e]) for e in EDGES))

    @classmethod
    def make(cls, nx, ny=1, hx=1.0, hy=1.0, **edges) -> "Grid":
        bc = {e: (b if isinstance(b, Boundary) else Boundary.parse(b)) for e, b in edges.items()}
        return cls(nx, ny, hx, hy, tuple(bc.items()))

    @property
    def is_1d(self) -> bool:
        return self.ny == 1

    @property
    def nodes(self) -> int:
        return self.nx * self.ny

    @property
    def cell_weight(self) -> float:
        return self.hx if self.is_1d else self.hx * self.hy

    def edge(self, name: str) -> Boundary:
        return dict(self.boundary)[name]

    def coordinates(self):
        """Cell-centre coordinates ``(x, y)`` flattened with x fastest; y counts up from the bottom."""
        x = (np.arange(self.nx) + 0.5) * self.hx
        y = (np.arange(self.ny) + 0.5) * self.hy
        xx, yy = np.meshgrid(x, y)
        return xx.ravel(), yy.ravel()

    def index(self, i: int, j: int = 0) -> int:
        return j * self.nx + i

    def _axes(self):
        axes = [(self.nx, self.hx, 1, "left", "right")]
        if not self.is_1d:
            axes.append((self.ny, self.hy, self.nx, "bottom", "top"))
        return axes

    def diffusion_operator(self, coeff):
        """Return ``(K, g)`` with ``K u - g`` approximating ``-div(coeff grad u)``.

        ``coeff`` is a scalar or a per-node array; face values use the
        arithmetic mean of the two neighbours.  ``g`` collects fixed-value
        boundary contributions.
        """
        n = self.nodes
        coeff = np.broadcast_to(np.asarray(coeff, dtype=float), (n,))
        shape = (self.ny, self.nx)
        c2 = coeff.reshape(shape)
        rows, cols, vals = [], [], []
        diag = np.zeros(shape)
        g = np.zeros(shape)
        idx = np.arange(n).reshape(shape)
        for axis, (count, h, _, low, high) in zip((1, 0), self._axes()):
            lo = [slice(None)] * 2
            hi = [slice(None)] * 2
            lo[axis], hi[axis] = slice(0, count - 1), slice(1, count)
            lo, hi = tuple(lo), tuple(hi)
            w = 0.5 * (c2[lo] + c2[hi]) / h**2
            diag[lo] += w
            diag[hi] += w
            for a, b in ((lo, hi), (hi, lo)):
                rows.append(idx[a].ravel())
                cols.append(idx[b].ravel())
                vals.append(-w.ravel())
            for edge, pos in ((low, 0), (high, count - 1)):
                bc = self.edge(edge)
                if bc.fixed:
                    sl = [slice(None)] * 2
                    sl[axis] = pos
                    sl = tuple(sl)
                    w = 2.0 * c2[sl] / h**2
                    diag[sl] += w
                    g[sl] += w * bc.value
        rows.append(idx.ravel())
        cols.append(idx.ravel())
        vals.append(diag.ravel())
        k = sp.csc_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
        )
        return k, g.ravel()
