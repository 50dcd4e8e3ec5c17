"""
Laser-heated powder layer: heat equation plus pointwise phase fractions.

Temperature obeys ``rho c_p T' - div(kappa grad T) = L`` and the powder,
liquid and solid fractions follow::

    phi_p' = -S_p g phi_p
    phi_l' =  S_p g phi_p + S_s g phi_s + S_l g phi_l
    phi_s' = -S_s g phi_s - S_l g phi_l

with ``g = T' / (t_f - t_s)``.  Lengths are in cm, time in s, energy in J,
so the laser exponent ``-(dx^4 + dy^4) / 1e-8`` has a 100 micron radius.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..dmd import CompartmentLayout, SnapshotMatrix
from ..errors import InputError, NumericError
from .grid import Boundary, Grid

COMPARTMENTS = ("T", "phi_p", "phi_l", "phi_s")


@dataclass(frozen=True)
class AmParams:
    rho: float = 8.0
    c_p: float = 0.5
    kappa: float = 0.15
    t_s: float = 1658.0
    t_f: float = 1723.0
    laser_amp: float = 9e6
    laser_center: tuple = (0.02, 0.04)
    laser_scale: float = 1e-8
    laser_off_time: float = 1.5e-3
    sigmoid_sharpness: float = 1.0
    rate_sharpness: float = 1e-3
    t_boundary: float = 293.15
    dt: float = 1.25e-5

    def __post_init__(self):
        object.__setattr__(self, "laser_center", tuple(float(c) for c in self.laser_center))
        for name in ("rho", "c_p", "kappa", "t_s", "laser_scale", "sigmoid_sharpness", "rate_sharpness", "dt"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.t_f > self.t_s:
            raise InputError(f"t_f={self.t_f} must exceed t_s={self.t_s}")
        if self.laser_amp < 0 or self.laser_off_time < 0:
            raise InputError("laser_amp and laser_off_time must be non-negative")


@dataclass(frozen=True)
class AmState:
    t: np.ndarray
    phi_p: np.ndarray
    phi_l: np.ndarray
    phi_s: np.ndarray

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.t, self.phi_p, self.phi_l, self.phi_s])


def am_grid(n: int = 50, size: float = 0.04, t_boundary: float = 293.15) -> Grid:
    """Square grid with the bottom edge held at ``t_boundary`` and other edges insulated."""
    return Grid.make(n, n, size / n, size / n, bottom=Boundary(t_boundary))


def laser_source(x, y, params: AmParams, t: float):
    """Volumetric laser heating, switched off from ``laser_off_time`` on."""
    if t >= params.laser_off_time:
        return np.zeros(np.broadcast(x, y).shape) if np.ndim(x) or np.ndim(y) else 0.0
    xc, yc = params.laser_center
    dx = np.asarray(x) - xc
    dy = np.asarray(y) - yc
    return params.laser_amp * np.exp((-(dx**4) - dy**4) / params.laser_scale)


def logistic(z):
    """``1 / (1 + exp(-z))`` without overflow."""
    z = np.asarray(z, dtype=float)
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid_switch(kind: str, temperature, temp_rate, params: AmParams):
    """Smoothed indicator for a phase transition.

    ``p`` and ``s`` switch on while heating above ``t_s``; ``l`` switches on
    while cooling below ``t_f``.
    """
    k_t, k_r = params.sigmoid_sharpness, params.rate_sharpness
    temperature = np.asarray(temperature, dtype=float)
    temp_rate = np.asarray(temp_rate, dtype=float)
    if kind in ("p", "s"):
        return logistic(k_r * temp_rate) * logistic(k_t * (temperature - params.t_s))
    if kind == "l":
        return logistic(-k_r * temp_rate) * logistic(k_t * (params.t_f - temperature))
    raise InputError(f"switch kind must be 'p', 'l' or 's', got {kind!r}")


def phase_update(phi_p, phi_l, phi_s, t_old, t_new, params: AmParams):
    """One backward-Euler step of the phase ODEs, solved in closed form, then renormalized."""
    dtemp = np.asarray(t_new, dtype=float) - np.asarray(t_old, dtype=float)
    rate = dtemp / params.dt
    scale = dtemp / (params.t_f - params.t_s)
    a = sigmoid_switch("p", t_new, rate, params) * scale
    b = sigmoid_switch("s", t_new, rate, params) * scale
    c = sigmoid_switch("l", t_new, rate, params) * scale
    p_new = phi_p / (1.0 + a)
    rhs_l = phi_l + a * p_new
    det = 1.0 + b - c
    l_new = (rhs_l * (1.0 + b) + b * phi_s) / det
    s_new = ((1.0 - c) * phi_s - c * rhs_l) / det
    total = p_new + l_new + s_new
    return p_new / total, l_new / total, s_new / total


@functools.lru_cache(maxsize=8)
def _heat_solver(grid: Grid, rho_cp_over_dt: float, kappa: float):
    k, g = grid.diffusion_operator(kappa)
    a = sp.identity(grid.nodes, format="csc") * rho_cp_over_dt + k
    return spla.splu(a.tocsc()), g


def step_am(state: AmState, params: AmParams, grid: Grid, time: float) -> AmState:
    """Advance from ``time`` to ``time + dt``; the laser is evaluated at ``time``."""
    if grid.is_1d:
        raise InputError("the AM model needs a 2D grid")
    coef = params.rho * params.c_p / params.dt
    lu, g = _heat_solver(grid, coef, params.kappa)
    x, y = grid.coordinates()
    rhs = coef * state.t + laser_source(x, y, params, time) + g
    t_new = lu.solve(rhs)
    if not np.all(np.isfinite(t_new)) or np.max(np.abs(t_new)) > 1e12:
        raise NumericError(f"temperature became non-finite or overflowed at t={time:.6g}")
    phases = phase_update(state.phi_p, state.phi_l, state.phi_s, state.t, t_new, params)
    return AmState(t_new, *phases)


def initial_am_state(grid: Grid, params: AmParams) -> AmState:
    n = grid.nodes
    return AmState(np.full(n, params.t_boundary), np.ones(n), np.zeros(n), np.zeros(n))


def run_am(grid: Grid, params: AmParams, steps: int, output_stride: int = 1) -> SnapshotMatrix:
    """Simulate from cold powder, storing the initial state and every ``output_stride``-th step."""
    if steps < 0 or output_stride < 1:
        raise InputError("steps must be >= 0 and output_stride >= 1")
    state = initial_am_state(grid, params)
    columns = [state.stacked()]
    for k in range(steps):
        state = step_am(state, params, grid, k * params.dt)
        if (k + 1) % output_stride == 0:
            columns.append(state.stacked())
    layout = CompartmentLayout(COMPARTMENTS, grid.nodes)
    return SnapshotMatrix(np.column_stack(columns), params.dt * output_stride, layout, grid.cell_weight)


def melt_pool_profile(snapshot: SnapshotMatrix, column: int, grid: Grid) -> np.ndarray:
    """Powder fraction on the vertical centreline (``x`` index ``nx // 2``), bottom to top."""
    if grid.is_1d:
        raise InputError("melt pool profiles need a 2D grid")
    if not -snapshot.columns <= column < snapshot.columns:
        raise InputError(f"column {column} outside a {snapshot.columns}-column snapshot")
    phi_p = snapshot.data[snapshot.layout.block(snapshot.layout.index("phi_p")), column]
    return phi_p.reshape(grid.ny, grid.nx)[:, grid.nx // 2].copy()
