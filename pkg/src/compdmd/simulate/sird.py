"""
Delayed SIRD reaction-diffusion model.

Densities evolve as::

    s' = -b_i s i(t-sigma)/n - b_e s i/n             + div(n nu_s grad s)
    i' = +b_i s i(t-sigma)/n + b_e s i/n - (g+d) i(t-sigma) + div(n nu_i grad i)
    r' = g i(t-sigma)                                 + div(n nu_r grad r)
    d' = d i(t-sigma)

with ``n = s + i + r`` the living population.  Time stepping is backward
Euler with implicit diffusion (mobility ``n`` frozen at the previous step)
and lagged reaction terms, so the reaction terms cancel in the column sum and
the discrete total mass is conserved to solver precision.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..dmd import CompartmentLayout, SnapshotMatrix
from ..errors import InputError, NumericError
from .grid import Grid

NEG_TOL = 1e-8
COMPARTMENTS = ("s", "i", "r", "d")


@dataclass(frozen=True)
class SirdParams:
    beta_i: float = 0.05
    beta_e: float = 0.05
    gamma: float = 1 / 24
    delta: float = 1 / 180
    nu_s: float = 1e-3
    nu_i: float = 1e-4
    nu_r: float = 1e-3
    sigma: float = 7.0
    dt: float = 0.25

    def __post_init__(self):
        for name in ("beta_i", "beta_e", "gamma", "delta", "nu_s", "nu_i", "nu_r", "sigma"):
            if not getattr(self, name) >= 0:
                raise InputError(f"{name} must be non-negative, got {getattr(self, name)}")
        if not self.dt > 0:
            raise InputError(f"dt must be positive, got {self.dt}")
        self.delay_steps  # rejects sigma that is not a whole number of steps

    @property
    def delay_steps(self) -> int:
        ratio = self.sigma / self.dt
        depth = round(ratio)
        if abs(ratio - depth) > 1e-9 * max(1.0, ratio):
            raise InputError(f"sigma={self.sigma} is not an integer multiple of dt={self.dt}")
        return depth


@dataclass(frozen=True)
class SirdState:
    s: np.ndarray
    i: np.ndarray
    r: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        fields = [np.array(getattr(self, k), dtype=float) for k in COMPARTMENTS]
        if len({f.shape for f in fields}) != 1 or fields[0].ndim != 1:
            raise InputError("s, i, r, d must be 1D arrays of equal length")
        for k, f in zip(COMPARTMENTS, fields):
            f.setflags(write=False)
            object.__setattr__(self, k, f)

    @property
    def n_pop(self) -> np.ndarray:
        return self.s + self.i + self.r

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.s, self.i, self.r, self.d])

    def total(self, cell_weight: float = 1.0) -> float:
        return cell_weight * float(self.stacked().sum())


class DelayBuffer:
    """The last ``depth`` infected fields, oldest first.

    Before any step the whole pre-history equals the initial field.
    """

    def __init__(self, i0, depth: int):
        if depth < 0:
            raise InputError("delay depth must be non-negative")
        self.depth = depth
        i0 = np.array(i0, dtype=float)
        self._ring = deque((i0 for _ in range(depth)), maxlen=max(depth, 1))
        self._current = i0

    def delayed(self) -> np.ndarray:
        """``i`` at the new time level minus sigma.

        With zero delay the previous step's field is used (lagged).
        """
        return self._ring[0] if self.depth else self._current

    def push(self, i_new) -> None:
        i_new = np.array(i_new, dtype=float)
        if self.depth:
            self._ring.append(i_new)
        self._current = i_new


def check_delay_stability(gamma: float, delta: float, sigma: float) -> str:
    """Classify the delayed-loss regime as ``stable_positive``, ``stable`` or ``unstable``."""
    if sigma == 0:
        raise InputError("sigma must be positive for the delay stability bounds")
    if min(gamma, delta, sigma) < 0:
        raise InputError("rates and delay must be non-negative")
    loss = gamma + delta
    if loss < 1 / (math.e * sigma):
        return "stable_positive"
    if loss < math.pi / (2 * sigma):
        return "stable"
    return "unstable"


def infection(s, i_now, i_delayed, n_pop, params: SirdParams) -> np.ndarray:
    """New infections per unit time, zero where nobody lives."""
    safe = np.where(n_pop > 0, n_pop, 1.0)
    rate = (params.beta_i * i_delayed + params.beta_e * i_now) * s / safe
    return np.where(n_pop > 0, rate, 0.0)


def _implicit(grid: Grid, mobility, nu, dt, rhs):
    if nu == 0:
        return rhs
    k, g = grid.diffusion_operator(mobility * nu)
    a = sp.identity(grid.nodes, format="csc") + dt * k
    return spla.spsolve(a, rhs + dt * g)


def step_sird(state: SirdState, params: SirdParams, buf: DelayBuffer, grid: Grid) -> SirdState:
    """Advance one backward-Euler step and push the new infected field into ``buf``."""
    if state.s.shape[0] != grid.nodes:
        raise InputError(f"state has {state.s.shape[0]} nodes, grid has {grid.nodes}")
    dt = params.dt
    n_pop = state.n_pop
    i_del = buf.delayed()
    new_inf = infection(state.s, state.i, i_del, n_pop, params)
    s = _implicit(grid, n_pop, params.nu_s, dt, state.s - dt * new_inf)
    i = _implicit(grid, n_pop, params.nu_i, dt, state.i + dt * (new_inf - (params.gamma + params.delta) * i_del))
    r = _implicit(grid, n_pop, params.nu_r, dt, state.r + dt * params.gamma * i_del)
    d = state.d + dt * params.delta * i_del
    new = SirdState(s, i, r, d)
    stacked = new.stacked()
    if not np.all(np.isfinite(stacked)):
        raise NumericError("SIRD step produced non-finite values")
    low = stacked.min()
    if low < -NEG_TOL:
        field = COMPARTMENTS[int(np.argmin(stacked)) // grid.nodes]
        raise NumericError(f"compartment {field} went negative ({low:.3e}); the model left the positivity regime")
    buf.push(i)
    return new


def run_sird(grid: Grid, params: SirdParams, initial: SirdState, steps: int, output_stride: int = 1) -> SnapshotMatrix:
    """Integrate ``steps`` steps, storing the initial state and every ``output_stride``-th step."""
    if steps < 0 or output_stride < 1:
        raise InputError("steps must be >= 0 and output_stride >= 1")
    buf = DelayBuffer(initial.i, params.delay_steps)
    state = initial
    columns = [state.stacked()]
    for k in range(1, steps + 1):
        state = step_sird(state, params, buf, grid)
        if k % output_stride == 0:
            columns.append(state.stacked())
    layout = CompartmentLayout(COMPARTMENTS, grid.nodes)
    return SnapshotMatrix(np.column_stack(columns), params.dt * output_stride, layout, grid.cell_weight)


def initial_state(
    grid: Grid,
    pop_density: float = 100.0,
    pop_variation: float = 0.0,
    i0_fraction: float = 0.01,
    i0_center=(0.3, 0.5),
    i0_width: float = 0.1,
    seed: int = 0,
) -> SirdState:
    """Synthetic initial condition: population with optional seeded noise and a Gaussian infected seed.

    ``i0_center`` and ``i0_width`` are fractions of the domain size.
    """
    if pop_density <= 0 or not 0 <= pop_variation < 1 or not 0 <= i0_fraction <= 1 or i0_width <= 0:
        raise InputError("invalid synthetic SIRD initial-condition parameters")
    rng = np.random.default_rng(seed)
    pop = pop_density * (1 + pop_variation * rng.uniform(-1, 1, grid.nodes))
    x, y = grid.coordinates()
    dx = x / (grid.nx * grid.hx) - i0_center[0]
    dist2 = dx**2
    if not grid.is_1d:
        dist2 = dist2 + (y / (grid.ny * grid.hy) - i0_center[1]) ** 2
    i = i0_fraction * pop * np.exp(-dist2 / (2 * i0_width**2))
    zeros = np.zeros(grid.nodes)
    return SirdState(pop - i, i, zeros, zeros.copy())
