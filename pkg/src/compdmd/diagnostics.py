"""
Conservation, error and spectrum checks on reference/reconstruction pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dmd import SnapshotMatrix, fit, permute_compartments
from .errors import InputError
from .fileio import fmt

NEG_TOL = 1e-8
L2_FLOOR = 1e-30


def _subset(y: SnapshotMatrix, subset) -> np.ndarray:
    if subset is None:
        subset = range(y.layout.compartments)
    subset = list(subset)
    if not subset:
        raise InputError("subset must name at least one compartment")
    return y.layout.subset_mask(subset)


def mass_series(y: SnapshotMatrix, subset=None) -> np.ndarray:
    """Discrete mass ``cell_weight * sum`` of the selected compartments, per column."""
    return y.cell_weight * y.data[_subset(y, subset)].sum(axis=0)


@dataclass(frozen=True)
class ConservationResult:
    passed: bool
    drift: float
    absolute: bool = False

    def __iter__(self):
        return iter((self.passed, self.drift))


def conservation_check(y: SnapshotMatrix, subset=None, rel_tol: float = 1e-8) -> ConservationResult:
    """Max deviation of the mass series from its first entry, relative unless that entry is zero."""
    mass = mass_series(y, subset)
    dev = np.abs(mass - mass[0])
    absolute = mass[0] == 0
    drift = float(dev.max() if absolute else dev.max() / abs(mass[0]))
    return ConservationResult(drift <= rel_tol, drift, absolute)


def _check_pair(ref: SnapshotMatrix, rec: SnapshotMatrix):
    if ref.data.shape != rec.data.shape:
        raise InputError(f"shape mismatch: reference {ref.data.shape}, reconstruction {rec.data.shape}")
    if ref.layout != rec.layout:
        raise InputError(f"layout mismatch: {ref.layout} vs {rec.layout}")


@dataclass(frozen=True)
class L2Series:
    values: np.ndarray
    vacuous: np.ndarray

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def relative_l2_series(ref: SnapshotMatrix, rec: SnapshotMatrix, compartment) -> L2Series:
    """Per-column relative L2 error of one compartment.

    Columns where the reference norm is below ``L2_FLOOR`` are flagged
    vacuous: their relative error carries no information.
    """
    _check_pair(ref, rec)
    block = ref.layout.block(ref.layout.index(compartment))
    a, b = ref.data[block], rec.data[block]
    norm = np.linalg.norm(a, axis=0)
    err = np.linalg.norm(a - b, axis=0) / np.maximum(norm, L2_FLOOR)
    return L2Series(err, norm < L2_FLOOR)


@dataclass(frozen=True)
class L1BoundResult:
    applicable: bool
    satisfied: bool
    lhs: np.ndarray
    bound: float

    @property
    def margin(self) -> float:
        return float(self.bound - self.lhs.max()) if self.lhs.size else float(self.bound)


def l1_bound_check(ref: SnapshotMatrix, rec: SnapshotMatrix, subset=None) -> L1BoundResult:
    """Per-column L1 error against twice the initial reference mass."""
    _check_pair(ref, rec)
    mask = _subset(ref, subset)
    a, b = ref.data[mask], rec.data[mask]
    bound = 2.0 * float(mass_series(ref, subset)[0])
    lhs = ref.cell_weight * np.abs(a - b).sum(axis=0)
    applicable = bool(a.min() >= -NEG_TOL and b.min() >= -NEG_TOL)
    satisfied = applicable and bool(np.all(lhs <= bound * (1 + 1e-9)))
    return L1BoundResult(applicable, satisfied, lhs, bound)


def eigenvalue_distance(a, b) -> float:
    """Greedy matching distance between two eigenvalue multisets.

    Values of ``a`` are visited in order of decreasing modulus and paired
    with the nearest unused value of ``b``.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        return float("inf")
    free = np.ones(b.shape, dtype=bool)
    worst = 0.0
    for z in a[np.argsort(-np.abs(a), kind="stable")]:
        d = np.where(free, np.abs(b - z), np.inf)
        j = int(np.argmin(d))
        free[j] = False
        worst = max(worst, float(d[j]))
    return worst


def permutation_spectrum_test(y: SnapshotMatrix, block_perm, r: int, backend="exact") -> float:
    """Eigenvalue distance between fits of ``y`` and of its block-permuted copy."""
    base = fit(y, r, backend)
    permuted = fit(permute_compartments(y, block_perm), r, backend)
    return eigenvalue_distance(base.lam, permuted.lam)


def nonnegativity_horizon(rec: SnapshotMatrix, subset=None):
    """First column index holding an entry below ``-NEG_TOL``, or None."""
    bad = np.any(rec.data[_subset(rec, subset)] < -NEG_TOL, axis=0)
    return int(np.argmax(bad)) if bad.any() else None


@dataclass
class DiagnosticsReport:
    mass_series_ref: np.ndarray
    mass_series_rec: np.ndarray
    conservation_drift: float
    l2_error_curves: dict
    l1: L1BoundResult
    nonneg_horizon: int | None
    verdicts: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def failures(self) -> list[str]:
        return [k for k, v in self.verdicts.items() if v == "fail"]

    def render(self) -> str:
        lines = ["DIAGNOSTICS v1"]

        def block(name, values):
            lines.append(f"SERIES {name}")
            lines.append("metric,column,value")
            lines.extend(f"{name},{j},{fmt(v)}" for j, v in enumerate(values))

        block("mass_ref", self.mass_series_ref)
        block("mass_rec", self.mass_series_rec)
        for name, curve in self.l2_error_curves.items():
            block(f"rel_l2_{name}", curve.values)
        block("l1_error", self.l1.lhs)
        lines.append("VERDICTS")
        lines.extend(f"{k}={v}" for k, v in self.verdicts.items())
        lines.append("NOTES")
        lines.append(f"conservation_drift={fmt(self.conservation_drift)}")
        lines.append(f"l1_bound={fmt(self.l1.bound)}")
        lines.append(f"l1_applicable={str(self.l1.applicable).lower()}")
        lines.append(f"nonneg_horizon={'none' if self.nonneg_horizon is None else self.nonneg_horizon}")
        lines.extend(self.notes)
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.render(), encoding="utf-8")


def diagnose(
    ref: SnapshotMatrix,
    rec: SnapshotMatrix,
    subset=None,
    conservation_tol: float = 1e-8,
    l2_tol: float | None = None,
    l2_columns: int | None = None,
) -> DiagnosticsReport:
    """Run every check and collect verdicts.

    Asserted checks are conservation of the subset mass in ``rec``, the L1
    bound (``n/a`` when either dataset loses sign) and, when ``l2_tol`` is
    given, the relative L2 error over the first ``l2_columns`` columns.
    """
    _check_pair(ref, rec)
    cons = conservation_check(rec, subset, conservation_tol)
    l1 = l1_bound_check(ref, rec, subset)
    curves = {name: relative_l2_series(ref, rec, name) for name in ref.layout.names}
    horizon = nonnegativity_horizon(rec, subset)
    verdicts = {
        "conservation": "pass" if cons.passed else "fail",
        "l1_bound": ("pass" if l1.satisfied else "fail") if l1.applicable else "n/a",
    }
    notes = []
    if cons.absolute:
        notes.append("conservation_mode=absolute (initial mass is zero)")
    if l2_tol is not None:
        cols = slice(0, l2_columns)
        worst = max(float(np.max(c.values[cols][~c.vacuous[cols]], initial=0.0)) for c in curves.values())
        verdicts["training_error"] = "pass" if worst <= l2_tol else "fail"
        notes.append(f"max_rel_l2={fmt(worst)}")
    for name, c in curves.items():
        if c.vacuous.any():
            notes.append(f"vacuous_l2_{name}={int(c.vacuous.sum())} columns with a zero reference")
    ref_drift = conservation_check(ref, subset).drift
    notes.append(f"reference_drift={fmt(ref_drift)}")
    return DiagnosticsReport(
        mass_series_ref=mass_series(ref, subset),
        mass_series_rec=mass_series(rec, subset),
        conservation_drift=cons.drift,
        l2_error_curves=curves,
        l1=l1,
        nonneg_horizon=horizon,
        verdicts=verdicts,
        notes=notes,
    )
