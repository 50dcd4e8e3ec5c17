import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from compdmd.diagnostics import (
    conservation_check,
    diagnose,
    eigenvalue_distance,
    l1_bound_check,
    mass_series,
    nonnegativity_horizon,
    permutation_spectrum_test,
    relative_l2_series,
)
from compdmd.dmd import (
    CompartmentLayout,
    SnapshotMatrix,
    fit,
    fit_uncoupled,
    reconstruction_snapshots,
)
from compdmd.errors import InputError


def snap(data, names, cell_weight=1.0):
    data = np.asarray(data, dtype=float)
    return SnapshotMatrix(data, 1.0, CompartmentLayout(tuple(names), data.shape[0] // len(names)), cell_weight)


def orbit(a, u0, columns):
    cols = [np.asarray(u0, dtype=float)]
    for _ in range(columns - 1):
        cols.append(a @ cols[-1])
    return np.column_stack(cols)


def exchange(columns=40):
    cycle = np.roll(np.eye(4), 1, axis=0)
    a = scipy.linalg.expm(0.3 * (cycle - np.eye(4)))
    return snap(orbit(a, [1.0, 0.2, 0.1, 0.05], columns), ("a", "b"))


def three_compartments():
    """A mass-exchanging pair plus an independent decaying compartment."""
    cycle = np.roll(np.eye(4), 1, axis=0)
    a = np.zeros((6, 6))
    a[:4, :4] = scipy.linalg.expm(0.3 * (cycle - np.eye(4)))
    a[4:, 4:] = [[0.7, 0.1], [0.0, 0.5]]
    return snap(orbit(a, [1.0, 0.2, 0.1, 0.05, 1.0, 1.0], 20), ("a", "b", "c"))


ONES = snap(np.ones((4, 3)), ("a", "b"))


class TestMassSeries:
    def test_full(self):
        np.testing.assert_array_equal(mass_series(ONES), [4, 4, 4])

    def test_subset(self):
        np.testing.assert_array_equal(mass_series(ONES, [0]), [2, 2, 2])
        np.testing.assert_array_equal(mass_series(ONES, ["b"]), [2, 2, 2])

    def test_cell_weight(self):
        np.testing.assert_array_equal(mass_series(snap(np.ones((4, 2)), ("a", "b"), 0.5)), [2, 2])

    def test_bad_subset(self):
        with pytest.raises(InputError):
            mass_series(ONES, [2])
        with pytest.raises(InputError):
            mass_series(ONES, [])

    @settings(max_examples=30, deadline=None)
    @given(alpha=st.floats(0, 1e6), seed=st.integers(0, 1000))
    def test_linear(self, alpha, seed):
        y = snap(np.random.default_rng(seed).uniform(0, 1, (6, 4)), ("a", "b", "c"))
        scaled = snap(alpha * y.data, ("a", "b", "c"))
        np.testing.assert_allclose(mass_series(scaled), alpha * mass_series(y), rtol=1e-12, atol=1e-300)


class TestConservationCheck:
    def test_constant(self):
        ok, drift = conservation_check(ONES)
        assert ok and drift == 0.0

    def test_drift_value(self):
        y = snap([[1.0, 1.1, 0.95]], ("a",))
        ok, drift = conservation_check(y, rel_tol=0.05)
        assert not ok
        assert drift == pytest.approx(0.1)

    def test_zero_mass_absolute(self):
        result = conservation_check(snap([[1.0, -1.0], [-1.0, 1.5]], ("a",)))
        assert result.absolute
        assert result.drift == pytest.approx(0.5)

    def test_coupled_vs_uncoupled(self):
        y = exchange()
        coupled = reconstruction_snapshots(fit(y, 4), y.columns)
        uncoupled = reconstruction_snapshots(fit_uncoupled(y.split(), 2), y.columns)
        ok, drift_c = conservation_check(coupled)
        _, drift_u = conservation_check(uncoupled)
        assert ok and drift_c <= 1e-8
        assert drift_u > 1e-3


class TestRelativeL2:
    def test_identical(self):
        y = exchange()
        np.testing.assert_array_equal(relative_l2_series(y, y, "a").values, 0.0)

    def test_scaled(self):
        y = exchange()
        z = snap(1.1 * y.data, ("a", "b"))
        np.testing.assert_allclose(relative_l2_series(y, z, 1).values, 0.1, rtol=1e-12)

    def test_full_rank_training_fit(self):
        y = exchange()
        rec = reconstruction_snapshots(fit(y, 4), y.columns)
        for c in ("a", "b"):
            assert relative_l2_series(y, rec, c).values.max() <= 1e-6

    def test_vacuous(self):
        ref = snap([[0.0, 1.0], [0.0, 1.0]], ("a",))
        rec = snap([[1e-3, 1.0], [0.0, 1.0]], ("a",))
        curve = relative_l2_series(ref, rec, 0)
        np.testing.assert_array_equal(curve.vacuous, [True, False])

    def test_shape_mismatch(self):
        with pytest.raises(InputError):
            relative_l2_series(ONES, snap(np.ones((4, 2)), ("a", "b")), 0)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_rotation_invariant(self, seed):
        rng = np.random.default_rng(seed)
        ref, rec = rng.standard_normal((2, 6, 5))
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        rot = scipy.linalg.block_diag(q, np.eye(3))
        a = relative_l2_series(snap(ref, "xy"), snap(rec, "xy"), 0).values
        b = relative_l2_series(snap(rot @ ref, "xy"), snap(rot @ rec, "xy"), 0).values
        np.testing.assert_allclose(a, b, rtol=1e-10)


class TestL1Bound:
    def test_identical(self):
        y = exchange()
        res = l1_bound_check(y, y)
        assert res.applicable and res.satisfied
        np.testing.assert_array_equal(res.lhs, 0.0)

    def test_column_permuted(self):
        y = exchange()
        z = snap(y.data[:, ::-1], ("a", "b"))
        res = l1_bound_check(y, z)
        direct = np.abs(y.data - z.data).sum(axis=0)
        np.testing.assert_allclose(res.lhs, direct)
        assert res.satisfied and res.lhs.max() <= res.bound

    def test_negative_entry(self):
        y = exchange()
        data = y.data.copy()
        data[0, 3] = -1.0
        res = l1_bound_check(y, snap(data, ("a", "b")))
        assert not res.applicable and not res.satisfied

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10_000), cols=st.integers(1, 6))
    def test_bound_from_conservation(self, seed, cols):
        rng = np.random.default_rng(seed)
        ref = rng.uniform(0, 1, (4, cols))
        rec = rng.uniform(0, 1, (4, cols))
        ref *= 3.0 / ref.sum(axis=0)
        rec *= 3.0 / rec.sum(axis=0)
        assert l1_bound_check(snap(ref, "ab", 0.7), snap(rec, "ab", 0.7)).satisfied


class TestPermutationSpectrum:
    def test_identity(self):
        assert permutation_spectrum_test(exchange(), [0, 1], 4) == 0.0

    def test_swap(self):
        assert permutation_spectrum_test(exchange(), [1, 0], 4) <= 1e-9

    def test_subset_with_independent_block(self):
        y = three_compartments()
        assert permutation_spectrum_test(y, [1, 0, 2], 6) <= 1e-9
        assert permutation_spectrum_test(y, [2, 0, 1], 6) <= 1e-9

    def test_symmetric_under_inverse(self):
        y = three_compartments()
        perm = [2, 0, 1]
        inverse = list(np.argsort(perm))
        d1 = permutation_spectrum_test(y, perm, 6)
        d2 = permutation_spectrum_test(y, inverse, 6)
        assert abs(d1 - d2) <= 1e-9

    def test_invalid(self):
        with pytest.raises(InputError):
            permutation_spectrum_test(exchange(), [0, 0], 4)

    def test_distance_matching(self):
        assert eigenvalue_distance([1, 2j, -2j], [-2j, 1.0 + 1e-3, 2j]) == pytest.approx(1e-3)
        assert eigenvalue_distance([1.0], [1.0, 2.0]) == float("inf")


class TestNonnegativityHorizon:
    def test_positive(self):
        assert nonnegativity_horizon(exchange()) is None

    def test_planted(self):
        data = np.ones((4, 8))
        data[2, 5] = -1.0
        assert nonnegativity_horizon(snap(data, ("a", "b"))) == 5

    def test_round_off_ignored(self):
        data = np.ones((2, 3))
        data[0, 1] = -1e-12
        assert nonnegativity_horizon(snap(data, ("a",))) is None

    def test_growing_oscillation(self):
        theta = 0.4
        a = 1.05 * np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        y = snap(orbit(a, [1.0, 0.0], 12), ("u",))
        model = fit(snap(y.data[:, :4], ("u",)), 2)
        rec = reconstruction_snapshots(model, 40)
        horizon = nonnegativity_horizon(rec)
        assert horizon is not None and 0 < horizon < 40
        assert not l1_bound_check(snap(np.abs(rec.data), ("u",)), rec).applicable


class TestDiagnose:
    def test_self_report(self):
        y = exchange()
        report = diagnose(y, y, l2_tol=1e-6)
        assert report.failures == []
        assert report.verdicts == {"conservation": "pass", "l1_bound": "pass", "training_error": "pass"}

    def test_render_format(self):
        y = exchange(5)
        text = diagnose(y, y).render()
        lines = text.splitlines()
        assert lines[0] == "DIAGNOSTICS v1"
        assert "SERIES mass_ref" in lines
        i = lines.index("SERIES rel_l2_a")
        assert lines[i + 1] == "metric,column,value"
        assert lines[i + 2] == "rel_l2_a,0,0"
        verdicts = lines[lines.index("VERDICTS") + 1 : lines.index("NOTES")]
        assert verdicts == ["conservation=pass", "l1_bound=pass"]
        assert "nonneg_horizon=none" in lines

    def test_uncoupled_fails_conservation(self):
        y = exchange()
        rec = reconstruction_snapshots(fit_uncoupled(y.split(), 2), y.columns)
        report = diagnose(y, rec)
        assert "conservation" in report.failures

    def test_subset(self):
        y = three_compartments()
        rec = reconstruction_snapshots(fit(y, 6), y.columns)
        assert diagnose(y, rec, subset=[0, 1]).verdicts["conservation"] == "pass"
        assert diagnose(y, rec).verdicts["conservation"] == "fail"
