import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from compdmd.dmd import CompartmentLayout, SnapshotMatrix, continuous_eigenvalues, fit
from compdmd.errors import InputError
from compdmd.fileio import read_model, read_snapshots, write_model, write_snapshots

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


def exchange_snapshot():
    rng = np.random.default_rng(4)
    a = rng.uniform(0.1, 1.0, (4, 4))
    a /= a.sum(axis=0)
    cols = [rng.uniform(0.5, 1.5, 4)]
    for _ in range(9):
        cols.append(a @ cols[-1])
    return SnapshotMatrix(np.column_stack(cols), 0.1, CompartmentLayout(("x", "y"), 2), 0.3)


class TestSnapshotFiles:
    def test_round_trip(self, tmp_path):
        y = exchange_snapshot()
        write_snapshots(tmp_path / "a.csv", y)
        z, meta = read_snapshots(tmp_path / "a.csv")
        np.testing.assert_array_equal(z.data, y.data)
        assert (z.dt, z.cell_weight, z.layout) == (y.dt, y.cell_weight, y.layout)
        assert meta == {}

    def test_header_lines(self, tmp_path):
        write_snapshots(tmp_path / "a.csv", exchange_snapshot(), {"extrapolated": "false"})
        lines = (tmp_path / "a.csv").read_text().splitlines()
        assert lines[:4] == ["SNAPSHOTS v1", "dt=0.10000000000000001", "cell_weight=0.29999999999999999", "layout=x:2,y:2"]
        assert lines[4] == "extrapolated=false"
        assert len(lines) == 9

    def test_metadata(self, tmp_path):
        write_snapshots(tmp_path / "a.csv", exchange_snapshot(), {"extrapolated": "true"})
        _, meta = read_snapshots(tmp_path / "a.csv")
        assert meta == {"extrapolated": "true"}

    def test_byte_identical(self, tmp_path):
        write_snapshots(tmp_path / "a.csv", exchange_snapshot())
        write_snapshots(tmp_path / "b.csv", exchange_snapshot())
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    @settings(max_examples=40, deadline=None)
    @given(arrays(np.float64, (2, 3), elements=finite))
    def test_value_exact(self, tmp_path_factory, data):
        path = tmp_path_factory.mktemp("snap") / "s.csv"
        y = SnapshotMatrix(data, 0.25, CompartmentLayout(("a",), 2))
        write_snapshots(path, y)
        np.testing.assert_array_equal(read_snapshots(path)[0].data, data)

    @pytest.mark.parametrize(
        "text",
        [
            "SNAPSHOT v1\ndt=1\ncell_weight=1\nlayout=a:1\n1,2\n",
            "SNAPSHOTS v1\ndt=1\nlayout=a:1\n1,2\n",
            "SNAPSHOTS v1\ndt=1\ncell_weight=1\nlayout=a:2\n1,2\n3\n",
            "SNAPSHOTS v1\ndt=1\ncell_weight=1\nlayout=a:1\n1,x\n",
        ],
    )
    def test_malformed(self, tmp_path, text):
        (tmp_path / "bad.csv").write_text(text)
        with pytest.raises(InputError):
            read_snapshots(tmp_path / "bad.csv")


class TestModelFiles:
    def test_round_trip(self, tmp_path):
        model = fit(exchange_snapshot(), 4)
        write_model(tmp_path / "m.txt", model)
        back = read_model(tmp_path / "m.txt")
        for name in ("psi", "lam", "omega", "b"):
            np.testing.assert_array_equal(getattr(back, name), getattr(model, name))
        assert (back.dt, back.layout, back.rank) == (model.dt, model.layout, model.rank)
        assert (back.cell_weight, back.train_columns) == (model.cell_weight, model.train_columns)

    def test_sections(self, tmp_path):
        model = fit(exchange_snapshot(), 3)
        write_model(tmp_path / "m.txt", model)
        lines = (tmp_path / "m.txt").read_text().splitlines()
        assert lines[0] == "DMDMODEL v1"
        assert "rank=3" in lines and "layout=x:2,y:2" in lines
        psi_at = lines.index("PSI")
        assert len(lines) - psi_at - 1 == 4
        assert len(lines[psi_at + 1].split(",")) == 6

    def test_decayed_mode_survives(self, tmp_path):
        model = fit(exchange_snapshot(), 2)
        omega = continuous_eigenvalues(np.array([0.0, 0.5]), 1.0)
        model = model.__class__(**{**model.__dict__, "omega": omega})
        write_model(tmp_path / "m.txt", model)
        assert np.isneginf(read_model(tmp_path / "m.txt").omega[0].real)

    def test_byte_identical(self, tmp_path):
        write_model(tmp_path / "a.txt", fit(exchange_snapshot(), 4))
        write_model(tmp_path / "b.txt", fit(exchange_snapshot(), 4))
        assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()

    def test_truncated_file(self, tmp_path):
        write_model(tmp_path / "m.txt", fit(exchange_snapshot(), 4))
        text = (tmp_path / "m.txt").read_text().splitlines()
        (tmp_path / "m.txt").write_text("\n".join(text[:-1]) + "\n")
        with pytest.raises(InputError, match="PSI"):
            read_model(tmp_path / "m.txt")
