import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lcflow.diagnostics import COLUMNS, DiagnosticsRecord
from lcflow.dynamics import RunConfig, SimState, StepPolicy, run
from lcflow.errors import BadMagic, InvariantViolation, ParseError, VersionMismatch
from lcflow.fields import Grid2D
from lcflow.io import (
    HEADER,
    DiagnosticsWriter,
    read_diagnostics,
    read_snapshot,
    shell_spectra,
    snapshot_bytes,
    write_diagnostics,
    write_snapshot,
)
from lcflow.scenarios import divergence_free_velocity, hemisphere_random_data


@pytest.fixture
def state():
    g = Grid2D(16, 3.0)
    d = hemisphere_random_data(0.5, 3, 1.0, 1, g).director
    return SimState(0.25, divergence_free_velocity(2, 3, 1.0, g), d)


@pytest.fixture
def records(state):
    return run(RunConfig(state, 0.3, policy=StepPolicy("fixed", dt_fixed=0.01))).records


class TestDiagnosticsCsv:
    def test_one_record_two_lines(self, tmp_path, records):
        p = tmp_path / "d.csv"
        write_diagnostics(records[:1], p)
        lines = p.read_text().splitlines()
        assert len(lines) == 2 and lines[0] == ",".join(COLUMNS)

    def test_round_trip_exact(self, tmp_path, records):
        p = tmp_path / "d.csv"
        write_diagnostics(records, p)
        back = read_diagnostics(p)
        assert [r.row() for r in back] == [r.row() for r in records]

    def test_streaming_writer_matches(self, tmp_path, records):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_diagnostics(records, a)
        with DiagnosticsWriter(b) as w:
            for r in records:
                w.write(r)
        assert a.read_text() == b.read_text()

    def test_shuffled_columns_rejected(self, tmp_path, records):
        p = tmp_path / "d.csv"
        write_diagnostics(records, p)
        lines = p.read_text().splitlines()
        cols = lines[0].split(",")
        cols[0], cols[1] = cols[1], cols[0]
        p.write_text("\n".join([",".join(cols)] + lines[1:]))
        with pytest.raises(ParseError, match="header"):
            read_diagnostics(p)

    def test_malformed_row_numbered(self, tmp_path, records):
        p = tmp_path / "d.csv"
        write_diagnostics(records[:3], p)
        lines = p.read_text().splitlines()
        lines[2] = lines[2].replace(",", ",x", 1)
        p.write_text("\n".join(lines))
        with pytest.raises(ParseError, match="row 3"):
            read_diagnostics(p)

    def test_short_row(self, tmp_path, records):
        p = tmp_path / "d.csv"
        write_diagnostics(records[:2], p)
        p.write_text(p.read_text() + "1,2\n")
        with pytest.raises(ParseError, match="row 4"):
            read_diagnostics(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            read_diagnostics(tmp_path / "nope.csv")

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=15, max_size=15))
    def test_any_finite_values_round_trip(self, tmp_path_factory, values):
        p = tmp_path_factory.mktemp("csv") / "d.csv"
        rec = DiagnosticsRecord(*values)
        write_diagnostics([rec], p)
        assert read_diagnostics(p)[0].row() == rec.row()


class TestSnapshots:
    def test_round_trip_bit_identical(self, tmp_path, state):
        p = tmp_path / "s.hfld"
        write_snapshot(state, p)
        back = read_snapshot(p)
        assert back.t == state.t
        assert back.grid == state.grid
        assert np.array_equal(back.u, state.u)
        assert np.array_equal(back.d.values, state.d.values)

    def test_layout(self, state):
        blob = snapshot_bytes(state)
        magic, version, n, L, t, count = HEADER.unpack_from(blob)
        assert (magic, version, n, L, t, count) == (b"HFLD", 1, 16, 3.0, 0.25, 5)
        assert HEADER.size == 32
        first = np.frombuffer(blob, "<f8", count=1, offset=HEADER.size)[0]
        assert first == state.u[0, 0, 0]
        assert len(blob) == 32 + 5 * 16 * 16 * 8

    @pytest.mark.parametrize("cut", [2, 20, 100, -8])
    def test_truncated(self, tmp_path, state, cut):
        p = tmp_path / "s.hfld"
        p.write_bytes(snapshot_bytes(state)[:cut])
        with pytest.raises((ParseError, BadMagic)):
            read_snapshot(p)

    def test_bad_magic(self, tmp_path, state):
        p = tmp_path / "s.hfld"
        p.write_bytes(b"XXXX" + snapshot_bytes(state)[4:])
        with pytest.raises(BadMagic):
            read_snapshot(p)

    def test_version(self, tmp_path, state):
        blob = bytearray(snapshot_bytes(state))
        blob[4] = 2
        p = tmp_path / "s.hfld"
        p.write_bytes(bytes(blob))
        with pytest.raises(VersionMismatch):
            read_snapshot(p)

    def test_drifted_director(self, tmp_path, state):
        blob = bytearray(snapshot_bytes(state))
        off = HEADER.size + 4 * 16 * 16 * 8  # first sample of d3
        value = np.frombuffer(bytes(blob[off : off + 8]), "<f8")[0]
        blob[off : off + 8] = np.array([value + 1e-5], "<f8").tobytes()
        p = tmp_path / "s.hfld"
        p.write_bytes(bytes(blob))
        with pytest.raises(InvariantViolation):
            read_snapshot(p)

    def test_divergent_velocity(self, tmp_path, state):
        blob = bytearray(snapshot_bytes(state))
        off = HEADER.size
        blob[off : off + 8] = np.array([5.0], "<f8").tobytes()
        p = tmp_path / "s.hfld"
        p.write_bytes(bytes(blob))
        with pytest.raises(InvariantViolation):
            read_snapshot(p)

    def test_failed_write_leaves_no_file(self, tmp_path, state):
        p = tmp_path / "missing_dir" / "s.hfld"
        with pytest.raises(OSError):
            write_snapshot(state, p)
        assert not p.exists()


class TestSpectra:
    def test_parseval_normalized(self, state):
        spec = shell_spectra(state)
        g = state.grid
        assert spec[:, 2].sum() == pytest.approx(0.5 * g.cell_area * np.sum(state.u**2), rel=1e-12)
        from lcflow.director import geometry

        assert spec[:, 3].sum() == pytest.approx(0.5 * geometry(state.d).grad_l2_sq, rel=1e-12)

    def test_single_mode_lands_in_its_shell(self):
        from lcflow.fields import DirectorField
        from lcflow.scenarios import taylor_green

        g = Grid2D(32, 2 * np.pi)
        s = SimState(0.0, taylor_green(g, 1.0, 2), DirectorField.constant(g))
        spec = shell_spectra(s)
        # Taylor-Green mode 2 has wavevectors (2, 2): |k| = 2.83 -> shell 3
        assert spec[3, 2] == pytest.approx(spec[:, 2].sum())
