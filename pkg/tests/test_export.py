"""Tests for CSV and JSON export."""

import json
import math

import numpy as np
import pytest

from fracwave import __version__
from fracwave.export import (
    PHASE_COLUMNS,
    format_value,
    manifest,
    snapshot_rows,
    to_json,
    trajectory_rows,
    write_csv,
    write_json,
    write_phase_table,
    write_snapshots,
    write_trajectory,
)
from fracwave.fode import GLOBAL, ProblemParams, SolveOutcome
from fracwave.fracops import SampledPath, TimeMesh
from fracwave.spectral_pde import SpectralField, solve_mild


@pytest.fixture
def scalar_outcome():
    mesh = TimeMesh(T=1.0, N=4)
    return SolveOutcome(trajectory=SampledPath(mesh=mesh, values=1.0 - mesh.nodes), status=GLOBAL)


def _linear_mild(domain):
    coeffs = np.zeros(domain.shape)
    coeffs[(0,) * domain.dimension] = 1.0
    u0 = SpectralField(domain=domain, coeffs=coeffs)
    return solve_mild(
        u0, SpectralField.zeros(domain), ProblemParams(alpha=1.5, gamma=0.6, p=2.0),
        TimeMesh(T=0.5, N=8), nonlinear=False,
    )


class TestFormatValue:
    """Tests for cell formatting."""

    def test_floats_keep_seventeen_digits(self):
        """0.1 prints with full precision."""
        assert format_value(0.1) == "0.10000000000000001"
        assert float(format_value(math.pi)) == math.pi

    @pytest.mark.parametrize(
        "value,text",
        [(None, ""), (True, "true"), (np.bool_(False), "false"), (math.nan, "nan"),
         (-math.inf, "-inf"), (np.int64(3), "3"), ("blowup", "blowup")],
    )
    def test_special_values(self, value, text):
        """None, booleans, non-finite floats and integers have fixed spellings."""
        assert format_value(value) == text


class TestWriteCsv:
    """Tests for the CSV writer."""

    def test_crlf_and_row_count(self, tmp_path):
        """Lines end in CRLF and data rows are counted."""
        path = tmp_path / "table.csv"
        count = write_csv(path, ["a", "b"], [[1, 0.5], [None, "x,y"]])
        assert count == 2
        assert path.read_bytes() == b'a,b\r\n1,0.5\r\n,"x,y"\r\n'


class TestJson:
    """Tests for deterministic JSON."""

    def test_sorted_and_plain(self):
        """Keys are sorted and numpy values become plain JSON."""
        text = to_json({"b": np.float64(1.5), "a": np.arange(3), "c": np.bool_(True)})
        assert text.index('"a"') < text.index('"b"') < text.index('"c"')
        assert json.loads(text) == {"a": [0, 1, 2], "b": 1.5, "c": True}

    def test_non_finite_floats_become_strings(self):
        """inf and nan are not valid JSON numbers."""
        doc = json.loads(to_json({"t_star": math.inf, "fit": [math.nan]}))
        assert doc == {"t_star": "inf", "fit": ["nan"]}

    def test_manifest_echoes_config_and_seed(self, tmp_path):
        """The manifest carries tool, version, config, seed and result."""
        path = tmp_path / "run.json"
        write_json(path, manifest("case", {"schema": 1}, {"observed": "blowup"}, seed=11))
        doc = json.loads(path.read_text())
        assert doc["tool"] == "fracwave"
        assert doc["version"] == __version__
        assert doc["kind"] == "case"
        assert doc["seed"] == 11
        assert doc["config"] == {"schema": 1}
        assert doc["result"]["observed"] == "blowup"


class TestTrajectories:
    """Tests for scalar trajectory export."""

    def test_rows_without_memory(self, scalar_outcome):
        """Missing memory values export as nan."""
        rows = trajectory_rows(scalar_outcome)
        assert len(rows) == 5
        assert rows[0][:2] == [0.0, 1.0]
        assert math.isnan(rows[0][2])

    def test_write_with_memory(self, tmp_path, scalar_outcome):
        """The memory column is written when supplied."""
        path = tmp_path / "w.csv"
        count = write_trajectory(path, scalar_outcome, memory=np.linspace(0.0, 1.0, 5))
        lines = path.read_text().splitlines()
        assert count == 5
        assert lines[0] == "t,w,memory"
        assert lines[-1] == "1,0,1"


class TestSnapshots:
    """Tests for field snapshot export."""

    def test_one_dimensional_snapshot(self, small_domain):
        """The t = 0 snapshot reproduces sin x on the grid."""
        outcome = _linear_mild(small_domain)
        rows = snapshot_rows(outcome, [0.0])
        x = np.array([r[1] for r in rows])
        u = np.array([r[2] for r in rows])
        assert len(rows) == small_domain.axis.size
        np.testing.assert_allclose(u, np.sin(x), atol=1e-12)

    def test_two_dimensional_snapshot_uses_mid_slice(self, small_domain_2d):
        """2D snapshots export the slice y = pi/2."""
        outcome = _linear_mild(small_domain_2d)
        rows = snapshot_rows(outcome, [0.0])
        u = np.array([r[2] for r in rows])
        x = np.array([r[1] for r in rows])
        np.testing.assert_allclose(u, np.sin(x), atol=1e-12)

    def test_nearest_node_is_used(self, tmp_path, small_domain):
        """Requested times snap to the nearest mesh node."""
        outcome = _linear_mild(small_domain)
        path = tmp_path / "snap.csv"
        count = write_snapshots(path, outcome, [0.26, 0.5])
        assert count == 2 * small_domain.axis.size
        times = {float(line.split(",")[0]) for line in path.read_text().splitlines()[1:]}
        assert times == {0.25, 0.5}


class TestPhaseTable:
    """Tests for sweep tables."""

    def test_columns_and_missing_values(self, tmp_path):
        """Rows follow the fixed column order, missing cells are empty."""
        path = tmp_path / "phase.csv"
        rows = [{"alpha": 1.5, "gamma": 0.6, "p": 2.0, "scale": 1.0, "prediction": "blowup", "agreement": True}]
        assert write_phase_table(path, rows) == 1
        header, line = path.read_text().splitlines()
        assert header.split(",") == PHASE_COLUMNS
        assert line == "1.5,0.59999999999999998,2,1,blowup,,,,true,"
