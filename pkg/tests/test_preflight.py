"""Tests for preflight configuration checks."""

import os
from unittest.mock import patch

from rich.console import Console

from fracwave.config import SCHEMA_VERSION, CaseConfig, RateWindow, SweepConfig
from fracwave.preflight import (
    CheckResult,
    case_checks,
    check_domain,
    check_log_level,
    check_mesh,
    check_output,
    check_problem,
    check_rate_windows,
    check_test_exponent,
    run_preflight,
    sweep_checks,
)


def _case(**overrides):
    body = {"schema": SCHEMA_VERSION, "problem": {"alpha": 1.5, "gamma": 0.6, "p": 2.0}}
    body.update(overrides)
    return CaseConfig.from_dict(body)


class TestCheckProblem:
    """Tests for order and coefficient ranges."""

    def test_passes_for_valid_orders(self):
        """A standard parameter triple passes."""
        assert check_problem(1.5, 0.6, 2.0).passed is True

    def test_collects_every_problem(self):
        """All violations are listed in one message."""
        result = check_problem(2.5, -0.1, 1.0)
        assert result.passed is False
        assert "alpha" in result.message
        assert "gamma" in result.message
        assert "p=" in result.message
        assert result.fix_instruction is not None


class TestCheckMesh:
    """Tests for mesh settings."""

    def test_rejects_coarse_base_mesh(self):
        """Fewer than 8 base steps fail."""
        result = check_mesh(_case(mesh={"base_n": 4}))
        assert result.passed is False
        assert "base_n" in result.message

    def test_rejects_nonpositive_horizon(self):
        """The horizon must be positive."""
        assert check_mesh(_case(mesh={"horizon": 0.0})).passed is False

    def test_rejects_threshold_at_most_one(self):
        """A threshold of 1 cannot separate blow-up from the data."""
        assert check_mesh(_case(mesh={"threshold": 1.0})).passed is False

    def test_passes_with_defaults(self):
        """The default mesh passes."""
        assert check_mesh(_case()).passed is True


class TestCheckDomain:
    """Tests for the spectral domain and de-aliasing margin."""

    def test_aliasing_fails_only_for_pde_solver(self):
        """A small grid factor matters only when the pde solver runs."""
        domain = {"dimension": 1, "modes": 16, "grid_factor": 2}
        pde = _case(solver="pde", problem={"alpha": 1.5, "gamma": 0.6, "p": 4.0}, domain=domain)
        fode = _case(solver="fode", problem={"alpha": 1.5, "gamma": 0.6, "p": 4.0}, domain=domain)
        result = check_domain(pde)
        assert result.passed is False
        assert "grid_factor" in result.fix_instruction
        assert check_domain(fode).passed is True

    def test_rejects_three_dimensions(self):
        """Only 1D and 2D sine bases exist."""
        assert check_domain(_case(domain={"dimension": 3})).passed is False


class TestCheckTestExponent:
    """Tests for the test-function exponent."""

    def test_default_passes(self):
        """No l means the default, which is always large enough."""
        assert check_test_exponent(_case()).passed is True

    def test_small_exponent_fails(self):
        """l = 4 is below p sigma / (p - 1) = 4.2."""
        result = check_test_exponent(_case(l=4))
        assert result.passed is False
        assert "4.2" in result.message

    def test_large_exponent_passes(self):
        """l = 6 is enough."""
        assert check_test_exponent(_case(l=6)).passed is True


class TestCheckRateWindows:
    """Tests for decay fit windows."""

    def test_window_beyond_horizon_fails(self):
        """Windows must end inside the horizon."""
        result = check_rate_windows([RateWindow(t_lo=1.0, t_hi=20.0)], horizon=10.0)
        assert result.passed is False

    def test_unknown_sampling_fails(self):
        """Only 'all' and 'minima' are supported."""
        result = check_rate_windows([RateWindow(t_lo=1.0, t_hi=5.0, along="maxima")], horizon=10.0)
        assert result.passed is False
        assert "maxima" in result.message

    def test_no_windows_pass(self):
        """An empty window list is fine."""
        assert check_rate_windows([], horizon=10.0).passed is True


class TestCheckOutput:
    """Tests for output locations."""

    def test_console_only(self):
        """No --out needs no directory."""
        assert check_output(None).passed is True

    def test_existing_directory_passes(self, tmp_path):
        """A writable parent directory passes."""
        assert check_output(tmp_path / "report.json").passed is True

    def test_missing_directory_fails_with_mkdir(self, tmp_path):
        """A missing parent tells the user how to create it."""
        result = check_output(tmp_path / "missing" / "report.json")
        assert result.passed is False
        assert "mkdir -p" in result.fix_instruction


class TestCheckLogLevel:
    """Tests for the FRACWAVE_LOG variable."""

    def test_known_level_passes(self):
        """debug is a level."""
        with patch.dict(os.environ, {"FRACWAVE_LOG": "debug"}), \
             patch("fracwave.preflight.load_dotenv"):
            assert check_log_level().passed is True

    def test_unset_passes(self):
        """Unset means the warning default."""
        with patch.dict(os.environ, {}, clear=True), \
             patch("fracwave.preflight.load_dotenv"):
            result = check_log_level()
        assert result.passed is True
        assert result.message == "warning"

    def test_unknown_level_fails(self):
        """A misspelled level fails with the accepted names."""
        with patch.dict(os.environ, {"FRACWAVE_LOG": "verbose"}), \
             patch("fracwave.preflight.load_dotenv"):
            result = check_log_level()
        assert result.passed is False
        assert "debug" in result.fix_instruction


class TestAggregates:
    """Tests for case and sweep check lists."""

    def test_case_checks_cover_every_section(self):
        """A valid case produces only passing checks."""
        with patch.dict(os.environ, {}, clear=True), \
             patch("fracwave.preflight.load_dotenv"):
            results = case_checks(_case())
        assert [r.name for r in results] == [
            "Problem", "Mesh", "Domain", "Test exponent", "Rate windows", "Output", "Logging",
        ]
        assert all(r.passed for r in results)

    def test_sweep_checks_report_invalid_cells(self):
        """Invalid grid cells are counted with the first one named."""
        config = SweepConfig(alphas=[1.5, 2.5], gammas=[0.5], ps=[2.0, 0.5])
        results = sweep_checks(config)
        grid = results[0]
        assert grid.name == "Grid"
        assert grid.passed is False
        assert grid.message.startswith("3 cell(s) invalid")

    def test_sweep_checks_validate_template(self):
        """A broken template is reported instead of raised."""
        config = SweepConfig(alphas=[1.5], gammas=[0.5], ps=[2.0], template={"solver": "fem"})
        results = sweep_checks(config)
        template = [r for r in results if r.name == "Template"]
        assert template and template[0].passed is False


class TestRunPreflight:
    """Tests for the aggregate preflight display."""

    def test_returns_true_when_all_checks_pass(self):
        """run_preflight returns True and prints nothing when everything passes."""
        console = Console(record=True, width=120)
        results = [CheckResult(name="Problem", passed=True, message="ok")]
        assert run_preflight(results, console) is True
        assert console.export_text() == ""

    def test_returns_false_and_shows_fix(self):
        """run_preflight returns False and shows the fix instructions."""
        console = Console(record=True, width=120)
        results = [
            CheckResult(name="Problem", passed=True, message="ok"),
            CheckResult(name="Mesh", passed=False, message="too coarse", fix_instruction="Use more steps."),
        ]
        assert run_preflight(results, console) is False
        text = console.export_text()
        assert "Invalid Configuration" in text
        assert "Use more steps." in text
