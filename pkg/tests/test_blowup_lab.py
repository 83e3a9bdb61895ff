"""Tests for regime classification, explicit constants and sweeps."""

import math

import numpy as np
import pytest

from fracwave.blowup_lab import (
    BLOWUP_VERDICT,
    GLOBAL_VERDICT,
    OUTSIDE_VERDICT,
    UNCONFIRMED,
    LabRunner,
    MomentData,
    RegimePrediction,
    RegimeReport,
    calibrate_constants,
    classify_regime,
    default_test_exponent,
    remark_criterion,
    scalar_reduction,
)
from fracwave.config import SCHEMA_VERSION, CaseConfig, SweepConfig
from fracwave.errors import DomainError, IndeterminateError, StepFailureError
from fracwave.fode import BLOWUP, GLOBAL, ProblemParams, ScalarIVP, detect_blowup


def _case(**overrides):
    body = {
        "schema": SCHEMA_VERSION,
        "problem": {"alpha": 1.5, "gamma": 0.6, "p": 2.0},
        "mesh": {"horizon": 10.0, "base_n": 128},
        "initial": {"u0": [[1, 10.0]]},
    }
    body.update(overrides)
    return CaseConfig.from_dict(body)


def _report(config, observed, decay=None):
    params = config.problem.to_params()
    moments = MomentData(m0=1.0)
    return RegimeReport(
        params=params, moments=moments,
        prediction=classify_regime(params, moments),
        solver=config.solver, observed=observed, decay_observed=decay,
    )


class TestClassifyRegime:
    """Tests for matching parameters against the theorem cases."""

    @pytest.mark.parametrize(
        "alpha,gamma,p,m1,case",
        [
            (1.5, 0.6, 2.0, 0.0, "blowup-a"),
            (1.5, 0.2, 1.2, 0.0, "blowup-b"),
            (1.5, 0.5, 1.5, 1.0, "blowup-c"),
            (1.8, 0.1, 1.1, 1.0, "blowup-d"),
        ],
    )
    def test_blowup_cases(self, alpha, gamma, p, m1, case):
        """Each blow-up case is recognized with its tag."""
        prediction = classify_regime(ProblemParams(alpha=alpha, gamma=gamma, p=p), MomentData(m0=1.0, m1=m1))
        assert prediction.verdict == BLOWUP_VERDICT
        assert prediction.theorem_case == case

    def test_wave_case(self):
        """alpha = 2 with p (1 - gamma) = 1 sits on the blow-up side."""
        prediction = classify_regime(
            ProblemParams(alpha=2.0, gamma=0.5, p=2.0), MomentData(m0=1.0), alpha_is_2=True,
        )
        assert prediction.verdict == BLOWUP_VERDICT
        assert prediction.theorem_case == "blowup-wave"

    @pytest.mark.parametrize(
        "alpha,gamma,p,m1,case",
        [
            (1.5, 0.6, 4.0, 0.0, "global-i"),
            (1.5, 0.2, 2.0, 0.0, "global-ii"),
            (1.5, 0.1, 1.3, 1.0, "global-iii"),
        ],
    )
    def test_small_data_global_cases(self, alpha, gamma, p, m1, case):
        """Supercritical powers are predicted global for small data."""
        prediction = classify_regime(ProblemParams(alpha=alpha, gamma=gamma, p=p), MomentData(m0=1.0, m1=m1))
        assert prediction.verdict == GLOBAL_VERDICT
        assert prediction.theorem_case == case

    @pytest.mark.parametrize("m1", [0.0, 1.0])
    def test_supercritical_wave_is_outside(self, m1):
        """alpha = 2 with p (1 - gamma) > 1 has no global case to match."""
        prediction = classify_regime(
            ProblemParams(alpha=2.0, gamma=0.5, p=4.0), MomentData(m0=1.0, m1=m1), alpha_is_2=True,
        )
        assert prediction.verdict == OUTSIDE_VERDICT
        assert prediction.theorem_case is None

    def test_negative_velocity_moment_is_outside(self):
        """A negative m1 below the Fujita exponent matches no case."""
        prediction = classify_regime(ProblemParams(alpha=1.5, gamma=0.2, p=1.2), MomentData(m0=1.0, m1=-1.0))
        assert prediction.verdict == OUTSIDE_VERDICT
        assert prediction.theorem_case is None

    def test_hypotheses_are_recorded(self):
        """The critical product is reported with its truth value."""
        prediction = classify_regime(ProblemParams(alpha=1.5, gamma=0.6, p=2.0), MomentData(m0=1.0))
        first = prediction.hypotheses_used[0]
        assert first.value == pytest.approx(0.8)
        assert first.holds is True
        assert any(h.name.startswith("p < 1+gamma") for h in prediction.hypotheses_used)

    def test_rejects_inconsistent_alpha_flag(self):
        """alpha_is_2 needs alpha equal to 2."""
        with pytest.raises(DomainError):
            classify_regime(ProblemParams(alpha=1.5, gamma=0.6, p=2.0), MomentData(m0=1.0), alpha_is_2=True)

    def test_prediction_serializes(self):
        """to_dict nests the hypotheses."""
        doc = classify_regime(ProblemParams(alpha=1.5, gamma=0.6, p=2.0), MomentData(m0=1.0)).to_dict()
        assert doc["verdict"] == BLOWUP_VERDICT
        assert isinstance(doc["hypotheses_used"], list)


class TestConstants:
    """Tests for the explicit criterion constants."""

    def test_default_exponent(self):
        """ceil(p sigma / (p - 1)) + 1 with sigma = 2.1, p = 2 is 6."""
        assert default_test_exponent(ProblemParams(alpha=1.5, gamma=0.6, p=2.0)) == 6

    def test_constants_are_positive(self):
        """K1 and K2 are positive with the default exponent."""
        constants = calibrate_constants(ProblemParams(alpha=1.5, gamma=0.6, p=2.0))
        assert constants.l == 6
        assert constants.K1 > 0
        assert constants.K2 > 0
        assert constants.integral_weight == pytest.approx(0.5)
        assert constants.derivation_trace["p_conjugate"] == pytest.approx(2.0)

    def test_first_constant_scales_with_damping(self):
        """K1 carries a^(p/(p-1)), K2 does not depend on a."""
        base = calibrate_constants(ProblemParams(alpha=1.5, gamma=0.6, p=2.0, a=1.0))
        doubled = calibrate_constants(ProblemParams(alpha=1.5, gamma=0.6, p=2.0, a=2.0))
        assert doubled.K1 == pytest.approx(4.0 * base.K1, rel=1e-12)
        assert doubled.K2 == pytest.approx(base.K2, rel=1e-12)

    @pytest.mark.parametrize("p", [2.0, 3.0])
    def test_constants_scale_with_forcing_coefficient(self, p):
        """log K1 and log K2 fall with slope -1/(p-1) in log b."""
        bs = np.array([1.0, 2.0, 4.0])
        constants = [calibrate_constants(ProblemParams(alpha=1.5, gamma=0.6, p=p, b=b)) for b in bs]
        k1_slope = np.polyfit(np.log(bs), np.log([c.K1 for c in constants]), 1)[0]
        k2_slope = np.polyfit(np.log(bs), np.log([c.K2 for c in constants]), 1)[0]
        assert k1_slope == pytest.approx(-1.0 / (p - 1.0), abs=1e-6)
        assert k2_slope == pytest.approx(-1.0 / (p - 1.0), abs=1e-6)

    def test_weights_match_gamma_ratios(self):
        """c0 = Gamma(l+1)/Gamma(l+2-sigma)."""
        constants = calibrate_constants(ProblemParams(alpha=1.5, gamma=0.6, p=2.0), l=6)
        assert constants.w0_weight == pytest.approx(math.gamma(7.0) / math.gamma(5.9), rel=1e-12)
        assert constants.w1_weight == pytest.approx(math.gamma(7.0) / math.gamma(6.9), rel=1e-12)

    def test_rejects_small_exponent(self):
        """l below p sigma / (p - 1) leaves divergent integrals."""
        with pytest.raises(DomainError):
            calibrate_constants(ProblemParams(alpha=1.5, gamma=0.6, p=2.0), l=4)

    def test_rejects_zero_forcing_coefficient(self):
        """b = 0 gives no absorbing term."""
        with pytest.raises(DomainError):
            calibrate_constants(ProblemParams(alpha=1.5, gamma=0.6, p=2.0, b=0.0))


class TestRemarkCriterion:
    """Tests for the sufficient blow-up-before-T condition."""

    def test_large_data_satisfies_criterion(self):
        """A huge first moment beats both constants at T = 1."""
        params = ProblemParams(alpha=1.5, gamma=0.6, p=2.0)
        constants = calibrate_constants(params)
        assert remark_criterion(1.0, MomentData(m0=1e8), constants, params) is True

    def test_tiny_data_fails_criterion(self):
        """Tiny data cannot certify blow-up."""
        params = ProblemParams(alpha=1.5, gamma=0.6, p=2.0)
        constants = calibrate_constants(params)
        assert remark_criterion(1.0, MomentData(m0=1e-8), constants, params) is False

    def test_rejects_nonpositive_horizon(self):
        """T must be positive."""
        params = ProblemParams(alpha=1.5, gamma=0.6, p=2.0)
        constants = calibrate_constants(params)
        with pytest.raises(DomainError):
            remark_criterion(0.0, MomentData(m0=1.0), constants, params)


class TestCriterionAgainstSimulation:
    """Tests that data certified by the criterion does blow up before T."""

    @pytest.mark.slow
    @pytest.mark.parametrize(
        "alpha,gamma,p,T",
        [
            (1.5, 0.6, 2.0, 5.0),
            (1.8, 0.4, 2.0, 5.0),
            (2.0, 0.5, 2.0, 5.0),
        ],
    )
    def test_certified_data_blows_up_before_horizon(self, alpha, gamma, p, T):
        """Three times the smallest certified m0 crosses the threshold before T on every mesh."""
        params = ProblemParams(alpha=alpha, gamma=gamma, p=p)
        constants = calibrate_constants(params)
        right = (
            constants.K1 * T ** (params.sigma - p * gamma / (p - 1.0))
            + constants.K2 * T ** (-params.sigma / (p - 1.0))
        )
        m0 = 3.0 * right / constants.w0_weight
        assert remark_criterion(T, MomentData(m0=m0), constants, params) is True

        outcome = detect_blowup(ScalarIVP(params, w0=m0), horizon=T, base_n=256)
        assert outcome.status == BLOWUP
        assert outcome.t_star_estimate < T
        assert all(crossing is not None and crossing < T for _, crossing in outcome.refinement_history)


class TestScalarReduction:
    """Tests for the eigenfunction reduction."""

    def test_reduction_uses_first_eigenvalue(self):
        """a becomes lambda_1, b becomes 1 and the moments become the data."""
        ivp = scalar_reduction(
            ProblemParams(alpha=1.5, gamma=0.6, p=2.0, a=7.0, b=3.0),
            MomentData(m0=0.4, m1=0.2),
            first_eigenvalue=2.0,
        )
        assert ivp.params.a == 2.0
        assert ivp.params.b == 1.0
        assert ivp.params.alpha == 1.5
        assert (ivp.w0, ivp.w1) == (0.4, 0.2)


class TestRunCase:
    """Tests for single regime cases."""

    def test_blowup_case_agrees(self):
        """Large data in the fractional blow-up case is observed to blow up."""
        report = LabRunner().run_case(_case())
        assert report.verdict == BLOWUP_VERDICT
        assert report.prediction.theorem_case == "blowup-a"
        assert report.observed == BLOWUP
        assert report.agreement is True
        assert 0.0 < report.t_star <= 10.0
        assert report.moments.m0 == pytest.approx(10.0 * math.pi / 4.0, rel=1e-12)

    def test_small_data_case_is_global(self):
        """Tiny data with p = 4 is observed global and fits are attempted."""
        config = _case(
            problem={"alpha": 1.5, "gamma": 0.6, "p": 4.0},
            mesh={"horizon": 20.0, "base_n": 64},
            initial={"u0": [[1, 1e-3]]},
            rate_windows=[{"t_lo": 2.0, "t_hi": 20.0}],
        )
        report = LabRunner().run_case(config)
        assert report.verdict == GLOBAL_VERDICT
        assert report.observed == GLOBAL
        assert report.agreement is True
        assert isinstance(report.decay_observed, bool)
        assert len(report.rate_fits) == 1
        assert "exponent" in report.rate_fits[0] or "error" in report.rate_fits[0]

    def test_indeterminate_refinement_is_unconfirmed(self, mocker):
        """Inconsistent refinement is recorded, not raised."""
        mocker.patch(
            "fracwave.blowup_lab.detect_blowup",
            side_effect=IndeterminateError("crossings disagree", crossing_times=[1.0, None, None]),
        )
        report = LabRunner().run_case(_case(criterion_horizons=[1.0]))
        assert report.observed == UNCONFIRMED
        assert report.agreement is None
        assert report.error["error"] == "indeterminate"
        assert report.criterion[0]["T"] == 1.0
        assert report.criterion[0]["consistent"] is None

    def test_step_failure_is_unconfirmed(self, mocker):
        """A corrector failure also leaves the case unconfirmed."""
        mocker.patch(
            "fracwave.blowup_lab.detect_blowup",
            side_effect=StepFailureError("no convergence", node_index=3),
        )
        report = LabRunner().run_case(_case())
        assert report.observed == UNCONFIRMED
        assert report.error["details"]["node_index"] == 3

    def test_report_serializes(self, mocker):
        """to_dict carries every report field."""
        mocker.patch(
            "fracwave.blowup_lab.detect_blowup",
            side_effect=IndeterminateError("crossings disagree", crossing_times=[1.0, None, None]),
        )
        doc = LabRunner().run_case(_case()).to_dict()
        assert set(doc) == {
            "params", "moments", "prediction", "theorem_case", "hypotheses", "solver",
            "observed", "t_star", "decay_observed", "agreement", "rate_fits",
            "criterion", "constants", "refinement_history", "error",
        }
        assert doc["prediction"] == BLOWUP_VERDICT
        assert doc["params"]["p"] == 2.0


class TestFindGlobalScale:
    """Tests for halving the data until a global run appears."""

    def test_halves_until_global(self, mocker):
        """The first decaying global scale is returned."""
        config = _case()
        mocker.patch.object(
            LabRunner, "run_case",
            side_effect=[_report(config, BLOWUP), _report(config, BLOWUP), _report(config, GLOBAL, decay=True)],
        )
        scale, attempts = LabRunner().find_global_scale(config)
        assert scale == pytest.approx(0.25)
        assert [a[0] for a in attempts] == [1.0, 0.5, 0.25]
        assert attempts[-1][1] == GLOBAL

    def test_gives_up_after_max_halvings(self, mocker):
        """No decaying global run within the budget returns None."""
        config = _case()
        mocker.patch.object(LabRunner, "run_case", return_value=_report(config, BLOWUP))
        scale, attempts = LabRunner().find_global_scale(config, max_halvings=2)
        assert scale is None
        assert len(attempts) == 3


class TestSweep:
    """Tests for parameter sweeps."""

    @pytest.fixture
    def sweep_config(self):
        return SweepConfig.from_dict({
            "schema": SCHEMA_VERSION,
            "alphas": [1.5],
            "gammas": [0.6],
            "ps": [2.0, 3.0, 4.0],
            "template": {"mesh": {"horizon": 5.0, "base_n": 32}},
        })

    def test_rows_in_grid_order_with_progress(self, mocker, sweep_config):
        """Rows follow the grid and progress is reported per cell."""

        def fake_run(config):
            observed = BLOWUP if config.problem.p < 3.0 else GLOBAL
            report = _report(config, observed)
            report.agreement = True
            return report

        mocker.patch.object(LabRunner, "run_case", side_effect=fake_run)
        progress = []
        rows = LabRunner(max_workers=2, on_progress=lambda i, n, label: progress.append((i, n))).sweep(sweep_config)
        assert [row["p"] for row in rows] == [2.0, 3.0, 4.0]
        assert rows[0]["prediction"] == BLOWUP_VERDICT
        assert rows[2]["prediction"] == GLOBAL_VERDICT
        assert rows[2]["observed"] == GLOBAL
        assert progress == [(1, 3), (2, 3), (3, 3)]

    def test_cell_failure_becomes_row(self, mocker, sweep_config):
        """A raising cell is reported with its error kind."""

        def fake_run(config):
            if config.problem.p == 3.0:
                raise DomainError("bad cell")
            return _report(config, BLOWUP)

        mocker.patch.object(LabRunner, "run_case", side_effect=fake_run)
        rows = LabRunner().sweep(sweep_config)
        assert len(rows) == 3
        assert rows[1]["error"] == "domain"
        assert rows[1]["prediction"] is None
        assert rows[0]["error"] is None

    def test_invalid_cell_parameters_become_rows(self, sweep_config):
        """p <= 1 fails validation inside the cell, not the sweep."""
        sweep_config.ps = [0.5]
        rows = LabRunner().sweep(sweep_config)
        assert rows[0]["error"] == "domain"

    def test_empty_grid(self):
        """No cells give no rows."""
        config = SweepConfig(alphas=[], gammas=[0.5], ps=[2.0])
        assert LabRunner().sweep(config) == []

    def test_prediction_type(self):
        """RegimePrediction defaults to no hypotheses."""
        assert RegimePrediction(OUTSIDE_VERDICT, None).hypotheses_used == []
