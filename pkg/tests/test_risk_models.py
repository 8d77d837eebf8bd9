import math

import numpy as np
import pytest

from ruinbounds import (
    Deterministic,
    Discrete,
    Exponential,
    ModelA,
    ModelB,
    Normal,
    PiecewisePolyFn,
    RenewalModel,
    RenewalStep,
    RngStream,
    TimeVaryingClaimFamily,
    UnitedBranch,
    UnitedModel,
    check_quasi_periodic,
    cumulant_model_a,
    cumulant_model_b,
    cumulant_united,
    model_to_json,
    parse_model,
    renewal_expected_sums,
    renewal_log_mgf,
    renewal_sup_log_mgf,
    sample,
)
from ruinbounds.risk_models import (
    cumulant_model_a_grid,
    cumulant_model_b_grid,
    united_breakpoint_values,
    united_terminal_slope,
)


def _example3_renewal(n=5):
    return RenewalModel(tuple(
        RenewalStep(increment=Normal(-(27.0 / 64.0) * (2 * k - 1), 1.0)) for k in range(1, n + 1)
    ))


class TestCumulantModelA:
    def test_example1_values(self, example1_model):
        # closed form: a(h, t) = -2 h t^2 + t h / (1 - h)
        assert cumulant_model_a(example1_model, 0.75, 2.0).value == pytest.approx(0.0, abs=1e-10)
        assert cumulant_model_a(example1_model, 0.75, 1.0).value == pytest.approx(1.5, rel=1e-10)
        assert cumulant_model_a(example1_model, 0.0, 7.0).value == 0.0

    def test_divergence(self, example1_model):
        assert cumulant_model_a(example1_model, 1.0, 1.0).diverged
        assert cumulant_model_a(example1_model, 1.5, 0.5).diverged

    def test_closed_form_on_grid(self, example1_model):
        ts = np.linspace(0.0, 2.0, 257)
        for h in (0.25, 0.5, 0.75):
            want = -2.0 * h * ts**2 + ts * h / (1.0 - h)
            got = cumulant_model_a_grid(example1_model, h, ts)
            np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-11)

    def test_negative_arguments_rejected(self, example1_model):
        with pytest.raises(ValueError):
            cumulant_model_a(example1_model, -0.1, 1.0)
        with pytest.raises(ValueError):
            cumulant_model_a(example1_model, 0.1, -1.0)

    def test_convex_in_h(self, example1_model):
        for t in (0.5, 1.5, 2.0):
            hs = np.linspace(0.05, 0.9, 18)
            vals = [cumulant_model_a(example1_model, float(h), t).value for h in hs]
            for i in range(1, len(hs) - 1):
                assert vals[i] <= 0.5 * (vals[i - 1] + vals[i + 1]) + 1e-9

    def test_scaled_claims(self):
        # claims scaled by t: Q(h, t) = (h t) / (1 - h t)
        m = ModelA(
            PiecewisePolyFn.constant(1.0),
            PiecewisePolyFn.constant(0.0),
            TimeVaryingClaimFamily(Exponential(1.0), PiecewisePolyFn((0.0,), ((0.0, 1.0),))),
        )
        from scipy import integrate
        h = 0.4
        want, _ = integrate.quad(lambda x: h * x / (1.0 - h * x), 0.0, 2.0)
        assert cumulant_model_a(m, h, 2.0).value == pytest.approx(want, rel=1e-9)
        assert cumulant_model_a(m, 0.6, 2.0).diverged  # h * scale reaches 1.2 > 1


class TestCumulantModelB:
    def test_reduction_to_model_a(self, example1_model):
        mb = ModelB.without_interest(example1_model)
        rng = np.random.default_rng(0)
        for _ in range(100):
            h = float(rng.uniform(0.0, 0.9))
            t = float(rng.uniform(0.0, 3.0))
            va = cumulant_model_a(example1_model, h, t)
            vb = cumulant_model_b(mb, h, t)
            assert vb.value == pytest.approx(va.value, rel=1e-9, abs=2e-10 + va.error + vb.error)

    def test_linear_discount_closed_form(self, homogeneous_model):
        # a(h,t) = ln((1 - h e^{-dt})/(1 - h))/d - h p (1 - e^{-dt})/d
        d = 0.1
        mb = ModelB(homogeneous_model, PiecewisePolyFn((0.0,), ((0.0, d),)))
        for h, t in [(0.5, 1.0), (0.3, 2.5), (0.8, 4.0)]:
            want = math.log((1 - h * math.exp(-d * t)) / (1 - h)) / d \
                - h * 2.0 * (1 - math.exp(-d * t)) / d
            assert cumulant_model_b(mb, h, t).value == pytest.approx(want, rel=1e-9)

    def test_trivial_zero(self, homogeneous_model):
        mb = ModelB(homogeneous_model, PiecewisePolyFn((0.0,), ((0.0, 0.1),)))
        assert cumulant_model_b(mb, 0.0, 3.0).value == 0.0

    def test_divergence_with_discount(self, homogeneous_model):
        # discounting shrinks the effective argument: h = 1 diverges at t=0
        # regardless, h slightly below 1 stays finite
        mb = ModelB(homogeneous_model, PiecewisePolyFn((0.0,), ((0.0, 0.5),)))
        assert cumulant_model_b(mb, 1.0, 1.0).diverged
        assert not cumulant_model_b(mb, 0.95, 1.0).diverged

    def test_grid_matches_pointwise(self, homogeneous_model):
        mb = ModelB(homogeneous_model, PiecewisePolyFn((0.0,), ((0.0, 0.2),)))
        ts = np.linspace(0.0, 5.0, 65)
        got = cumulant_model_b_grid(mb, 0.6, ts)
        want = [cumulant_model_b(mb, 0.6, float(t)).value for t in ts]
        np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-11)

    def test_discount_validation(self, homogeneous_model):
        with pytest.raises(ValueError, match="nondecreasing"):
            ModelB(homogeneous_model, PiecewisePolyFn((0.0,), ((0.0, -0.1),)))
        with pytest.raises(ValueError, match="vanish"):
            ModelB(homogeneous_model, PiecewisePolyFn((0.0,), ((1.0,),)))


class TestCumulantUnited:
    def test_two_branch_value(self, two_branch_united):
        assert cumulant_united(two_branch_united, 0.5, 3.0).value == pytest.approx(-2.5, rel=1e-12)

    def test_single_branch(self):
        um = UnitedModel((UnitedBranch(0.0, 1.0, 2.0, Exponential(1.0)),))
        # t * (Q(h) - 2h) with Q(0.5) = 1
        assert cumulant_united(um, 0.5, 3.0).value == pytest.approx(0.0, abs=1e-14)

    def test_trivial_h_zero(self, two_branch_united):
        assert cumulant_united(two_branch_united, 0.0, 10.0).value == 0.0

    def test_linear_between_breakpoints(self, two_branch_united):
        for h in (0.2, 0.5, 0.8):
            for (t0, t1) in [(0.0, 2.0), (2.0, 7.0)]:
                mid = 0.5 * (t0 + t1)
                v0 = cumulant_united(two_branch_united, h, t0).value
                v1 = cumulant_united(two_branch_united, h, t1).value
                vm = cumulant_united(two_branch_united, h, mid).value
                assert vm == pytest.approx(0.5 * (v0 + v1), rel=1e-12, abs=1e-12)

    def test_breakpoint_formula(self, two_branch_united):
        # a(h, t_k) = sum_{i <= k} (t_k - t_i) a_i(h), including the first branch
        from ruinbounds.risk_models import branch_cumulant
        h = 0.5
        starts = two_branch_united.start_times
        vals = united_breakpoint_values(two_branch_united, h)
        for k, tk in enumerate(starts):
            want = sum(
                (tk - ti) * branch_cumulant(two_branch_united.branches[i], h)
                for i, ti in enumerate(starts) if ti < tk
            )
            assert vals[k] == pytest.approx(want, rel=1e-12, abs=1e-12)

    def test_terminal_slope(self, two_branch_united):
        # per-branch exponents at h = 0.5: (1 - 2) and (1 - 0.5)
        assert united_terminal_slope(two_branch_united, 0.5) == pytest.approx(-0.5)

    def test_divergence(self, two_branch_united):
        assert cumulant_united(two_branch_united, 1.0, 1.0).diverged
        assert united_terminal_slope(two_branch_united, 1.0) == math.inf


class TestRenewal:
    def test_example3_log_mgf(self):
        m = _example3_renewal()
        assert renewal_log_mgf(m, 1.0, 2) == pytest.approx(-0.6875, rel=1e-13)
        assert renewal_log_mgf(m, 0.0, 5) == 0.0

    def test_iid_log_mgf(self):
        m = RenewalModel.iid(RenewalStep(
            claim=Exponential(1.0), inter_time=Deterministic(1.0), premium_rate=2.0
        ))
        want = 3.0 * (math.log(4.0 / 3.0) - 0.5)
        assert renewal_log_mgf(m, 0.25, 3) == pytest.approx(want, rel=1e-13)

    def test_divergence_propagates(self):
        m = RenewalModel.iid(RenewalStep(
            claim=Exponential(1.0), inter_time=Deterministic(1.0), premium_rate=2.0
        ))
        assert renewal_log_mgf(m, 1.0, 2) == math.inf

    def test_expected_sums(self):
        flat = RenewalModel.iid(RenewalStep(increment=Discrete((-1.0,), (1.0,))))
        assert renewal_expected_sums(flat, 3) == pytest.approx([-1.0, -2.0, -3.0])
        ex3 = _example3_renewal()
        assert renewal_expected_sums(ex3, 2) == pytest.approx([-27.0 / 64.0, -27.0 / 16.0])
        dec = RenewalModel.iid(RenewalStep(
            claim=Exponential(1.0), inter_time=Deterministic(1.0), premium_rate=2.0
        ))
        assert renewal_expected_sums(dec, 2) == pytest.approx([-1.0, -2.0])

    def test_log_mgf_against_monte_carlo(self):
        # small-n sanity: log E exp(h S_n) within 4 standard errors of a
        # direct Monte-Carlo average of exp(h S_n)
        m = RenewalModel.iid(RenewalStep(
            claim=Exponential(2.0), inter_time=Exponential(1.0), premium_rate=1.0
        ))
        h, n, paths = 0.5, 3, 40_000
        vals = np.empty(paths)
        for p in range(paths):
            s = RngStream.from_seed(314, p)
            total = 0.0
            for _ in range(n):
                total += sample(Exponential(2.0), s) - sample(Exponential(1.0), s)
            vals[p] = math.exp(h * total)
        se = vals.std() / math.sqrt(paths)
        want = renewal_log_mgf(m, h, n)
        assert abs(math.exp(want) - vals.mean()) < 4.0 * se

    def test_periodic_extension(self):
        a = RenewalStep(increment=Discrete((-2.0, 1.0), (0.5, 0.5)))
        b = RenewalStep(increment=Discrete((-1.0,), (1.0,)))
        m = RenewalModel((a, b), period=1)  # preperiod [a], then b forever
        assert m.step(1) is a
        assert m.step(2) is b
        assert m.step(7) is b

    def test_non_periodic_step_out_of_range(self):
        m = _example3_renewal(3)
        with pytest.raises(ValueError, match="defines only"):
            m.step(4)

    def test_sup_log_mgf_periodic(self):
        m = RenewalModel.iid(RenewalStep(
            claim=Exponential(1.0), inter_time=Deterministic(1.0), premium_rate=2.0
        ))
        # per-step log-MGF negative for small h: sup attained at n = 1
        h = 0.25
        assert renewal_sup_log_mgf(m, h) == pytest.approx(renewal_log_mgf(m, h, 1))
        # positive per-cycle increment diverges
        bad = RenewalModel.iid(RenewalStep(
            claim=Exponential(1.0), inter_time=Deterministic(1.0), premium_rate=0.5
        ))
        assert renewal_sup_log_mgf(bad, 0.5) == math.inf

    def test_sup_log_mgf_needs_cap_without_period(self):
        m = _example3_renewal(4)
        with pytest.raises(ValueError, match="n_cap"):
            renewal_sup_log_mgf(m, 1.0)
        assert renewal_sup_log_mgf(m, 1.0, n_cap=4) == pytest.approx(
            max(renewal_log_mgf(m, 1.0, n) for n in (1, 2, 3, 4))
        )

    def test_step_validation(self):
        with pytest.raises(ValueError, match="either"):
            RenewalStep()
        with pytest.raises(ValueError, match="either"):
            RenewalStep(claim=Exponential(1.0), inter_time=Deterministic(1.0),
                        increment=Normal(0.0, 1.0))
        with pytest.raises(ValueError, match="nonnegative support"):
            RenewalStep(claim=Normal(0.0, 1.0), inter_time=Deterministic(1.0))


class TestQuasiPeriodicCheck:
    def test_example1_passes(self, example1_model):
        mb = ModelB.without_interest(example1_model)
        rep = check_quasi_periodic(mb, 2.0, [0.25, 0.5, 0.75], np.linspace(0.0, 6.0, 49))
        assert rep.passed
        assert bool(rep)

    def test_decreasing_premium_density_violates(self, example1_model):
        bad = ModelA(
            PiecewisePolyFn.constant(1.0),
            PiecewisePolyFn((0.0, 1.0), ((1.0,), (0.5,))),
            TimeVaryingClaimFamily(Exponential(1.0)),
        )
        rep = check_quasi_periodic(ModelB.without_interest(bad), 1.0, [0.1], [0.0, 0.5])
        assert not rep.passed
        assert rep.first_violation["condition"] == "premium"
        assert rep.first_violation["t"] == 0.0

    def test_pure_periodicity_equalities_pass(self, homogeneous_model):
        mb = ModelB.without_interest(homogeneous_model)
        rep = check_quasi_periodic(mb, 1.5, [0.2, 0.4], np.linspace(0.0, 5.0, 33))
        assert rep.passed

    def test_empty_grids_rejected(self, homogeneous_model):
        mb = ModelB.without_interest(homogeneous_model)
        with pytest.raises(ValueError, match="nonempty"):
            check_quasi_periodic(mb, 1.0, [], [0.0])


class TestWireFormat:
    def test_model_a_round_trip(self, example1_model):
        j = model_to_json(example1_model)
        assert j["model"] == "compound_poisson"
        assert parse_model(j) == example1_model

    def test_model_b_round_trip(self, homogeneous_model):
        mb = ModelB(homogeneous_model, PiecewisePolyFn((0.0,), ((0.0, 0.5),)))
        j = model_to_json(mb)
        assert j["model"] == "discounted"
        assert parse_model(j) == mb

    def test_united_round_trip(self, two_branch_united):
        j = model_to_json(two_branch_united)
        assert j["model"] == "united"
        assert parse_model(j) == two_branch_united

    def test_renewal_round_trip(self):
        m = RenewalModel((
            RenewalStep(claim=Exponential(1.0), inter_time=Deterministic(1.0), premium_rate=2.0),
            RenewalStep(increment=Normal(-1.0, 1.0)),
        ), period=1)
        j = model_to_json(m)
        assert j["model"] == "renewal"
        assert parse_model(j) == m

    def test_unknown_model_kind(self):
        with pytest.raises(ValueError, match="unknown model kind"):
            parse_model({"model": "levy"})

    def test_unknown_keys_rejected(self, example1_model):
        j = model_to_json(example1_model)
        j["spare"] = 1
        with pytest.raises(ValueError, match="unknown keys"):
            parse_model(j)

    def test_united_start_times_validated(self):
        with pytest.raises(ValueError, match="start at time 0"):
            UnitedModel((UnitedBranch(1.0, 1.0, 1.0, Exponential(1.0)),))
