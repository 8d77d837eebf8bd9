import math

import numpy as np
import pytest
from conftest import min_claim_abscissa, random_renewal

from ruinbounds import (
    Deterministic,
    Discrete,
    Exponential,
    Normal,
    RenewalModel,
    RenewalStep,
    TruncationParams,
    a_n_functional,
    b_n_functional,
    c_m_constant,
    corollary8_bound,
    corollary9_bound,
    corollary10_search,
    m_m_envelope,
    renewal_expected_sums,
    renewal_log_mgf,
)
from ruinbounds.renewal_bounds import (
    HypothesisViolationError,
    NoCertificateError,
    UnsupportedFormError,
)


def _iid(claim, inter, p):
    return RenewalModel.iid(RenewalStep(claim=claim, inter_time=inter, premium_rate=p))


def _example3(n=6):
    return RenewalModel(tuple(
        RenewalStep(increment=Normal(-(27.0 / 64.0) * (2 * k - 1), 1.0)) for k in range(1, n + 1)
    ))


class TestDriftEnvelope:
    def test_flat_negative_drift(self):
        m = RenewalModel.iid(RenewalStep(increment=Discrete((-1.0,), (1.0,))))
        assert c_m_constant(m, 3) == pytest.approx(2.0)

    def test_zero_for_flat_expectations(self):
        m = RenewalModel.iid(RenewalStep(increment=Discrete((-1.0, 1.0), (0.5, 0.5))))
        assert c_m_constant(m, 5) == 0.0

    def test_example3(self):
        assert c_m_constant(_example3(), 3) == pytest.approx(27.0 / 8.0)

    def test_envelope_at_zero_h(self):
        assert m_m_envelope(_iid(Exponential(1.0), Deterministic(1.0), 2.0), 0.0, 4) == 1.0

    def test_example3_envelope(self):
        # log E exp(S_n) = -(27/64) n^2 + n / 2: n = 1 wins at h = 1
        want = math.exp(-27.0 / 64.0 + 0.5)
        assert m_m_envelope(_example3(), 1.0, 2) == pytest.approx(want, rel=1e-12)

    def test_geometric_decay_max_at_first(self):
        m = _iid(Exponential(1.0), Deterministic(1.0), 2.0)
        h = 0.25
        per = math.exp(renewal_log_mgf(m, h, 1))
        assert per < 1.0
        assert m_m_envelope(m, h, 4) == pytest.approx(per, rel=1e-12)

    def test_lemma2_inequality_randomized(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            m = random_renewal(rng)
            cap = min(min_claim_abscissa(m), 4.0)
            for h in np.linspace(0.1, 0.9, 5) * cap:
                mi = int(rng.integers(1, 7))
                env = m_m_envelope(m, float(h), mi)
                if math.isinf(env):
                    continue
                rhs = math.exp(h * c_m_constant(m, mi) + renewal_log_mgf(m, float(h), mi))
                assert env <= rhs * (1.0 + 1e-9)


class TestTruncatedFunctionals:
    def test_tail_sum_below_support(self):
        m = _iid(Exponential(1.0), Deterministic(1.0), 1.0)
        assert a_n_functional(m, 2.0, 10) == 0.0

    def test_tail_sum_exponential(self):
        m = _iid(Exponential(1.0), Exponential(1.0), 1.0)
        assert a_n_functional(m, 1.0, 3) == pytest.approx(3.0 * 2.0 * math.exp(-1.0), rel=1e-12)

    def test_tail_sum_at_zero_is_premium_mean(self):
        m = RenewalModel((
            RenewalStep(claim=Deterministic(0.0), inter_time=Exponential(1.0), premium_rate=2.0),
            RenewalStep(claim=Deterministic(0.0), inter_time=Deterministic(0.5), premium_rate=1.0),
        ), period=2)
        assert a_n_functional(m, 0.0, 2) == pytest.approx(2.0 + 0.5)

    def test_b_premium_only(self):
        m = _iid(Deterministic(0.0), Deterministic(1.0), 1.0)
        assert b_n_functional(m, 1.0, 2.0, 4) == pytest.approx(2.0)

    def test_b_claims_only(self):
        m = _iid(Exponential(1.0), Deterministic(1.0), 0.0)
        assert b_n_functional(m, 0.5, 0.0, 1) == pytest.approx(2.0, rel=1e-12)

    def test_unsupported_direct_steps(self):
        with pytest.raises(UnsupportedFormError):
            a_n_functional(_example3(), 1.0, 2)
        with pytest.raises(UnsupportedFormError):
            b_n_functional(_example3(), 0.5, 1.0, 2)

    def test_a_nonincreasing_in_c(self):
        m = _iid(Exponential(1.0), Exponential(1.0), 2.0)
        cs = np.linspace(0.0, 6.0, 13)
        vals = [a_n_functional(m, float(c), 4) for c in cs]
        assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))

    def test_b_monotone_in_exponent_cap(self):
        # B_n(h, C) <= B_n(H, C) for h <= H: the Taylor-remainder monotonicity
        rng = np.random.default_rng(8)
        for _ in range(50):
            m = random_renewal(rng)
            cap = min(min_claim_abscissa(m), 4.0)
            c = float(rng.uniform(0.0, 3.0))
            hs = np.linspace(0.2, 0.95, 5) * cap
            vals = [b_n_functional(m, float(h), c, 4) for h in hs]
            finite = [v for v in vals if math.isfinite(v)]
            assert all(b >= a - 1e-10 for a, b in zip(finite, finite[1:]))

    def test_master_inequality_randomized(self):
        # E exp(h S_n) <= exp(h E S_n + h A_n(C) + h^2 B_n(h, C))
        rng = np.random.default_rng(9)
        for _ in range(200):
            m = random_renewal(rng)
            cap = min(min_claim_abscissa(m), 4.0)
            h = float(rng.uniform(0.1, 0.9) * cap)
            c = float(rng.uniform(0.0, 4.0))
            n = int(rng.integers(1, 8))
            lhs = renewal_log_mgf(m, h, n)
            if math.isinf(lhs):
                continue
            es = renewal_expected_sums(m, n)[-1]
            rhs = h * es + h * a_n_functional(m, c, n) + h * h * b_n_functional(m, h, c, n)
            assert lhs <= rhs + 1e-9 * (1.0 + abs(rhs))

    def test_splitting_inequality_eventually_periodic(self):
        # sup_n E exp(h S_n) <= M_m(h) * max(1, sup_{n>m} E exp(h (S_n - S_m)))
        rng = np.random.default_rng(10)
        checked = 0
        for _ in range(100):
            m = random_renewal(rng)
            cap = min(min_claim_abscissa(m), 4.0)
            h = float(rng.uniform(0.1, 0.7) * cap)
            logs = []
            acc = 0.0
            diverged = False
            for n in range(1, 51):
                c = m.step(n).log_mgf(h)
                if math.isinf(c):
                    diverged = True
                    break
                acc += c
                logs.append(acc)
            if diverged:
                continue
            mi = int(rng.integers(1, 6))
            lhs = max(math.exp(v) for v in logs)
            tail = max(math.exp(v - logs[mi - 1]) for v in logs[mi:]) if len(logs) > mi else 1.0
            rhs = m_m_envelope(m, h, mi) * max(1.0, tail)
            assert lhs <= rhs * (1.0 + 1e-9)
            checked += 1
        assert checked >= 50


class TestCorollary8:
    def test_iid_certificate(self):
        m = _iid(Exponential(1.0), Deterministic(1.0), 2.0)
        rep = corollary8_bound(m, TruncationParams(C=2.0, H=0.25, m=1), h=0.25, n_max=30)
        assert rep.corollary == 8
        assert rep.c_m == 0.0
        assert rep.tail_closed
        assert rep.bound(4.0) == pytest.approx(math.exp(-1.0), rel=1e-12)
        assert rep.bound(0.0) == 1.0

    def test_positive_drift_violates(self):
        m = _iid(Exponential(1.0), Deterministic(1.0), 0.5)
        with pytest.raises(HypothesisViolationError) as err:
            corollary8_bound(m, TruncationParams(C=2.0, H=0.25, m=1), h=0.25, n_max=10)
        assert err.value.failing_n == 1

    def test_direct_steps_unsupported(self):
        with pytest.raises(UnsupportedFormError):
            corollary8_bound(_example3(), TruncationParams(C=1.0, H=0.5, m=1), h=0.5, n_max=5)

    def test_finite_horizon_only_without_period(self):
        steps = tuple(
            RenewalStep(claim=Deterministic(0.1), inter_time=Deterministic(1.0), premium_rate=1.0)
            for _ in range(6)
        )
        m = RenewalModel(steps, period=0)
        rep = corollary8_bound(m, TruncationParams(C=2.0, H=0.5, m=1), h=0.25, n_max=6)
        assert not rep.tail_closed


class TestCorollary9:
    def test_explicit_constants(self):
        m = _iid(Exponential(1.0), Exponential(1.0), 2.0)
        big_b = b_n_functional(m, 0.5, 6.0, 1)
        rep = corollary9_bound(
            m, TruncationParams(C=6.0, H=0.5, m=1, c_star=0.5, C_star=big_b), n_max=25
        )
        assert rep.corollary == 9
        assert rep.h == pytest.approx(min(0.5, 0.5 / big_b), rel=1e-12)
        assert rep.tail_closed

    def test_h_capped_by_exponent_limit(self):
        m = _iid(Exponential(1.0), Deterministic(1.0), 2.0)
        rep = corollary9_bound(
            m, TruncationParams(C=2.0, H=0.05, m=1, c_star=0.5, C_star=4.0), n_max=25
        )
        assert rep.h == 0.05

    def test_ratio_hypothesis_violation(self):
        m = _iid(Exponential(1.0), Exponential(1.0), 2.0)
        # A_1(0) = E X_1 = 2 > 0.9 * 1 = -c* E S_1
        with pytest.raises(HypothesisViolationError):
            corollary9_bound(
                m, TruncationParams(C=0.0, H=0.5, m=1, c_star=0.9, C_star=10.0), n_max=10
            )

    def test_zero_claims_certify_for_any_c_star(self):
        m = _iid(Deterministic(0.0), Deterministic(1.0), 1.0)
        rep = corollary9_bound(
            m, TruncationParams(C=2.0, H=1.0, m=1, c_star=0.5, C_star=0.5), n_max=10
        )
        assert rep.h == pytest.approx(min(1.0, 0.5 / 0.5))
        assert rep.bound(3.0) == pytest.approx(math.exp(-3.0))

    def test_params_validated(self):
        with pytest.raises(ValueError):
            TruncationParams(C=-1.0, H=0.5, m=1)
        with pytest.raises(ValueError):
            TruncationParams(C=1.0, H=0.0, m=1)
        with pytest.raises(ValueError):
            TruncationParams(C=1.0, H=0.5, m=0)
        with pytest.raises(ValueError):
            TruncationParams(C=1.0, H=0.5, m=1, c_star=1.5, C_star=1.0)


class TestCorollary10:
    def test_finds_certificate(self):
        m = _iid(Exponential(1.0), Deterministic(1.0), 2.0)
        rep = corollary10_search(m, 0.5, 50)
        assert rep.corollary == 10
        assert rep.h > 0.0
        assert rep.tail_closed
        assert rep.bound(10.0) < math.exp(-0.2 * 10.0)

    def test_zero_drift_rejected(self):
        m = _iid(Exponential(1.0), Deterministic(1.0), 1.0)
        with pytest.raises(NoCertificateError, match="drift"):
            corollary10_search(m, 0.5, 50)

    def test_h_capped_by_H(self):
        m = _iid(Exponential(1.0), Deterministic(1.0), 2.0)
        rep = corollary10_search(m, 0.1, 50)
        assert rep.h == pytest.approx(0.1)

    def test_non_periodic_rejected(self):
        with pytest.raises(NoCertificateError, match="periodic"):
            corollary10_search(_example3(), 0.5, 10)

    def test_report_json_schema(self):
        m = _iid(Exponential(1.0), Deterministic(1.0), 2.0)
        j = corollary10_search(m, 0.5, 50).to_json()
        assert set(j) == {"corollary", "m", "C", "H", "c_star", "C_star", "h", "C_m", "tail_closed"}
        assert j["corollary"] == 10
        assert j["tail_closed"] is True
