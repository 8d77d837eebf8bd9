import numpy as np
import pytest

from ruinbounds import (
    Deterministic,
    Discrete,
    Exponential,
    ModelA,
    PiecewisePolyFn,
    RenewalModel,
    RenewalStep,
    TimeVaryingClaimFamily,
    UnitedBranch,
    UnitedModel,
)


@pytest.fixture
def example1_model():
    """Unit intensity, premium density 4t, unit-rate exponential claims."""
    return ModelA(
        PiecewisePolyFn.constant(1.0),
        PiecewisePolyFn((0.0,), ((0.0, 4.0),)),
        TimeVaryingClaimFamily(Exponential(1.0)),
    )


@pytest.fixture
def homogeneous_model():
    """Intensity 1, premium rate 2, unit-rate exponential claims: the
    classical case with exponent 1/2 and exact ruin probability
    0.5 exp(-u/2)."""
    return ModelA(
        PiecewisePolyFn.constant(1.0),
        PiecewisePolyFn.constant(2.0),
        TimeVaryingClaimFamily(Exponential(1.0)),
    )


@pytest.fixture
def two_branch_united():
    """Strong first branch, break-even second branch opened at t = 2."""
    return UnitedModel((
        UnitedBranch(0.0, 1.0, 4.0, Exponential(1.0)),
        UnitedBranch(2.0, 1.0, 1.0, Exponential(1.0)),
    ))


def random_united(rng: np.random.Generator) -> UnitedModel:
    n = int(rng.integers(2, 6))
    t, branches = 0.0, []
    for i in range(n):
        claims = (
            Exponential(float(rng.uniform(0.5, 2.0)))
            if rng.random() < 0.7
            else Deterministic(float(rng.uniform(0.3, 2.0)))
        )
        branches.append(UnitedBranch(
            start=t,
            intensity=float(rng.uniform(0.3, 2.0)),
            premium_rate=float(rng.uniform(0.0, 4.0)),
            claims=claims,
        ))
        t += float(rng.uniform(0.5, 3.0))
    return UnitedModel(tuple(branches))


def random_renewal_step(rng: np.random.Generator) -> RenewalStep:
    kind = rng.integers(0, 4)
    if kind == 0:
        claim = Exponential(float(rng.uniform(0.8, 3.0)))
    elif kind == 1:
        claim = Deterministic(float(rng.uniform(0.1, 1.5)))
    elif kind == 2:
        claim = DiscreteOnHalfLattice(rng, lo=0, hi=4)
    else:
        from ruinbounds import Gamma, Uniform

        claim = Gamma(float(rng.uniform(0.6, 3.0)), float(rng.uniform(1.0, 3.0))) \
            if rng.random() < 0.5 else Uniform(0.0, float(rng.uniform(0.5, 2.0)))
    tkind = rng.integers(0, 3)
    if tkind == 0:
        inter = Exponential(float(rng.uniform(0.5, 2.0)))
    elif tkind == 1:
        inter = Deterministic(float(rng.uniform(0.5, 2.0)))
    else:
        inter = DiscreteOnHalfLattice(rng, lo=1, hi=4)
    return RenewalStep(claim=claim, inter_time=inter, premium_rate=float(rng.uniform(0.0, 3.0)))


def random_renewal(rng: np.random.Generator, max_steps: int = 6) -> RenewalModel:
    n = int(rng.integers(1, max_steps + 1))
    steps = tuple(random_renewal_step(rng) for _ in range(n))
    period = int(rng.integers(1, n + 1))
    return RenewalModel(steps, period=period)


def DiscreteOnHalfLattice(rng: np.random.Generator, lo: int, hi: int) -> Discrete:
    """Random finite-support law on the 0.5-lattice between lo/2 and hi/2."""
    k = int(rng.integers(2, 4))
    levels = rng.choice(np.arange(lo, hi + 1), size=k, replace=False)
    levels = np.sort(levels)
    w = rng.dirichlet(np.ones(k))
    return Discrete(tuple(0.5 * levels.astype(float)), tuple(w))


def min_claim_abscissa(model: RenewalModel) -> float:
    caps = []
    for s in model.steps:
        caps.append(s.claim.abscissa if not s.is_direct else s.increment.abscissa)
    return min(caps)
