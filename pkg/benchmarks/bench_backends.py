"""Backend benchmark: JIT kernels vs the vectorized numpy fallback.

Runs the three simulation kernels on reference workloads with both backends
and prints paths/second plus the ruin-count agreement. Usage:

    python benchmarks/bench_backends.py [--paths N]
"""

import argparse
import time

from ruinbounds import (
    Deterministic,
    Discrete,
    Exponential,
    ModelA,
    ModelB,
    PiecewisePolyFn,
    RenewalModel,
    RenewalStep,
    TimeVaryingClaimFamily,
    UnitedBranch,
    UnitedModel,
)
from ruinbounds.simulator import available_backends
from ruinbounds.simulator._backend import get_kernels
from ruinbounds.simulator._encode import encode_continuous, encode_renewal, encode_united


def workloads(paths):
    hom = ModelA(
        PiecewisePolyFn.constant(1.0),
        PiecewisePolyFn.constant(2.0),
        TimeVaryingClaimFamily(Exponential(1.0)),
    )
    discounted = ModelB(hom, PiecewisePolyFn((0.0,), ((0.0, 0.2),)))
    united = UnitedModel((
        UnitedBranch(0.0, 1.0, 4.0, Exponential(1.0)),
        UnitedBranch(2.0, 1.0, 1.0, Exponential(1.0)),
    ))
    renewal = RenewalModel.iid(RenewalStep(
        claim=Discrete((0.0, 0.5, 2.0), (0.3, 0.4, 0.3)),
        inter_time=Deterministic(1.0),
        premium_rate=1.5,
    ))
    return [
        ("continuous T=100", "simulate_continuous",
         encode_continuous(ModelB.without_interest(hom), 100.0), paths, 1.0),
        ("discounted T=100", "simulate_continuous",
         encode_continuous(discounted, 100.0), paths, 1.0),
        ("united T=40", "simulate_united", encode_united(united, 40.0), paths, 1.0),
        ("renewal n=200", "simulate_renewal", encode_renewal(renewal, 200), paths, 2.0),
    ]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=200_000)
    args = ap.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}   paths per workload: {args.paths}")
    header = f"{'workload':<20}" + "".join(f"{b + ' paths/s':>18}" for b in backends) + f"{'ruin agreement':>18}"
    print(header)
    print("-" * len(header))
    for name, fn_name, enc, paths, u in workloads(args.paths):
        rates, ruins = [], []
        for b in backends:
            kern = get_kernels(b)
            fn = getattr(kern, fn_name)
            fn(enc, 1, 64, u)  # warm up / compile
            t0 = time.perf_counter()
            flags, _ = fn(enc, 1, paths, u)
            dt = time.perf_counter() - t0
            rates.append(paths / dt)
            ruins.append(int(flags.sum()))
        agree = "exact" if len(set(ruins)) == 1 else f"diff {max(ruins) - min(ruins)}"
        print(f"{name:<20}" + "".join(f"{r:>18,.0f}" for r in rates) + f"{agree:>18}")


if __name__ == "__main__":
    main()
