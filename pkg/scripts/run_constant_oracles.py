"""Compare c_{alpha,m} and d_{alpha,m} with their Monte Carlo oracles."""
import argparse
import time

from heatlab.asymptotics import c_constant, c_constant_mc, d_constant, d_constant_mc
from heatlab.rng import Stream, set_workers


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=int, default=2)
    ap.add_argument("--a", type=float, default=0.25)
    ap.add_argument("--alpha-c", type=float, default=0.4)
    ap.add_argument("--alpha-d", type=float, default=0.7)
    ap.add_argument("--samples", type=int, default=10 ** 8)
    ap.add_argument("--seed", type=int, default=9)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    set_workers(args.threads)
    for name, exact, oracle, alpha in (("c", c_constant, c_constant_mc, args.alpha_c),
                                       ("d", d_constant, d_constant_mc, args.alpha_d)):
        t0 = time.perf_counter()
        ex = exact(args.m, alpha, args.a)
        mc = oracle(args.m, alpha, args.a, args.samples, Stream(args.seed, (name,)))
        z = (mc.value - ex.value) / mc.error
        print(f"{name}(m={args.m}, alpha={alpha}, a={args.a}) = {ex.value:.10f} +- {ex.error:.1e}; "
              f"oracle {mc.value:.7f} +- {mc.error:.1e}; z = {z:+.2f}; {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
