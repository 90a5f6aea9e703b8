"""Solve the radial manufactured problems and recover the exponent 1/(1+beta) at the origin.

Run: python demos/manufactured_convergence.py
"""
import time

import numpy as np

from freetransmission.grid import ScalarField, make_grid
from freetransmission.regularity import estimate_exponent
from freetransmission.solver import SolveConfig, manufactured_problem, solve


def main():
    print(f"{'beta':>5} {'n':>4} {'iters':>6} {'residual':>9} {'error':>9} {'seconds':>8}")
    for beta in (0.0, 1.0, 2.0):
        for n in (17, 33, 65):
            g = make_grid(2, n)
            spec, ms = manufactured_problem(beta, g)
            t0 = time.perf_counter()
            res = solve(spec, SolveConfig(tol=1e-4))
            exact = ScalarField.from_function(g, ms.u)
            err = np.abs(res.u.values - exact.values)[g.mask].max()
            print(f"{beta:5.1f} {n:4d} {res.iterations:6d} {res.residual:9.1e} {err:9.2e} "
                  f"{time.perf_counter() - t0:8.2f}")
    print()
    g = make_grid(2, 257)
    for beta in (0.0, 1.0, 2.0):
        ms = manufactured_problem(beta, g)[1]
        est = estimate_exponent(ScalarField.from_function(g, ms.u), [0.0, 0.0])
        print(f"beta={beta:.0f}: alpha_hat={est.alpha_hat:.4f}  expected {ms.alpha:.4f}  (r2={est.r2:.5f})")


if __name__ == "__main__":
    main()
