#!/usr/bin/env python3
"""Convergence study of the conformal variational integrator.

Integrates the damped harmonic builtin with the conformal midpoint rule over a
range of step sizes and prints the error against a fine RK4 reference of the
continuous conformal Euler-Lagrange flow, plus the fitted order.

    python3 scripts/run_convergence.py [--c 0.1] [--t-final 1.0]
"""

import argparse

import numpy as np

from lcsdyn import (StepperConfig, conformal_midpoint_rule, harmonic_1d,
                    integrate, make_lcel_field, rk4_integrate)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c", type=float, default=0.1,
                    help="conformal coefficient sigma = c q")
    ap.add_argument("--t-final", type=float, default=1.0)
    ap.add_argument("--h", type=str, default="0.2,0.1,0.05,0.025")
    ap.add_argument("--h-ref", type=float, default=1e-5)
    args = ap.parse_args()

    system = harmonic_1d(args.c)
    cfg = StepperConfig(tol=1e-12)
    h_list = [float(tok) for tok in args.h.split(",")]

    field = make_lcel_field(system.lagrangian, system.atlas, 0)
    ref = rk4_integrate(field, [1.0, 0.0], args.h_ref,
                        int(round(args.t_final / args.h_ref)))

    print(f"# harmonic_1d, sigma = {args.c} q, conformal midpoint rule")
    print(f"{'h':>8s} {'error(t=%g)' % args.t_final:>14s}")
    errors = []
    for h in h_list:
        Ld = conformal_midpoint_rule(system.lagrangian, system.atlas, 0, h)
        q1 = ref[int(round(h / args.h_ref))][:1]
        traj = integrate(Ld, system.atlas, 0, [1.0], q1,
                         int(round(args.t_final / h)), cfg)
        err = float(np.abs(traj.points[-1].q[0] - ref[-1][0]))
        errors.append(err)
        print(f"{h:8.4f} {err:14.6e}")

    slope = float(np.polyfit(np.log(h_list), np.log(errors), 1)[0])
    print(f"# fitted order: {slope:.3f}")


if __name__ == "__main__":
    main()
