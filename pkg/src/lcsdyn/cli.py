"""Experiment driver.

Subcommands::

    lcsdyn integrate   --config cfg.json
    lcsdyn convergence --config cfg.json --h 0.2,0.1,0.05,0.025 [--h-ref H]
    lcsdyn verify      --system harmonic_1d [--seed 0] [--output report.json]

Configs and reports are JSON; trajectories are CSV with the fixed header

    k,t,chart,q_0..q_{n-1},p_0..p_{n-1},r_0..r_{n-1},sigma,energy

and numbers printed with 17 significant digits.  Exit codes: 0 success,
2 config error, 3 numerical failure, 4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .continuous import (fiber_legendre, fiber_legendre_inv, make_lcel_field,
                         make_lcshe_field, rk4_integrate)
from .discretize import (conformal_midpoint_rule, conformal_trapezoidal_rule,
                         midpoint_rule, trapezoidal_rule)
from .errors import (ConfigError, ConsistencyError, DomainError,
                     IntegrationError, NewtonError, RegularityError)
from .hamiltonian_discrete import (build_left_hamiltonian,
                                   build_right_hamiltonian,
                                   integrate_hamiltonian)
from .numerics import StepperConfig
from .systems import CATALOG, System, get_system, with_constant_sigma
from .variational import integrate
from . import verification

METHODS = ("del", "dlcel", "rd", "ld", "rdlch", "ldlch", "rk4-lcel", "rk4-lcshe")
TWO_POINT_METHODS = ("del", "dlcel")
RULES = ("midpoint", "trapezoidal")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VERIFY = 4


@dataclass
class ExperimentConfig:
    """One experiment: a catalog system, a method, a step size, initial data.

    ``initial`` holds ``{"q0": [...], "q1": [...]}`` for the two-point
    Lagrangian methods and ``{"q": [...], "p": [...]}`` for Hamiltonian and
    continuous methods (the convergence command always takes the latter form).
    """

    system: str
    method: str
    h: float
    steps: int
    initial: dict[str, list[float]]
    sigma_params: list[float] = field(default_factory=list)
    rule: str = "midpoint"
    tol: float = 1e-10
    max_iter: int = 50
    output_path: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        for key in d:
            if key not in known:
                raise ConfigError(f"unknown field (known: {sorted(known)})", key)
        try:
            cfg = cls(**d)
        except TypeError as e:
            raise ConfigError(str(e)) from e
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path) as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config: {e}") from e
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> None:
        if self.system not in CATALOG:
            raise ConfigError(f"unknown system {self.system!r}; "
                              f"available: {sorted(CATALOG)}", "system")
        if self.method not in METHODS:
            raise ConfigError(f"must be one of {METHODS}", "method")
        if self.rule not in RULES:
            raise ConfigError(f"must be one of {RULES}", "rule")
        if not self.h > 0:
            raise ConfigError("must be positive", "h")
        if self.steps < 1:
            raise ConfigError("must be >= 1", "steps")
        if self.method in TWO_POINT_METHODS and self.steps < 2:
            raise ConfigError("two-point methods need steps >= 2", "steps")
        if not self.tol >= 1e-14:
            raise ConfigError("must be >= 1e-14", "tol")
        if self.max_iter < 1:
            raise ConfigError("must be >= 1", "max_iter")
        n = self._system().n
        keys = set(self.initial)
        if keys not in ({"q0", "q1"}, {"q", "p"}):
            raise ConfigError('needs keys {"q0", "q1"} or {"q", "p"}', "initial")
        for key, vec in self.initial.items():
            if not isinstance(vec, (list, tuple)) or len(vec) != n:
                raise ConfigError(f"must be a list of {n} numbers", f"initial.{key}")

    def require_initial(self, *keys: str) -> None:
        """Enforce the initial-data form a command needs for this method."""
        if set(self.initial) != set(keys):
            raise ConfigError(f"method {self.method!r} here needs keys {keys}",
                              "initial")

    def _system(self) -> System:
        return get_system(self.system, self.sigma_params or None)

    def stepper_config(self) -> StepperConfig:
        return StepperConfig(tol=self.tol, max_iter=self.max_iter)


def _fmt(x) -> str:
    return "" if x is None else f"{float(x):.17g}"


def write_trajectory_csv(path: str, n: int, rows: list[dict]) -> None:
    header = (["k", "t", "chart"]
              + [f"q_{i}" for i in range(n)]
              + [f"p_{i}" for i in range(n)]
              + [f"r_{i}" for i in range(n)]
              + ["sigma", "energy"])
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            cells = [str(row["k"]), _fmt(row["t"]), str(row["chart"])]
            for key in ("q", "p", "r"):
                vec = row.get(key)
                cells += [_fmt(v) for v in vec] if vec is not None else [""] * n
            cells.append(_fmt(row.get("sigma")))
            cells.append(_fmt(row.get("energy")))
            f.write(",".join(cells) + "\n")


def _trajectory_rows(config: ExperimentConfig, system: System) -> tuple[list[dict], dict]:
    """Run the configured method; return CSV rows and a summary dict."""
    n = system.n
    cfg = config.stepper_config()
    h, N = config.h, config.steps
    atlas, chart = system.atlas, system.start_chart
    H = system.hamiltonian
    newton = {"total_iterations": 0, "max_residual": 0.0}
    switches = 0
    config.require_initial(*(("q0", "q1") if config.method in TWO_POINT_METHODS
                             else ("q", "p")))

    def make_rule(sys_: System, conformal: bool):
        # Conformal methods discretize the chart-local Lagrangian (second-order
        # in the conformal recursion); plain methods never consult sigma.
        if conformal:
            builder = conformal_midpoint_rule if config.rule == "midpoint" \
                else conformal_trapezoidal_rule
            return builder(sys_.lagrangian, sys_.atlas, sys_.start_chart, h)
        builder = midpoint_rule if config.rule == "midpoint" else trapezoidal_rule
        return builder(sys_.lagrangian, h)

    if config.method in TWO_POINT_METHODS:
        q0 = np.asarray(config.initial["q0"], dtype=float)
        q1 = np.asarray(config.initial["q1"], dtype=float)
        conformal = config.method == "dlcel"
        Ld = make_rule(system, conformal)
        traj = integrate(Ld, atlas, chart, q0, q1, N, cfg, conformal=conformal)
        newton["total_iterations"] = sum(s.iterations for s in traj.steps)
        newton["max_residual"] = max((s.residual for s in traj.steps), default=0.0)
        switches = traj.n_switches()
        rows = [_point_row(system, pt, h) for pt in traj.points]
    elif config.method in ("rd", "ld", "rdlch", "ldlch"):
        q = np.asarray(config.initial["q"], dtype=float)
        p = np.asarray(config.initial["p"], dtype=float)
        conformal = config.method in ("rdlch", "ldlch")
        build_system = system if conformal else with_constant_sigma(system, 0.0)
        Ld = make_rule(build_system, conformal)
        build = build_right_hamiltonian if config.method in ("rd", "rdlch") \
            else build_left_hamiltonian
        Hd = build(Ld, build_system.atlas, chart)
        traj = integrate_hamiltonian(Hd, build_system.atlas, chart, q, p, N, cfg,
                                     conformal=conformal)
        newton["total_iterations"] = sum(s.iterations for s in traj.steps)
        newton["max_residual"] = max((s.residual for s in traj.steps), default=0.0)
        rows = [_point_row(system, pt, h) for pt in traj.points]
    elif config.method == "rk4-lcshe":
        q = np.asarray(config.initial["q"], dtype=float)
        p = np.asarray(config.initial["p"], dtype=float)
        states = rk4_integrate(make_lcshe_field(H, atlas, chart),
                               np.concatenate([q, p]), h, N)
        rows = [_continuous_row(system, k, h, x[:n], p=x[n:]) for k, x in
                enumerate(states)]
    else:  # rk4-lcel
        q = np.asarray(config.initial["q"], dtype=float)
        p = np.asarray(config.initial["p"], dtype=float)
        v = fiber_legendre_inv(system.lagrangian, q, p)
        states = rk4_integrate(make_lcel_field(system.lagrangian, atlas, chart),
                               np.concatenate([q, v]), h, N)
        rows = [_continuous_row(system, k, h, x[:n], v=x[n:]) for k, x in
                enumerate(states)]

    final = rows[-1]
    summary = {
        "system": system.name,
        "method": config.method,
        "rows": len(rows),
        "newton": newton,
        "chart_switches": switches,
        "final": {"k": final["k"], "t": final["t"], "chart": final["chart"],
                  "q": list(final["q"]),
                  "p": list(final["p"]) if final.get("p") is not None else None},
    }
    return rows, summary


def _point_row(system: System, pt, h: float) -> dict:
    ch = system.atlas.chart(pt.chart)
    sigma = float(ch.sigma(pt.q))
    energy = float(system.hamiltonian.value(pt.q, pt.p)) if pt.p is not None else None
    return {"k": pt.k, "t": pt.k * h, "chart": pt.chart, "q": pt.q, "p": pt.p,
            "r": pt.r, "sigma": sigma, "energy": energy}


def _continuous_row(system: System, k: int, h: float, q, p=None, v=None) -> dict:
    if p is None:
        p = fiber_legendre(system.lagrangian, q, v)
    ch = system.atlas.chart(system.start_chart)
    sigma = float(ch.sigma(q))
    r = np.exp(-sigma) * p
    return {"k": k, "t": k * h, "chart": system.start_chart, "q": q, "p": p,
            "r": r, "sigma": sigma,
            "energy": float(system.hamiltonian.value(q, p))}


def cmd_integrate(config: ExperimentConfig) -> dict:
    """Run one trajectory; write CSV (+ .summary.json) when output_path is set.

    A step failure still writes whatever lattice points were produced (momentum
    cells empty where undefined) before re-raising, so partial runs are
    inspectable.
    """
    system = config._system()
    try:
        rows, summary = _trajectory_rows(config, system)
    except IntegrationError as e:
        if config.output_path and e.partial is not None:
            rows = [_point_row(system, pt, config.h) for pt in e.partial.points]
            write_trajectory_csv(config.output_path, system.n, rows)
            spath = Path(config.output_path).with_suffix(".summary.json")
            spath.write_text(json.dumps(
                {"system": system.name, "method": config.method,
                 "failed_at_index": e.index, "rows": len(rows),
                 "error": str(e)}, indent=2) + "\n")
        raise
    if config.output_path:
        write_trajectory_csv(config.output_path, system.n, rows)
        spath = Path(config.output_path).with_suffix(".summary.json")
        spath.write_text(json.dumps(summary, indent=2) + "\n")
        summary["csv_path"] = str(config.output_path)
        summary["summary_path"] = str(spath)
    return summary


def cmd_convergence(config: ExperimentConfig, h_list: list[float],
                    h_ref: float | None = None) -> dict:
    """Error-vs-h study against an RK4 reference of the continuous Lagrangian flow.

    The target time is ``config.h * config.steps``; every h in ``h_list`` must
    divide it.  Initial data is the (q, p) form; two-point methods seed their
    second point from the reference trajectory at t = h.
    """
    if len(h_list) < 3:
        raise ConfigError("need at least 3 step sizes", "h_list")
    if any(h <= 0 for h in h_list):
        raise ConfigError("step sizes must be positive", "h_list")
    config.require_initial("q", "p")
    system = config._system()
    n = system.n
    t_final = config.h * config.steps
    h_ref = h_ref if h_ref is not None else min(h_list) / 100.0
    q0 = np.asarray(config.initial["q"], dtype=float)
    p0 = np.asarray(config.initial["p"], dtype=float)
    v0 = fiber_legendre_inv(system.lagrangian, q0, p0)
    ref_steps = int(round(t_final / h_ref))
    if abs(ref_steps * h_ref - t_final) > 1e-9 * t_final:
        raise ConfigError("h_ref must divide the final time", "h_ref")
    reference = rk4_integrate(
        make_lcel_field(system.lagrangian, system.atlas, system.start_chart),
        np.concatenate([q0, v0]), h_ref, ref_steps)

    def ref_at(t: float) -> np.ndarray:
        idx = int(round(t / h_ref))
        if abs(idx * h_ref - t) > 1e-9 * max(1.0, t):
            raise ConfigError(f"step size {t} is not resolved by h_ref={h_ref}",
                              "h_list")
        return reference[idx]

    errors = []
    for h in h_list:
        N = int(round(t_final / h))
        if abs(N * h - t_final) > 1e-9 * t_final:
            raise ConfigError(f"h={h} does not divide final time {t_final}",
                              "h_list")
        sub = ExperimentConfig(
            system=config.system, method=config.method, h=h, steps=N,
            initial=_initial_for(config.method, q0, p0, ref_at(h)[:n]),
            sigma_params=list(config.sigma_params), rule=config.rule,
            tol=config.tol, max_iter=config.max_iter)
        rows, _ = _trajectory_rows(sub, system)
        q_end = np.asarray(rows[-1]["q"], dtype=float)
        errors.append(float(np.max(np.abs(q_end - ref_at(t_final)[:n]))))

    slope = float(np.polyfit(np.log(np.asarray(h_list)), np.log(errors), 1)[0])
    report = {
        "system": system.name, "method": config.method, "t_final": t_final,
        "h_ref": h_ref, "h_list": list(h_list), "errors": errors,
        "order": slope,
    }
    if config.output_path:
        Path(config.output_path).write_text(json.dumps(report, indent=2) + "\n")
    return report


def _initial_for(method: str, q0, p0, q_at_h) -> dict:
    if method in TWO_POINT_METHODS:
        return {"q0": [float(x) for x in q0], "q1": [float(x) for x in q_at_h]}
    return {"q": [float(x) for x in q0], "p": [float(x) for x in p0]}


def cmd_verify(system_name: str, seed: int = 0, sigma_params=None) -> dict:
    system = get_system(system_name, sigma_params)
    return verification.run_all(system, seed=seed)


def _parse_h_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as e:
        raise ConfigError(f"bad --h list {text!r}: {e}", "h_list") from e


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lcsdyn",
        description="Conformal variational/symplectic integrator experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_int = sub.add_parser("integrate", help="run one trajectory, emit CSV")
    p_int.add_argument("--config", required=True)

    p_conv = sub.add_parser("convergence", help="error-vs-h study")
    p_conv.add_argument("--config", required=True)
    p_conv.add_argument("--h", required=True,
                        help="comma-separated step sizes, e.g. 0.2,0.1,0.05")
    p_conv.add_argument("--h-ref", type=float, default=None)

    p_ver = sub.add_parser("verify", help="run the invariant checks")
    p_ver.add_argument("--system", required=True)
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--sigma-params", default=None,
                       help="comma-separated conformal coefficients")
    p_ver.add_argument("--output", default=None)

    args = parser.parse_args(argv)
    try:
        if args.command == "integrate":
            summary = cmd_integrate(ExperimentConfig.from_json(args.config))
            print(json.dumps(summary, indent=2))
            return EXIT_OK
        if args.command == "convergence":
            report = cmd_convergence(ExperimentConfig.from_json(args.config),
                                     _parse_h_list(args.h), h_ref=args.h_ref)
            print(json.dumps(report, indent=2))
            return EXIT_OK
        if args.command == "verify":
            params = _parse_h_list(args.sigma_params) if args.sigma_params else None
            try:
                report = cmd_verify(args.system, seed=args.seed, sigma_params=params)
            except KeyError as e:
                raise ConfigError(str(e), "system") from e
            text = json.dumps(report, indent=2)
            if args.output:
                Path(args.output).write_text(text + "\n")
            print(text)
            return EXIT_OK if report["passed"] else EXIT_VERIFY
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (NewtonError, IntegrationError, RegularityError, DomainError,
            ConsistencyError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
