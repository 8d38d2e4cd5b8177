import json

import numpy as np
import pytest

from lcsdyn import ConfigError
from lcsdyn.cli import (EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VERIFY,
                        ExperimentConfig, cmd_convergence, cmd_integrate,
                        cmd_verify, main)


def base_config(**overrides):
    cfg = {
        "system": "harmonic_1d",
        "sigma_params": [0.1],
        "method": "dlcel",
        "h": 0.1,
        "steps": 10,
        "initial": {"q0": [1.0], "q1": [0.99]},
        "tol": 1e-12,
    }
    cfg.update(overrides)
    return cfg


def test_config_round_trip(tmp_path):
    d = base_config(output_path=str(tmp_path / "out.csv"))
    cfg = ExperimentConfig.from_dict(d)
    again = ExperimentConfig.from_dict(cfg.to_dict())
    assert cfg == again
    assert again.to_dict() == cfg.to_dict()


def test_config_validation_errors():
    with pytest.raises(ConfigError) as exc:
        ExperimentConfig.from_dict(base_config(system="unknown"))
    assert "system" in str(exc.value)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(base_config(method="leapfrog"))
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(base_config(h=-0.1))
    with pytest.raises(ConfigError) as exc:
        ExperimentConfig.from_dict(base_config(initial={"q0": [1.0]}))
    assert "initial" in str(exc.value)
    with pytest.raises(ConfigError) as exc:
        ExperimentConfig.from_dict(base_config(initial={"q0": [1.0],
                                                        "q1": [1.0, 2.0]}))
    assert "initial.q1" in str(exc.value)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(base_config(bogus_field=1.0))


def test_integrate_rows_and_header(tmp_path):
    out = tmp_path / "traj.csv"
    cfg = ExperimentConfig.from_dict(base_config(
        method="del", sigma_params=[0.0],
        initial={"q0": [1.0], "q1": [0.9900249376558604]},
        output_path=str(out)))
    summary = cmd_integrate(cfg)
    lines = out.read_text().splitlines()
    assert lines[0] == "k,t,chart,q_0,p_0,r_0,sigma,energy"
    assert len(lines) == 12  # header + 11 lattice points
    ks = [int(line.split(",")[0]) for line in lines[1:]]
    assert ks == list(range(11))
    assert summary["rows"] == 11
    assert (tmp_path / "traj.summary.json").exists()


def test_header_shape_for_2d(tmp_path):
    out = tmp_path / "traj2.csv"
    cfg = ExperimentConfig.from_dict({
        "system": "planar_2d", "method": "rk4-lcshe", "h": 0.1, "steps": 5,
        "initial": {"q": [1.0, 0.5], "p": [0.0, 0.1]},
        "output_path": str(out)})
    cmd_integrate(cfg)
    header = out.read_text().splitlines()[0]
    assert header == "k,t,chart,q_0,q_1,p_0,p_1,r_0,r_1,sigma,energy"


def test_dlcel_at_zero_sigma_matches_del_bytewise(tmp_path):
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    initial = {"q0": [1.0], "q1": [0.9900249376558604]}
    cmd_integrate(ExperimentConfig.from_dict(base_config(
        method="del", sigma_params=[0.0], initial=initial,
        output_path=str(out_a))))
    cmd_integrate(ExperimentConfig.from_dict(base_config(
        method="dlcel", sigma_params=[0.0], initial=initial,
        output_path=str(out_b))))
    assert out_a.read_text() == out_b.read_text()


def test_rotor_chart_column_changes_once_per_crossing(tmp_path):
    out = tmp_path / "rotor.csv"
    cfg = ExperimentConfig.from_dict({
        "system": "free_rotor_circle", "sigma_params": [0.1],
        "method": "dlcel", "h": 0.05, "steps": 95,
        "initial": {"q0": [0.0], "q1": [0.05]}, "tol": 1e-12,
        "output_path": str(out)})
    summary = cmd_integrate(cfg)
    charts = [line.split(",")[2] for line in out.read_text().splitlines()[1:]]
    changes = sum(1 for a, b in zip(charts, charts[1:]) if a != b)
    assert changes == summary["chart_switches"] == 1


def test_numbers_have_full_precision(tmp_path):
    out = tmp_path / "prec.csv"
    cmd_integrate(ExperimentConfig.from_dict(base_config(output_path=str(out))))
    row = out.read_text().splitlines()[2].split(",")
    q1 = float(row[3])
    assert f"{q1:.17g}" == row[3]


def test_convergence_slope_conformal_and_flat():
    for c in (0.1, 0.0):
        cfg = ExperimentConfig.from_dict({
            "system": "harmonic_1d", "sigma_params": [c], "method": "dlcel",
            "h": 0.1, "steps": 10, "initial": {"q": [1.0], "p": [0.0]},
            "tol": 1e-12})
        report = cmd_convergence(cfg, [0.2, 0.1, 0.05, 0.025])
        assert 1.8 <= report["order"] <= 2.2, (c, report)


def test_convergence_rk4_reference_order():
    cfg = ExperimentConfig.from_dict({
        "system": "harmonic_1d", "sigma_params": [0.1], "method": "rk4-lcel",
        "h": 0.1, "steps": 10, "initial": {"q": [1.0], "p": [0.0]},
        "tol": 1e-12})
    report = cmd_convergence(cfg, [0.2, 0.1, 0.05], h_ref=0.00125)
    assert 3.7 <= report["order"] <= 4.3


def test_convergence_validation():
    cfg = ExperimentConfig.from_dict(base_config(
        initial={"q": [1.0], "p": [0.0]}))
    with pytest.raises(ConfigError):
        cmd_convergence(cfg, [0.2, 0.1])
    bad = ExperimentConfig.from_dict(base_config())
    with pytest.raises(ConfigError):
        cmd_convergence(bad, [0.2, 0.1, 0.05])


def test_verify_reports_all_sections():
    report = cmd_verify("harmonic_1d", seed=0)
    names = {c["name"] for c in report["checks"]}
    assert {"cocycle", "reduction_constant_sigma", "stationarity",
            "legendre_commutation", "momentum_relation",
            "lcs_two_form_condition", "divergence_identity",
            "continuous_equivalence", "globalization"} <= names
    assert report["passed"]
    div = next(c for c in report["checks"] if c["name"] == "divergence_identity")
    assert "factor convention" in div["note"]


def test_main_exit_codes(tmp_path, monkeypatch, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(base_config()))
    assert main(["integrate", "--config", str(cfg_path)]) == 0

    cfg_path.write_text(json.dumps(base_config(method="nope")))
    assert main(["integrate", "--config", str(cfg_path)]) == EXIT_CONFIG

    # a run that cannot take a step: the implicit solve leaves the chart
    cfg_path.write_text(json.dumps({
        "system": "free_rotor_circle", "sigma_params": [0.1], "method": "rd",
        "h": 0.5, "steps": 400, "initial": {"q": [1.0], "p": [9.0]},
        "tol": 1e-10}))
    assert main(["integrate", "--config", str(cfg_path)]) == EXIT_NUMERICAL

    assert main(["verify", "--system", "harmonic_1d", "--seed", "0"]) == 0
    capsys.readouterr()

    # corrupt the catalog so the cocycle check fails end to end
    import lcsdyn.systems as systems_mod
    from lcsdyn import Chart, ConformalAtlas
    from lcsdyn.systems import System, free_rotor_circle

    def corrupted(c=0.1):
        rotor = free_rotor_circle(c)
        c0, c1 = rotor.atlas.charts
        bad0 = Chart(id=0, dim=1, lower=c0.lower, upper=c0.upper,
                     sigma=lambda q: c * float(q[0]) + 0.01 * float(q[0]),
                     sigma_grad=lambda q: np.array([c + 0.01]))
        atlas = ConformalAtlas(charts=(bad0, c1),
                               transitions=rotor.atlas.transitions)
        return System(name="corrupted", n=1, atlas=atlas,
                      lagrangian=rotor.lagrangian, hamiltonian=rotor.hamiltonian,
                      start_chart=0, sigma_params=(c,))

    monkeypatch.setitem(systems_mod.CATALOG, "corrupted", corrupted)
    monkeypatch.setitem(systems_mod.DEFAULT_SIGMA_PARAMS, "corrupted", (0.1,))
    code = main(["verify", "--system", "corrupted"])
    out = capsys.readouterr().out
    assert code == EXIT_VERIFY
    report = json.loads(out)
    cocycle = next(c for c in report["checks"] if c["name"] == "cocycle")
    assert not cocycle["passed"]


def test_verify_unknown_system_is_config_error():
    assert main(["verify", "--system", "nope"]) == EXIT_CONFIG


def test_integrate_failure_writes_partial(tmp_path):
    out = tmp_path / "partial.csv"
    cfg = ExperimentConfig.from_dict({
        "system": "free_rotor_circle", "sigma_params": [0.1], "method": "rd",
        "h": 0.5, "steps": 400, "initial": {"q": [1.0], "p": [9.0]},
        "tol": 1e-10, "output_path": str(out)})
    from lcsdyn import IntegrationError
    with pytest.raises(IntegrationError):
        cmd_integrate(cfg)
    lines = out.read_text().splitlines()
    assert lines[0].startswith("k,t,chart")
    assert len(lines) >= 2  # at least the seed point was recorded
    summary = json.loads((tmp_path / "partial.summary.json").read_text())
    assert summary["failed_at_index"] >= 1
