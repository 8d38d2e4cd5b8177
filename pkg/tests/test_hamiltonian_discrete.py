import numpy as np
import pytest

from lcsdyn import (ConsistencyError, DiscreteHamiltonian, DiscreteTrajectory,
                    StepperConfig, build_left_hamiltonian,
                    build_right_hamiltonian, conformal_midpoint_rule,
                    discrete_legendre, integrate, integrate_hamiltonian,
                    ld_step, ldlch_step, midpoint_rule,
                    momenta_along_trajectory, rd_step, rdlch_step,
                    with_constant_sigma)
from lcsdyn.numerics import fd_gradient


def analytic_free_right(h):
    # H+(q, p) = p q + h p^2 / 2 for the free particle
    return DiscreteHamiltonian(
        n=1, h=h, side="right",
        value=lambda q, p: float(p @ q) + 0.5 * h * float(p @ p),
        d1=lambda q, p: np.asarray(p, float).copy(),
        d2=lambda q, p: np.asarray(q, float) + h * np.asarray(p, float))


def analytic_free_left(h):
    # H-(q1, p) = -p q1 + h p^2 / 2
    return DiscreteHamiltonian(
        n=1, h=h, side="left",
        value=lambda q, p: -float(p @ q) + 0.5 * h * float(p @ p),
        d1=lambda q, p: -np.asarray(p, float).copy(),
        d2=lambda q, p: -np.asarray(q, float) + h * np.asarray(p, float))


def test_discrete_legendre_flat(free_line_flat):
    Ld = midpoint_rule(free_line_flat.lagrangian, 0.1)
    lm = discrete_legendre(Ld, free_line_flat.atlas, 0, [0.0], [0.1])
    assert np.allclose(lm.p_plus, [1.0]) and np.allclose(lm.r_plus, [1.0])
    assert np.allclose(lm.p_minus, [1.0]) and np.allclose(lm.r_minus, [1.0])


def test_discrete_legendre_conformal(free_line):
    Ld = midpoint_rule(free_line.lagrangian, 0.1)
    lm = discrete_legendre(Ld, free_line.atlas, 0, [0.0], [0.1])
    assert abs(lm.p_minus[0] - 1.005) <= 1e-14
    assert abs(lm.r_minus[0] - 1.005) <= 1e-14  # sigma(0) = 0
    assert abs(lm.p_plus[0] - 1.0) <= 1e-14


def test_discrete_legendre_sign_relations(harmonic):
    Ld = midpoint_rule(harmonic.lagrangian, 0.1)
    q0, q1 = np.array([0.4]), np.array([0.37])
    lm = discrete_legendre(Ld, harmonic.atlas, 0, q0, q1)
    sigma0 = 0.1 * 0.4
    assert np.allclose(lm.p_plus, Ld.d2(q0, q1))
    assert np.allclose(lm.r_plus, np.exp(-sigma0) * lm.p_plus)
    assert np.allclose(lm.r_minus, np.exp(-sigma0) * lm.p_minus)


def test_momenta_flat_harmonic_both_expressions(harmonic_flat, tight_cfg):
    Ld = midpoint_rule(harmonic_flat.lagrangian, 0.1)
    traj = integrate(Ld, harmonic_flat.atlas, 0, [1.0], [0.99], 50, tight_cfg)
    for k in range(1, 50):
        pt, prv, nxt = traj.points[k], traj.points[k - 1], traj.points[k + 1]
        fwd = -Ld.d1(pt.q, nxt.q)
        bwd = Ld.d2(prv.q, pt.q)
        assert np.max(np.abs(fwd - bwd)) <= 1e-10
        assert np.max(np.abs(pt.p - fwd)) <= 1e-14


def test_momenta_non_solution_raises_at_index(free_line_flat):
    Ld = midpoint_rule(free_line_flat.lagrangian, 0.1)
    traj = DiscreteTrajectory.from_points(0.1, 0, [[0.0], [0.1], [0.3]])
    with pytest.raises(ConsistencyError) as exc:
        momenta_along_trajectory(Ld, free_line_flat.atlas, traj)
    assert exc.value.index == 1


def test_momenta_rp_relation_exact(free_line, tight_cfg):
    Ld = conformal_midpoint_rule(free_line.lagrangian, free_line.atlas, 0, 0.1)
    traj = integrate(Ld, free_line.atlas, 0, [0.0], [0.1], 40, tight_cfg)
    for pt in traj.points:
        sigma = free_line.atlas.chart(0).sigma(pt.q)
        assert np.array_equal(pt.r, np.exp(-sigma) * pt.p)


def test_right_hamiltonian_free_particle_closed_form(free_line_flat):
    Ld = midpoint_rule(free_line_flat.lagrangian, 0.1)
    Hd = build_right_hamiltonian(Ld, free_line_flat.atlas, 0)
    # eliminating q1 gives H+ = p q + h p^2 / 2
    for q, p in [(0.5, 2.0), (-0.3, 1.0), (0.0, 0.7)]:
        want = p * q + 0.05 * p * p
        assert Hd.value([q], [p]) == pytest.approx(want, abs=1e-12)
    assert Hd.provenance == "from_lagrangian"


def test_left_hamiltonian_free_particle_closed_form(free_line_flat):
    Ld = midpoint_rule(free_line_flat.lagrangian, 0.1)
    Hd = build_left_hamiltonian(Ld, free_line_flat.atlas, 0)
    for q1, p in [(0.5, 2.0), (-0.3, 1.0), (0.0, 0.7)]:
        want = -p * q1 + 0.05 * p * p
        assert Hd.value([q1], [p]) == pytest.approx(want, abs=1e-12)


def test_right_hamiltonian_flat_is_coupling_minus_lagrangian(harmonic_flat):
    # with sigma == 0, H+ = p . q1 - Ld(q0, q1) at the eliminated q1
    Ld = midpoint_rule(harmonic_flat.lagrangian, 0.1)
    Hd = build_right_hamiltonian(Ld, harmonic_flat.atlas, 0)
    q, p = np.array([0.4]), np.array([0.9])
    q1 = Hd.source.invert_right(q, p)
    assert Hd.value(q, p) == pytest.approx(float(p @ q1) - Ld.value(q, q1),
                                           abs=1e-12)
    assert np.allclose(Ld.d2(q, q1), p, atol=1e-12)  # inversion round-trip


def test_hamiltonian_partials_match_finite_differences(harmonic):
    # implicit-function partials against differenced values, conformal case
    Ld = conformal_midpoint_rule(harmonic.lagrangian, harmonic.atlas, 0, 0.1)
    for build in (build_right_hamiltonian, build_left_hamiltonian):
        Hd = build(Ld, harmonic.atlas, 0)
        rng = np.random.default_rng(31)
        for _ in range(10):
            a = rng.uniform(-0.8, 0.8, 1)
            b = rng.uniform(0.3, 1.2, 1)
            fd1 = fd_gradient(lambda x: Hd.value(x, b), a, 1e-5)
            fd2 = fd_gradient(lambda x: Hd.value(a, x), b, 1e-5)
            assert np.max(np.abs(Hd.d1(a, b) - fd1)) <= 1e-6
            assert np.max(np.abs(Hd.d2(a, b) - fd2)) <= 1e-6


def test_rd_step_free_particle(tight_cfg):
    q, p = rd_step(analytic_free_right(0.1), [0.0], [1.0], tight_cfg)
    assert np.allclose(q, [0.1]) and np.allclose(p, [1.0])


def test_ld_step_free_particle(tight_cfg):
    q, p = ld_step(analytic_free_left(0.1), [0.0], [1.0], tight_cfg)
    assert np.allclose(q, [0.1]) and np.allclose(p, [1.0])


def test_rd_step_fixed_point(tight_cfg):
    Hd = analytic_free_right(0.1)
    q, p = rd_step(Hd, [0.2], [0.0], tight_cfg)
    assert np.array_equal(p, [0.0]) and np.allclose(q, [0.2])


def test_side_validation(tight_cfg, free_line_flat):
    with pytest.raises(ValueError):
        rd_step(analytic_free_left(0.1), [0.0], [1.0], tight_cfg)
    with pytest.raises(ValueError):
        ld_step(analytic_free_right(0.1), [0.0], [1.0], tight_cfg)
    with pytest.raises(ValueError):
        rdlch_step(analytic_free_right(0.1), free_line_flat.atlas, 0,
                   [0.0], [1.0], tight_cfg)  # analytic: no generating data


def test_rd_matches_del_through_legendre(harmonic_flat, tight_cfg):
    # commutation with the plain variational march, sigma == 0
    Ld = midpoint_rule(harmonic_flat.lagrangian, 0.1)
    traj = integrate(Ld, harmonic_flat.atlas, 0, [1.0], [0.99], 60, tight_cfg)
    Hd = build_right_hamiltonian(Ld, harmonic_flat.atlas, 0)
    q, p = traj.points[0].q, traj.points[0].p
    for pt in traj.points[1:]:
        q, p = rd_step(Hd, q, p, tight_cfg)
        assert np.max(np.abs(q - pt.q)) <= 5e-11
        assert np.max(np.abs(p - pt.p)) <= 5e-11


def test_right_left_agreement(harmonic_flat, tight_cfg):
    Ld = midpoint_rule(harmonic_flat.lagrangian, 0.1)
    Hr = build_right_hamiltonian(Ld, harmonic_flat.atlas, 0)
    Hl = build_left_hamiltonian(Ld, harmonic_flat.atlas, 0)
    qr, pr = np.array([1.0]), np.array([-0.1])
    ql, pl = qr.copy(), pr.copy()
    for _ in range(100):
        qr, pr = rd_step(Hr, qr, pr, tight_cfg)
        ql, pl = ld_step(Hl, ql, pl, tight_cfg)
        assert np.max(np.abs(qr - ql)) <= 10 * tight_cfg.tol
        assert np.max(np.abs(pr - pl)) <= 10 * tight_cfg.tol


def test_conformal_steppers_reduce_to_plain(harmonic):
    cfg = StepperConfig(tol=1e-13)
    const = with_constant_sigma(harmonic, 0.7)
    Ld = midpoint_rule(const.lagrangian, 0.1)
    Hr = build_right_hamiltonian(Ld, const.atlas, 0)
    Hl = build_left_hamiltonian(Ld, const.atlas, 0)
    rng = np.random.default_rng(33)
    for _ in range(100):
        q = rng.uniform(-1, 1, 1)
        p = rng.uniform(-1, 1, 1)
        qa, pa = rdlch_step(Hr, const.atlas, 0, q, p, cfg)
        qb, pb = rd_step(Hr, q, p, cfg)
        assert np.max(np.abs(qa - qb)) <= 1e-12
        assert np.max(np.abs(pa - pb)) <= 1e-12
        qa, pa = ldlch_step(Hl, const.atlas, 0, q, p, cfg)
        qb, pb = ld_step(Hl, q, p, cfg)
        assert np.max(np.abs(qa - qb)) <= 1e-12
        assert np.max(np.abs(pa - pb)) <= 1e-12


def test_rdlch_free_particle_matched_start(free_line, tight_cfg):
    Ld = midpoint_rule(free_line.lagrangian, 0.1)
    traj = integrate(Ld, free_line.atlas, 0, [0.0], [0.1], 3, tight_cfg)
    Hd = build_right_hamiltonian(Ld, free_line.atlas, 0)
    q, p = rdlch_step(Hd, free_line.atlas, 0, traj.points[1].q,
                      traj.points[1].p, tight_cfg)
    u = (-1.0 + np.sqrt(1.0 + 0.02 * np.exp(0.01))) / 0.01
    assert abs(q[0] - (0.1 + 0.1 * u)) <= 1e-10
    sigma = free_line.atlas.chart(0).sigma(q)
    r = np.exp(-sigma) * p
    assert np.array_equal(r, np.exp(-sigma) * p)


@pytest.mark.parametrize("side", ["right", "left"])
def test_legendre_commutation_conformal(side, harmonic, tight_cfg):
    Ld = conformal_midpoint_rule(harmonic.lagrangian, harmonic.atlas, 0, 0.1)
    traj = integrate(Ld, harmonic.atlas, 0, [1.0], [0.99], 100, tight_cfg)
    build = build_right_hamiltonian if side == "right" else build_left_hamiltonian
    Hd = build(Ld, harmonic.atlas, 0)
    ham = integrate_hamiltonian(Hd, harmonic.atlas, 0, traj.points[0].q,
                                traj.points[0].p, 100, tight_cfg)
    for a, b in zip(traj.points, ham.points):
        assert np.max(np.abs(a.q - b.q)) <= 50 * tight_cfg.tol
        assert np.max(np.abs(a.p - b.p)) <= 50 * tight_cfg.tol
        assert np.array_equal(a.r, np.exp(-0.1 * a.q) * a.p)


def test_momentum_pair_relation_defect(free_line):
    from lcsdyn import MomentumPair
    q = np.array([0.4])
    p = np.array([1.3])
    sigma = free_line.atlas.chart(0).sigma(q)
    good = MomentumPair(r=np.exp(-sigma) * p, p=p, chart=0, q=q)
    assert good.relation_defect(free_line.atlas) == 0.0
    bad = MomentumPair(r=p.copy(), p=p, chart=0, q=q)
    assert bad.relation_defect(free_line.atlas) > 1e-3
