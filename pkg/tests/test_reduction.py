import numpy as np
import pytest

from partint.dynamics import IntegratorSpec
from partint.errors import NotAMomentumCoordinate, PreconditionViolation, RankDeficient, SamplerError
from partint.models import central_force, magnetic_pair, nbody_cartesian, rho_hamiltonian
from partint.models.rho import random_simplex, rho_names
from partint.poisson import Chart
from partint.polyalg import certify_involution, poly_from_expression, poly_poisson
from partint.reduction import (
    BoxSampler,
    cartesian_from_rho_velocity,
    compare_full_vs_reduced,
    match_reduced_momenta,
    momentum_checks,
    reduced_ladder,
    verify_involution_numeric,
    verify_particular_integral,
    zero_momentum_state,
)

CF = central_force()
HC2 = CF.spherical


def _sampler(model=HC2, seed=5, box=None):
    return BoxSampler.for_model(model, seed, box)


# ---- sampling ----

def test_sampler_is_seeded():
    a = [_sampler(seed=9).ambient() for _ in range(3)]
    b = [_sampler(seed=9).ambient() for _ in range(3)]
    np.testing.assert_array_equal(a, b)


def test_sampler_projects_onto_zero_set():
    s = _sampler()
    cf = HC2.chart.compiled(HC2.resolve("prho + pr^2 - 0.1"))
    for x in s.on_manifold([cf], 20):
        assert abs(cf.value(x)) <= 1e-13


def test_sampler_rejects_foreign_names():
    with pytest.raises(SamplerError):
        BoxSampler(HC2.chart, {"zz": (0, 1)})


def test_sampler_gives_up_on_empty_zero_set():
    s = BoxSampler(HC2.chart, seed=1, max_tries=5)
    with pytest.raises(SamplerError):
        s.on_manifold([HC2.chart.compiled(HC2.resolve("pr^2 + 1"))], 1)


# ---- particular integrals ----

def test_pphi_is_global():
    rep = verify_particular_integral("pphi", HC2.hamiltonian, HC2.chart, _sampler())
    assert rep.verdict == "global integral"


def test_prho_is_particular_for_g():
    rep = verify_particular_integral("prho", CF.G, HC2.chart, _sampler())
    assert rep.verdict == "particular integral"
    assert rep.positive
    # {prho, G} = -pr/(m r) * prho, so a = -pr/(m r) at every sample
    est = rep.coefficient_estimates[min(rep.coefficient_estimates)]
    ci = HC2.chart.index
    expected = np.array([-x[ci("pr")] / x[ci("r")] for x in rep.samples])
    np.testing.assert_allclose(est, expected, atol=1e-6)
    assert rep.coefficient_stability <= 1e-4
    assert rep.dynamic_max is not None and rep.dynamic_max <= 1e-10


def test_prho_is_not_particular_for_k():
    rep = verify_particular_integral("prho", HC2.hamiltonian, HC2.chart,
                                     _sampler(box={"pphi": (0.5, 1.0)}))
    assert rep.verdict == "not a particular integral"
    assert rep.on_manifold_residual > 1e-3


def test_prho_is_particular_for_k_at_zero_pphi():
    rep = verify_particular_integral("prho", HC2.hamiltonian, HC2.chart,
                                     _sampler(box={"pphi": (0.0, 0.0)}))
    assert rep.verdict == "particular integral"


def test_lz_fails_with_moving_centre():
    model = magnetic_pair()
    rep = verify_particular_integral(model.resolve("lz"), model.hamiltonian, model.chart,
                                     _sampler(model, box={"Kx": (0.5, 1.0)}))
    assert rep.verdict == "not a particular integral"


def test_lz_holds_at_rest():
    model = magnetic_pair()
    rep = verify_particular_integral(model.resolve("lz"), model.hamiltonian, model.chart,
                                     _sampler(model, box={"Kx": (0.0, 0.0), "Ky": (0.0, 0.0)}))
    assert rep.positive


def test_report_serialises():
    rep = verify_particular_integral("prho", CF.G, HC2.chart, _sampler(), samples=5)
    d = rep.to_dict()
    assert d["verdict"] == rep.verdict and d["claim"]["f"] == "prho"


def test_numeric_coefficient_agrees_with_exact_reduction():
    rep = verify_particular_integral("prho", CF.G, HC2.chart, _sampler(), samples=10)
    exact = certify_involution([poly_from_expression(CF.G), poly_from_expression(HC2.resolve("prho"))],
                               HC2.chart)
    a = exact.coefficients[(0, 1)][1]  # {G, prho} = a * prho
    est = rep.coefficient_estimates[min(rep.coefficient_estimates)]
    for x, got in zip(rep.samples, est):
        b = {**HC2.chart.constants, **dict(zip(HC2.chart.names, x))}
        assert abs(-a.evaluate(b) - got) <= 1e-8


# ---- involution ----

def test_magnetic_set_at_rest_is_in_involution():
    model = magnetic_pair()
    rep = verify_involution_numeric(["Kx", "Ky", "rx*py - ry*px"], model.hamiltonian, model.chart,
                                    _sampler(model))
    assert rep.verdict == "particular involution"
    assert rep.min_singular_value > 1e-6


def test_central_set_is_in_involution():
    rep = verify_involution_numeric([HC2.hamiltonian, "pphi", "prho"], HC2.hamiltonian, HC2.chart,
                                    _sampler())
    assert rep.positive
    assert set(rep.pair_residuals) == {"{H, pphi}", "{H, prho}", "{pphi, prho}"}


def test_too_many_functions():
    rep = verify_involution_numeric(["pr", "pphi", "prho", "r"], HC2.hamiltonian, HC2.chart, _sampler())
    assert not rep.positive
    assert "exceed" in rep.notes[0]


def test_dependent_functions_rejected():
    rep = verify_involution_numeric(["pphi", "2*pphi + pphi^2"], HC2.hamiltonian, HC2.chart, _sampler())
    assert not rep.positive
    assert rep.min_singular_value < 1e-6


def test_non_commuting_pair_rejected():
    chart = Chart("c1", ("q",), ("p",))
    rep = verify_involution_numeric(["q"], "p", chart, BoxSampler(chart, seed=1))
    assert rep.verdict == "not in particular involution"


# ---- momentum matching ----

def _planar_state(rng, N, d=3, scale=0.3, masses=None):
    masses = masses or [1.0] * N
    r, p = zero_momentum_state(random_simplex(rng, N, d), scale * rng.standard_normal((N, d)), masses)
    return np.concatenate((r.ravel(), p.ravel()))


def test_zero_momentum_state_removes_momenta(rng):
    for N, d in [(2, 3), (3, 3), (4, 2), (4, 4)]:
        model = nbody_cartesian(N, d)
        x = _planar_state(rng, N, d)
        P, L = momentum_checks(model, x)
        assert P <= 1e-14 and L <= 1e-13


def test_head_on_pair_chain_rule():
    # r = (-1, 1) on x, momenta (-1/2, 1/2): rho = 4, drho/dt = 4, dH_rho/dp = 8 rho p = 32 p
    model = nbody_cartesian(2, 3)
    x = np.array([-1, 0, 0, 1, 0, 0, -0.5, 0, 0, 0.5, 0, 0], dtype=float)
    mm = match_reduced_momenta(x, model)
    assert mm.rho[0] == pytest.approx(4.0)
    assert mm.prho[0] == pytest.approx(0.125, abs=1e-14)


def test_static_configuration_has_zero_momenta(rng):
    model = nbody_cartesian(3, 3)
    x = np.concatenate((random_simplex(rng, 3, 3).ravel(), np.zeros(9)))
    np.testing.assert_array_equal(match_reduced_momenta(x, model).prho, 0.0)


def test_collinear_configuration_is_rank_deficient():
    model = nbody_cartesian(3, 3)
    x = np.zeros(18)
    x[0], x[6] = -1.0, 1.0
    with pytest.raises(RankDeficient):
        match_reduced_momenta(x, model)


def test_angular_momentum_blocks_matching():
    model = nbody_cartesian(2, 3)
    x = np.array([-1, 0, 0, 1, 0, 0, 0, -0.5, 0, 0, 0.5, 0], dtype=float)
    with pytest.raises(PreconditionViolation):
        match_reduced_momenta(x, model)


@pytest.mark.parametrize("N", [2, 3, 4])
def test_matched_energy_equals_internal_energy(rng, N):
    masses = [1.0, 2.0, 0.5, 1.5][:N]
    model = nbody_cartesian(N, 3, masses)
    qn, pn = rho_names(N)
    Hrho = rho_hamiltonian(N, masses).compile(qn + pn)
    H = model.chart.compiled(model.hamiltonian)
    for _ in range(100):
        x = _planar_state(rng, N, masses=masses)
        mm = match_reduced_momenta(x, model)
        assert mm.residual <= 1e-10
        E = H.value(x)
        assert abs(Hrho.value(mm.state()) - E) <= 1e-10 * max(1.0, abs(E))


def test_rho_velocity_round_trip(rng):
    r = random_simplex(rng, 4, 3)
    rd = rng.standard_normal(6)
    p = cartesian_from_rho_velocity(r, rd, [1, 1, 1, 1])
    model = nbody_cartesian(4, 3)
    x = np.concatenate((r.ravel(), p.ravel()))
    mm = match_reduced_momenta(x, model)
    qn, pn = rho_names(4)
    grad = rho_hamiltonian(4, [1] * 4).compile(qn + pn).grad(mm.state())
    np.testing.assert_allclose(grad[6:], rd, atol=1e-10)


# ---- full vs reduced ----

def test_kepler_pair_reduction_agrees():
    x = np.array([-0.5, 0, 0, 0.5, 0, 0, -0.5, 0, 0, 0.5, 0, 0], dtype=float)
    rep = compare_full_vs_reduced(2, "-1/r12", x, IntegratorSpec(dt=1e-3, steps=500))
    assert rep.max_deviation <= 1e-5
    assert rep.energy_mismatch <= 1e-12
    assert rep.to_dict()["N"] == 2


def test_three_body_reduction_agrees(rng):
    x = _planar_state(rng, 3, scale=0.2)
    rep = compare_full_vs_reduced(3, "rho12 + 1/rho12 + rho13 + 1/rho13 + rho23 + 1/rho23", x,
                                  IntegratorSpec(dt=1e-3, steps=200))
    assert rep.max_deviation <= 1e-4
    assert rep.energy_mismatch <= 1e-10
    assert rep.rho_full.shape == rep.rho_reduced.shape == (201, 3)


def test_volume_leg_at_rest(rng):
    x = np.concatenate((random_simplex(rng, 3, 3).ravel(), np.zeros(9)))
    rep = compare_full_vs_reduced(3, "V1", x, IntegratorSpec(dt=1e-3, steps=100), volume=True)
    assert rep.volume_deviation is not None and rep.volume_deviation <= 1e-4


def test_volume_leg_requires_unit_masses(rng):
    x = np.concatenate((random_simplex(rng, 3, 3).ravel(), np.zeros(9)))
    with pytest.raises(PreconditionViolation):
        compare_full_vs_reduced(3, "V1", x, IntegratorSpec(dt=1e-3, steps=10), masses=[1, 2, 1],
                                volume=True)


def test_nonzero_momentum_rejected():
    x = np.array([-0.5, 0, 0, 0.5, 0, 0, 1.0, 0, 0, 0.5, 0, 0], dtype=float)
    with pytest.raises(PreconditionViolation):
        compare_full_vs_reduced(2, "-1/r12", x, IntegratorSpec(dt=1e-3, steps=10))


# ---- reduction ladder ----

def test_central_ladder():
    g, j = reduced_ladder(HC2.chart, HC2.hamiltonian, ["pphi", "prho"])
    assert (g.momentum, g.coordinate, j.coordinate) == ("pphi", "phi", "rho")
    assert g.condition_holds
    # dG/dprho = (prho + rho*pr/r)/m is not a multiple of prho, so rho keeps moving on
    # prho = 0; J closes anyway because rho drops out of it
    assert not j.condition_holds
    assert g.method == j.method == "symbolic"
    assert poly_from_expression(g.hamiltonian) == poly_from_expression(CF.G)
    assert poly_from_expression(j.hamiltonian) == poly_from_expression(CF.J)
    assert j.chart.names == ("r", "pr")
    assert not j.coordinate_remains


def test_ladder_coefficient_matches_bracket():
    g, = reduced_ladder(HC2.chart, HC2.hamiltonian, ["pphi"])
    # dK/dpphi = pphi / (m rho^2)
    assert g.coefficient == "m^-1*rho^-2"
    br = poly_poisson(poly_from_expression(HC2.resolve("phi")), poly_from_expression(HC2.hamiltonian),
                      HC2.chart)
    assert str(br) == "m^-1*pphi*rho^-2"


def test_ladder_on_non_polynomial_is_numeric():
    chart = Chart("c", ("q", "s"), ("p", "ps"))
    g, = reduced_ladder(chart, "p^2/2 + sin(q) + ps^2*exp(s)", ["ps"])
    assert g.method == "numeric" and g.condition_holds


def test_ladder_rejects_coordinates():
    with pytest.raises(NotAMomentumCoordinate):
        reduced_ladder(HC2.chart, HC2.hamiltonian, ["rho"])
    with pytest.raises(NotAMomentumCoordinate):
        reduced_ladder(HC2.chart, HC2.hamiltonian, ["pphi", "pphi"])
