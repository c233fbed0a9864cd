import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from partint.dynamics import IntegratorSpec, integrate
from partint.errors import ChartError
from partint.expr import parse
from partint.models import (
    cayley_menger_content2,
    central_force,
    inverse_jacobi_transform,
    jacobi_transform,
    magnetic_pair,
    nbody_cartesian,
    pair_rho,
    rho_hamiltonian,
    rho_model,
    vol_hamiltonian,
    vol_model,
    volume_jacobian,
    volume_variables,
)
from partint.models import catalog
from partint.models.rho import random_simplex, rho_names
from partint.models.volume import determinant, volume_polynomials
from partint.poisson import poisson_bracket
from partint.polyalg import poly_from_expression
from partint.reduction import zero_momentum_state

from oracles import RHO_N2, RHO_N3, RHO_N4, VVV

# ---- central force ----

def test_three_four_five():
    cf = central_force()
    r, phi, rho = cf.coordinates(3.0, 4.0, 0.0)
    assert (r, rho) == (5.0, 5.0)
    assert phi == pytest.approx(math.atan(4 / 3), abs=1e-15)


def test_chart_singular_on_plane():
    cf = central_force()
    with pytest.raises(ChartError):
        cf.to_chart(cf.cartesian.chart.point(x=3, y=4))


def test_energy_is_chart_invariant(rng):
    cf = central_force(m=1.7, V="-1/r + r^2/10")
    for _ in range(1000):
        q = rng.uniform(-2, 2, 3)
        q[2] = rng.choice([-1, 1]) * rng.uniform(0.2, 2)
        x = cf.cartesian.chart.point(np.concatenate((q, rng.uniform(-1, 1, 3))))
        y = cf.to_chart(x)
        H = cf.cartesian.chart.compiled(cf.cartesian.hamiltonian).value(x.values)
        K = cf.spherical.chart.compiled(cf.K).value(y.values)
        assert abs(H - K) <= 1e-12 * max(1.0, abs(H))
        back = cf.from_chart(y, z_sign=np.sign(q[2]))
        np.testing.assert_allclose(back.values, x.values, atol=1e-10)


def test_reduced_ladder_hamiltonians():
    cf = central_force()
    assert cf.J.eval({"pr": 0.0, "r": 1.0, "m": 1.0}) == -1
    assert poly_from_expression(cf.G) == poly_from_expression(cf.K.substitute({"pphi": 0}))
    assert poly_from_expression(cf.J) == poly_from_expression(cf.G.substitute({"prho": 0}))


def test_potential_must_depend_on_r():
    with pytest.raises(ValueError):
        central_force(V="x^2")


# ---- magnetic pair ----

def _magnetic_point(rng, model, K=(0.0, 0.0)):
    v = dict(zip(model.chart.names, rng.uniform(-1.5, 1.5, 8)))
    v["Kx"], v["Ky"] = K
    return model.chart.point(v)


def test_lz_particular_only_at_zero_pseudomomentum(rng):
    model = magnetic_pair()
    lz = model.resolve("lz")
    at_rest = [abs(poisson_bracket(lz, model.hamiltonian, _magnetic_point(rng, model))) for _ in range(100)]
    moving = [abs(poisson_bracket(lz, model.hamiltonian, _magnetic_point(rng, model, (1.0, 0.0))))
              for _ in range(100)]
    assert max(at_rest) < 1e-10
    assert np.median(moving) > 1e-4


def test_coupling_vanishes_at_rest(rng):
    model = magnetic_pair(m1=1.0, m2=3.0, e=0.7, B=1.3)
    coupling = model.chart.compiled(model.hamiltonians["H_coupling"])
    parts = [model.chart.compiled(model.hamiltonians[k]) for k in ("H_CM", "H_coupling", "H_rel")]
    full = model.chart.compiled(model.hamiltonian)
    for _ in range(20):
        x = _magnetic_point(rng, model)
        assert coupling.value(x.values) == 0.0
        y = _magnetic_point(rng, model, tuple(rng.uniform(-1, 1, 2)))
        assert full.value(y.values) == pytest.approx(sum(p.value(y.values) for p in parts), rel=1e-14)


def test_field_free_limit_is_kepler(rng):
    m1, m2, e = 1.0, 2.0, 0.8
    model = magnetic_pair(m1=m1, m2=m2, e=e, B=0.0, diamagnetic=False)
    kepler = parse("(Kx^2 + Ky^2)/(2*M) + (px^2 + py^2)/(2*mu) - e^2/sqrt(rx^2 + ry^2)")
    for _ in range(20):
        x = _magnetic_point(rng, model, tuple(rng.uniform(-1, 1, 2)))
        b = {**x.as_dict(), "M": m1 + m2, "mu": m1 * m2 / (m1 + m2), "e": e}
        H = model.chart.compiled(model.hamiltonian).value(x.values)
        assert abs(H - kepler.eval(b)) <= 1e-12 * max(1.0, abs(H))


def test_magnetic_masses_must_be_positive():
    with pytest.raises(ValueError):
        magnetic_pair(m1=0.0)


# ---- N-body ----

def test_total_momentum_commutes_two_body(rng):
    model = nbody_cartesian(2, 3, V="-1/r12")
    Px = model.resolve("Px")
    for _ in range(20):
        x = model.chart.point(rng.uniform(-1, 1, 12))
        assert abs(poisson_bracket(Px, model.hamiltonian, x)) <= 1e-12


def test_angular_momentum_conserved_three_body(rng):
    model = nbody_cartesian(3, 3, masses=[1.0, 2.0, 1.5], V="-1/r12 - 1/r13 - 1/r23")
    x0 = model.chart.point(np.concatenate((random_simplex(rng, 3, 3).ravel() * 2, rng.uniform(-0.3, 0.3, 9))))
    obs = {k: model.resolve(k) for k in ("Lxy", "Lxz", "Lyz")}
    tr = integrate(model.hamiltonian, x0, IntegratorSpec(dt=1e-3, steps=500), obs)
    assert tr.completed
    for k in obs:
        s = tr.observables[k]
        assert np.abs(s - s[0]).max() <= 1e-10


def test_zero_angular_momentum_is_invariant(rng):
    model = nbody_cartesian(3, 3, V="rho12 + rho13 + rho23")
    r, p = zero_momentum_state(random_simplex(rng, 3, 3), 0.3 * rng.standard_normal((3, 3)), [1, 1, 1])
    x0 = model.chart.point(np.concatenate((r.ravel(), p.ravel())))
    obs = {k: model.resolve(k) for k in ("Lxy", "Lxz", "Lyz")}
    tr = integrate(model.hamiltonian, x0, IntegratorSpec(dt=1e-3, steps=1000), obs)
    for k in obs:
        assert np.abs(tr.observables[k]).max() <= 1e-9


def test_single_body_is_free():
    model = nbody_cartesian(1, 3)
    assert set(model.hamiltonian.free_symbols) == {"px1", "py1", "pz1", "m1"}
    with pytest.raises(ChartError):
        nbody_cartesian(1, 3, V="r12")


def test_unknown_potential_symbol():
    with pytest.raises(ChartError):
        nbody_cartesian(2, 3, V="r13")


def test_jacobi_two_body():
    r = np.array([[0.1, 0.2, 0.3], [1.0, -0.5, 2.0]])
    jc = jacobi_transform(r, [1, 1])
    np.testing.assert_allclose(jc.vectors[0], (r[1] - r[0]) / math.sqrt(2), atol=1e-15)


@pytest.mark.parametrize("N", [2, 3, 4, 5])
def test_jacobi_round_trip(rng, N):
    m = rng.uniform(0.5, 3, N)
    r, p = rng.standard_normal((N, 3)), rng.standard_normal((N, 3))
    r2, p2 = inverse_jacobi_transform(jacobi_transform(r, m, p), m)
    np.testing.assert_allclose(r2, r, atol=1e-14)
    np.testing.assert_allclose(p2, p, atol=1e-14)


def test_jacobi_kinetic_energy_is_diagonal(rng):
    for _ in range(20):
        m = rng.uniform(0.5, 3, 3)
        r, p = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
        jc = jacobi_transform(r, m, p)
        T = np.sum(p**2 / m[:, None]) / 2
        assert T == pytest.approx((np.sum(jc.center_momentum**2) + np.sum(jc.momenta**2)) / 2, rel=1e-12)
        np.testing.assert_allclose(jc.center_momentum, p.sum(axis=0) / math.sqrt(m.sum()), atol=1e-14)


# ---- rho representation ----

@pytest.mark.parametrize("N,text", [(2, RHO_N2), (3, RHO_N3), (4, RHO_N4)])
def test_rho_hamiltonian_matches_transcription(N, text):
    assert poly_from_expression(rho_hamiltonian(N)) == poly_from_expression(parse(text))


def test_rho_potential_slot():
    H = rho_hamiltonian(3, masses=[1, 2, 3], V="r12 + rho23")
    free = set(H.free_symbols)
    assert free == set(rho_names(3)[0] + rho_names(3)[1])


def test_rho_kinetic_value_two_body():
    assert rho_hamiltonian(2, [1, 1]).eval({"rho12": 1, "prho12": 1}) == 4


def test_rho_monomial_counts():
    assert len(poly_from_expression(rho_hamiltonian(3, [1, 1, 1]))) == 12
    assert len(poly_from_expression(rho_hamiltonian(4, [1, 1, 1, 1]))) == 42


def test_rho_model_chart():
    model = rho_model(4)
    assert model.chart.n == 6
    assert model.chart.q_names[:3] == ("rho12", "rho13", "rho14")


# ---- volume variables ----

def test_equilateral_triangle():
    assert volume_variables(3, [1, 1, 1]).values == (3, Fraction(3, 16))
    vf = volume_variables(3, [1.0, 1.0, 1.0])
    assert abs(vf[2] - 3 / 16) <= 1e-12


def test_regular_tetrahedron():
    vv = volume_variables(4, [1] * 6)
    assert vv.values == (6, Fraction(3, 4), Fraction(1, 72))
    assert abs(volume_variables(4, [1.0] * 6)[3] - (math.sqrt(2) / 12) ** 2) <= 1e-12


def test_collinear_triangle():
    assert volume_variables(3, {"rho12": 1, "rho23": 1, "rho13": 4})[2] == 0


def test_vvv_matches_cayley_menger_polynomial():
    explicit = poly_from_expression(parse(VVV))
    assert volume_polynomials(4, "cayley-menger")[2] == explicit
    assert volume_polynomials(4, "explicit")[2] == explicit


def test_vvv_matches_determinant_on_random_tetrahedra(rng):
    for _ in range(100):
        rho = pair_rho(random_simplex(rng, 4, 3))
        b = dict(zip(rho_names(4)[0], rho))
        cm = cayley_menger_content2(_distance_matrix(rho, 4))
        assert abs(parse(VVV).eval(b) - cm) <= 1e-12 * max(1.0, abs(cm))


def _distance_matrix(rho, N):
    D = np.zeros((N, N))
    for (i, j), v in zip(itertools.combinations(range(N), 2), rho):
        D[i, j] = D[j, i] = v
    return D


def test_unit_simplex_contents():
    # the standard k-simplex {0, e_1..e_k} has content 1/k!
    for k in range(1, 6):
        pts = np.vstack([np.zeros(k), np.eye(k)])
        D = np.sum((pts[:, None] - pts[None]) ** 2, axis=-1)
        assert cayley_menger_content2(D) == pytest.approx(1 / math.factorial(k) ** 2, rel=1e-12)


def test_determinant_exact_and_float():
    M = [[Fraction(2), Fraction(1)], [Fraction(1), Fraction(3)]]
    assert determinant(M) == 5
    A = np.random.default_rng(3).standard_normal((6, 6))
    assert determinant(A) == pytest.approx(np.linalg.det(A), rel=1e-12)


@pytest.mark.parametrize("N", [3, 4, 5, 6])
def test_contents_are_non_negative(rng, N):
    for _ in range(30):
        vv = volume_variables(N, pair_rho(random_simplex(rng, N)))
        assert all(v >= -1e-12 for v in vv.values)


@pytest.mark.parametrize("N", [3, 4, 5])
def test_auto_and_cayley_menger_agree(rng, N):
    rho = pair_rho(random_simplex(rng, N))
    a = volume_variables(N, rho).as_array()
    b = volume_variables(N, rho, method="cayley-menger").as_array()
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


def test_volume_jacobian_matches_finite_differences(rng):
    rho = pair_rho(random_simplex(rng, 4))
    J = volume_jacobian(4, rho)
    h = 1e-6
    for k in range(6):
        up, dn = rho.copy(), rho.copy()
        up[k] += h
        dn[k] -= h
        fd = (volume_variables(4, up).as_array() - volume_variables(4, dn).as_array()) / (2 * h)
        np.testing.assert_allclose(J[:, k], fd, rtol=1e-6, atol=1e-9)


# ---- volume Hamiltonians ----

def test_three_body_volume_kinetic_value():
    H = vol_hamiltonian(3)
    assert H.eval({"V1": 3, "V2": Fraction(3, 16), "P1": 1, "P2": 0}) == 18


def test_two_body_volume_equals_rho():
    vol = poly_from_expression(vol_hamiltonian(2).substitute({"V1": parse("rho12"), "P1": parse("prho12")}))
    assert vol == poly_from_expression(rho_hamiltonian(2, [1, 1]))


@pytest.mark.parametrize("N,tol", [(3, 1e-10), (4, 1e-10), (5, 1e-8), (6, 1e-8)])
def test_volume_chain_rule_identity(rng, N, tol):
    qn, pn = rho_names(N)
    Hrho = rho_hamiltonian(N, [1] * N).compile(qn + pn)
    vn = [f"V{k}" for k in range(1, N)] + [f"P{k}" for k in range(1, N)]
    Hvol = vol_hamiltonian(N).compile(vn)
    for _ in range(50 if N > 4 else 200):
        rho = pair_rho(random_simplex(rng, N))
        P = rng.uniform(-1, 1, N - 1)
        J = volume_jacobian(N, rho)
        lhs = Hvol.value(np.concatenate((volume_variables(N, rho).as_array(), P)))
        rhs = Hrho.value(np.concatenate((rho, J.T @ P)))
        assert abs(lhs - rhs) <= tol * max(1.0, abs(rhs))


def test_vol_model_charts():
    for N in range(2, 7):
        model = vol_model(N)
        assert model.chart.q_names == tuple(f"V{k}" for k in range(1, N))


# ---- catalog ----

def test_catalog_names():
    assert catalog.names() == ["hc", "hc2", "Hmf", "HN", "HRNrho",
                               "vol-N2", "vol-N3", "vol-N4", "vol-N5", "vol-N6"]


def test_catalog_build_converts_strings():
    model = catalog.build("nbody", N="2", d="2", masses="1,3")
    assert model.chart.n == 4
    assert model.chart.constants["m2"] == 3.0


def test_catalog_errors():
    with pytest.raises(KeyError):
        catalog.build("nope")
    with pytest.raises(KeyError):
        catalog.build("hc2", N="3")
