import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from partint.dynamics import (
    IntegratorSpec,
    drift_report,
    integrate,
    split_hamiltonian,
    step_implicit_midpoint,
    step_rk4,
    step_strang,
)
from partint.errors import IntegrationAborted, NonConvergence, SeparabilityViolation
from partint.models import central_force, magnetic_pair, rho_model
from partint.poisson import Chart

HO = Chart("ho", ("q",), ("p",))
HO_H = "(p^2 + q^2)/2"


# ---- spec validation ----

@pytest.mark.parametrize("kw", [
    {"scheme": "euler"}, {"dt": 0.0}, {"dt": -1e-3}, {"steps": -1}, {"steps": 1.5},
    {"newton_tol": 0.0}, {"newton_max_iter": 0},
])
def test_spec_rejects_bad_values(kw):
    with pytest.raises(ValueError):
        IntegratorSpec(**kw)


def test_total_time():
    assert IntegratorSpec(dt=0.25, steps=8).total_time == 2.0


# ---- implicit midpoint ----

def test_oscillator_is_an_exact_discrete_rotation():
    # midpoint on the oscillator is the Cayley map: rotation by 2 atan(dt/2) per step
    dt, steps = 0.1, 63
    tr = integrate(HO_H, HO.point([1, 0]), IntegratorSpec(dt=dt, steps=steps))
    theta = 2 * math.atan(dt / 2) * steps
    np.testing.assert_allclose(tr.final.values, [math.cos(theta), -math.sin(theta)], atol=1e-12)
    assert np.abs(np.diff(tr.observables["H"])).max() <= 1e-13


def test_oscillator_returns_after_one_period():
    steps = 200
    tr = integrate(HO_H, HO.point([1, 0]), IntegratorSpec(dt=2 * math.pi / steps, steps=steps))
    assert np.abs(tr.final.values - [1, 0]).max() <= 1e-3


def test_free_particle_advances_exactly():
    chart = Chart("free", ("q",), ("p",))
    x = step_implicit_midpoint("p^2/2", chart.point([0.25, 1.5]), 0.125)
    assert x.values.tolist() == [0.25 + 1.5 * 0.125, 1.5]


def test_collision_free_rho_energy_drift():
    model = rho_model(2, V="rho12 + 1/rho12")
    tr = integrate(model.hamiltonian, model.chart.point([1.0, 0.3]), IntegratorSpec(dt=1e-3, steps=10_000))
    assert tr.completed
    assert drift_report(tr).energy_drift < 1e-6


@pytest.mark.xfail(strict=True, reason="V = rho12 has no bounded orbits in the rho chart: "
                                       "rho(4 p^2 + 1) = E forces p to blow up (collision) in finite time")
def test_two_body_harmonic_rho_energy_to_1e_10():
    model = rho_model(2, V="rho12")
    tr = integrate(model.hamiltonian, model.chart.point([1.0, 0.3]), IntegratorSpec(dt=1e-3, steps=10_000))
    assert tr.completed and drift_report(tr).energy_drift < 1e-10


def test_quadratic_invariants_are_conserved():
    # pphi is linear, the magnetic lz is quadratic: both survive to Newton tolerance
    model = magnetic_pair()
    x0 = model.chart.point(Rx=0.1, Ry=-0.2, rx=0.8, ry=0.1, Kx=0.0, Ky=0.0, px=0.1, py=0.5)
    tr = integrate(model.hamiltonian, x0, IntegratorSpec(dt=1e-2, steps=300),
                   {"lz": model.resolve("lz")})
    lz = tr.observables["lz"]
    assert np.abs(lz - lz[0]).max() <= 1e-10


def test_time_reversal():
    model = central_force().spherical
    x0 = model.chart.point(r=1.2, phi=0.3, rho=0.7, pr=0.1, pphi=0.2, prho=-0.3)
    spec = IntegratorSpec()
    x1 = step_implicit_midpoint(model.hamiltonian, x0, 1e-2)
    back = step_implicit_midpoint(model.hamiltonian, x1, -1e-2)
    assert np.abs(back.values - x0.values).max() <= 10 * spec.newton_tol * (1 + np.abs(x0.values).max())


def test_non_convergence_is_reported():
    model = central_force().cartesian
    x0 = model.chart.point(x=0.01, y=0.0, z=0.0, px=0.0, py=0.0, pz=0.0)
    with pytest.raises(NonConvergence):
        step_implicit_midpoint(model.hamiltonian, x0, 1.0, IntegratorSpec(newton_max_iter=2))


# ---- splitting ----

def test_split_recognises_kinetic_and_potential():
    model = central_force().cartesian
    T, V = split_hamiltonian(model.hamiltonian, model.chart)
    assert set(T.free_symbols) <= {"px", "py", "pz", "m"}
    assert set(V.free_symbols) <= {"x", "y", "z"}


def test_split_rejects_mixed_kinetic_term():
    model = central_force().spherical
    with pytest.raises(SeparabilityViolation):
        split_hamiltonian(model.hamiltonian, model.chart)
    with pytest.raises(SeparabilityViolation):
        integrate(model.hamiltonian, model.chart.point(r=1, rho=0.5), IntegratorSpec("strang-split", steps=1))


def test_strang_checks_symbols():
    with pytest.raises(SeparabilityViolation):
        step_strang("p*q", "q^2", HO.point([1, 0]), 0.1)


def test_drift_only():
    x = step_strang("p^2/2", "0", HO.point([1.0, 2.0]), 0.5)
    assert x.values.tolist() == [2.0, 2.0]


def test_kepler_circular_orbit_with_strang():
    model = central_force().cartesian
    x0 = model.chart.point(x=1, y=0, z=0, px=0, py=1, pz=0)
    steps = 6284
    tr = integrate(model.hamiltonian, x0, IntegratorSpec("strang-split", dt=2 * math.pi / steps, steps=steps))
    r = np.linalg.norm(tr.states[:, :3], axis=1)
    assert np.abs(r - 1).max() <= 1e-6


# ---- integrate ----

def test_zero_steps():
    tr = integrate(HO_H, HO.point([0.3, 0.4]), IntegratorSpec(steps=0))
    assert len(tr) == 1 and tr.final.values.tolist() == [0.3, 0.4]


def test_trajectory_shape_and_series():
    tr = integrate(HO_H, HO.point([1, 0]), IntegratorSpec(dt=0.01, steps=50), ["q*p"])
    assert tr.states.shape == (51, 2)
    assert np.all(np.diff(tr.times) > 0)
    assert set(tr.observables) == {"H", "q*p"}
    assert all(len(v) == 51 for v in tr.observables.values())
    np.testing.assert_array_equal(tr.series("q"), tr.states[:, 0])
    assert len(tr.points) == 51


def test_central_force_reduction_chain():
    model = central_force().spherical
    x0 = model.chart.point(r=1.3, phi=0.2, rho=0.8, pr=0.1, pphi=0.0, prho=0.0)
    tr = integrate(model.hamiltonian, x0, IntegratorSpec(dt=1e-3, steps=2000),
                   {"pphi": "pphi", "prho": "prho"})
    assert np.all(tr.observables["pphi"] == 0.0)
    assert np.abs(tr.observables["prho"]).max() == 0.0


def test_abort_returns_truncated_trajectory():
    model = central_force().cartesian
    x0 = model.chart.point(x=0.05, y=0, z=0, px=-1.0, py=0, pz=0)
    tr = integrate(model.hamiltonian, x0, IntegratorSpec(dt=1e-2, steps=100))
    assert not tr.completed
    assert 0 < len(tr) < 101
    with pytest.raises(IntegrationAborted):
        tr.raise_for_error()


# ---- drift report ----

def test_drift_report_flags_escaping_level_set():
    tr = integrate(HO_H, HO.point([0, 1]), IntegratorSpec(dt=0.01, steps=100), {"q": "q", "p": "p"})
    rep = drift_report(tr)
    byname = {o.name: o for o in rep.observables}
    assert byname["q"].flagged and not byname["q"].relative
    assert not byname["p"].flagged and byname["p"].relative
    assert rep.flagged == ["q"]


def test_off_manifold_start_is_relative():
    tr = integrate(HO_H, HO.point([0.5, 0]), IntegratorSpec(dt=0.01, steps=10), {"q": "q"})
    (o,) = drift_report(tr).observables
    assert o.initial == 0.5 and o.relative and not o.flagged


def test_drift_shrinks_fourfold_when_dt_halves():
    model = rho_model(3, V="rho12+rho13+rho23+1/rho12+1/rho13+1/rho23")
    x0 = model.chart.point([1, 1.2, 0.9, 0.1, -0.2, 0.15])
    d1 = drift_report(integrate(model.hamiltonian, x0, IntegratorSpec(dt=0.02, steps=100))).energy_drift
    d2 = drift_report(integrate(model.hamiltonian, x0, IntegratorSpec(dt=0.01, steps=200))).energy_drift
    assert 3.2 < d1 / d2 < 4.8


def test_rk4_drift_grows_while_midpoint_stays_bounded():
    model = rho_model(3, V="rho12+rho13+rho23+1/rho12+1/rho13+1/rho23")
    x0 = model.chart.point([1, 1.2, 0.9, 0.1, -0.2, 0.15])
    out = {}
    for scheme in ("implicit-midpoint", "rk4-reference"):
        tr = integrate(model.hamiltonian, x0, IntegratorSpec(scheme, dt=0.1, steps=800))
        E = tr.observables["H"]
        d = np.abs(E - E[0]) / abs(E[0])
        h = len(d) // 2
        out[scheme] = (d[:h].max(), d[h:].max())
    mid, rk = out["implicit-midpoint"], out["rk4-reference"]
    assert mid[1] < 1.1 * mid[0]
    assert rk[1] > 1.5 * rk[0]
    assert rk[1] > mid[1]


# ---- convergence and invariance properties ----

@pytest.mark.parametrize("scheme", ["implicit-midpoint", "strang-split"])
def test_second_order_convergence(scheme):
    model = central_force().cartesian
    x0 = model.chart.point(x=1, y=0, z=0.1, px=0, py=0.9, pz=0.05)
    ref = integrate(model.hamiltonian, x0, IntegratorSpec("rk4-reference", dt=1e-4, steps=10_000)).final.values
    dts = [0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001]
    errs = []
    for dt in dts:
        s = integrate(model.hamiltonian, x0, IntegratorSpec(scheme, dt=dt, steps=round(1 / dt))).final.values
        errs.append(np.abs(s - ref).max())
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    assert abs(slope - 2.0) <= 0.2


def test_rk4_step_matches_known_fourth_order():
    x = step_rk4(HO_H, HO.point([1, 0]), 0.1)
    # RK4 on the oscillator applies the degree-4 Taylor polynomial of exp(-i dt)
    c = 1 - 0.1**2 / 2 + 0.1**4 / 24
    s = 0.1 - 0.1**3 / 6
    np.testing.assert_allclose(x.values, [c, -s], atol=1e-15)


@settings(max_examples=15)
@given(st.floats(0.8, 1.6), st.floats(0.3, 0.9), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_zero_set_invariance_central_force(r, rho, pr, prho):
    model = central_force().spherical
    x0 = model.chart.point(r=r, phi=0.0, rho=min(rho, r), pr=pr, pphi=0.0, prho=prho)
    tr = integrate(model.hamiltonian, x0, IntegratorSpec(dt=1e-3, steps=300), {"pphi": "pphi"})
    if tr.completed:
        assert np.abs(tr.observables["pphi"]).max() <= 1e-8


def test_zero_set_invariance_magnetic_pair():
    model = magnetic_pair()
    lz = model.resolve("lz")
    x0 = model.chart.point(Rx=0.0, Ry=0.0, rx=1.0, ry=0.2, Kx=0.0, Ky=0.0, px=0.2, py=0.3)
    tr = integrate(model.hamiltonian, x0, IntegratorSpec(dt=1e-3, steps=10_000), {"lz": lz})
    assert tr.completed
    assert np.abs(tr.observables["lz"] - tr.observables["lz"][0]).max() < 1e-8
