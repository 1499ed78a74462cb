import math

import numpy as np
import numpy.testing as npt
import pytest
from scipy.integrate import solve_ivp

from grimreaper.errors import AmbiguousDichotomyError, DomainError, UnsupportedFamilyError
from grimreaper.integrator import integrate
from grimreaper.odes import family, scalar_rhs
from grimreaper.phase import (
    CORNERS,
    HALF_PI,
    OrbitTag,
    PhasePoint,
    classify_orbit,
    closed_orbit,
    equilibria,
    find_separatrix,
    nullcline_lambda,
    orbit_symmetry,
    planar_portrait,
    r_prime_positive_on_grid,
    separatrix,
    shoot,
    symmetry_residual,
)

AT2 = math.atan(2.0)
HV = family("hyperbolic", "vz")
R_STAR = 0.9295147983457742  # regression value from the bisection shooting


def test_nullcline_limits():
    assert nullcline_lambda(math.pi - 1e-9) == pytest.approx(AT2, abs=1e-8)
    assert nullcline_lambda(1e-9) == pytest.approx(-AT2, abs=1e-8)
    assert nullcline_lambda(HALF_PI + 1e-9) == pytest.approx(HALF_PI, abs=1e-8)
    for bad in (HALF_PI, 0.0, math.pi):
        with pytest.raises(DomainError):
            nullcline_lambda(bad)


def test_rho_rate_vanishes_on_nullcline():
    r = np.linspace(0.05, math.pi - 0.05, 41)
    r = r[np.abs(r - HALF_PI) > 1e-3]
    rho = nullcline_lambda(r)
    npt.assert_allclose(2 * np.cos(rho) + np.sin(rho) * np.cos(r), 0, atol=1e-14)


def test_equilibria():
    eq = equilibria(HV)
    assert len(eq) == 2
    npt.assert_allclose(eq, [(HALF_PI, -HALF_PI), (HALF_PI, HALF_PI)], atol=1e-10)
    vc = [p for p in equilibria(family("vertical", "c+")) if abs(p.w) < HALF_PI]
    assert len(vc) == 1 and PhasePoint(2, 0).distance(vc[0]) < 1e-10


def test_parabolic_cminus_equilibria_root_scan():
    # y' = y cos(theta) forces cos(theta) = 0, so the zeros sit at theta = +-pi/2
    eq = equilibria(family("parabolic", "c-"))
    npt.assert_allclose(eq, [(2, -HALF_PI), (2, HALF_PI)], atol=1e-10)
    assert all(PhasePoint(2, 0).distance(p) > 1 for p in eq)


def test_symmetries():
    s = np.array([-1.0, 0.0, 1.0])
    eq = np.array([[HALF_PI, HALF_PI]] * 3)
    _, img = orbit_symmetry(s, eq, "anti-diagonal")
    npt.assert_allclose(img, [[HALF_PI, -HALF_PI]] * 3)
    # on a symmetric grid the orbit through (pi/2, 0) is its own anti-diagonal image
    grid = np.linspace(-3, 3, 121)
    f = scalar_rhs(HV)
    sol = [solve_ivp(f, (0, end), [HALF_PI, 0, 0], method="DOP853", rtol=1e-12, atol=1e-14,
                     dense_output=True).sol for end in (-3, 3)]
    uw = np.array([sol[int(q >= 0)](q)[[0, 2]] for q in grid])
    s2, img = orbit_symmetry(grid, uw, "anti-diagonal")
    npt.assert_allclose(s2, grid, atol=1e-12)
    npt.assert_allclose(img, uw, atol=1e-8)
    tr = integrate(HV, (1.0, 0, 0.2), (-2, 2))
    for which, shift in (("anti-diagonal", 1), ("rho-shift", 1), ("rho-shift", -1)):
        assert symmetry_residual(tr.s, tr.states[:, [0, 2]], which, shift) <= 1e-8
    with pytest.raises(ValueError):
        orbit_symmetry(s, eq, "mirror")


def test_r_prime_positive():
    assert r_prime_positive_on_grid()


def test_separatrix():
    res = separatrix()
    assert 1e-3 < res.r_star < HALF_PI - 1e-3
    assert res.width <= 1e-8
    assert res.r_star == pytest.approx(R_STAR, abs=1e-7)
    assert res.approach_distance <= 1e-3
    for (a0, b0), (a1, b1) in zip(res.history, res.history[1:]):
        assert a0 <= a1 < b1 <= b0
    assert shoot(res.bracket[0]).outcome == "below"
    assert shoot(res.bracket[1]).outcome == "above"


def test_separatrix_stable_under_halved_tolerances():
    a = separatrix()
    b = find_separatrix(1e-8, rtol=a.rtol / 2, atol=a.atol / 2)
    assert abs(a.r_star - b.r_star) <= 10 * 1e-8


def test_separatrix_rejects_bad_input():
    with pytest.raises(ValueError):
        find_separatrix(1e-13)
    with pytest.raises(AmbiguousDichotomyError):
        find_separatrix(1e-4, bracket=(1.2, 1.4))


def test_classify_orbit():
    sym = classify_orbit(HALF_PI)
    assert sym.tag is OrbitTag.SYMMETRIC_GRAPH
    assert set(sym.limits) == {"(pi, arctan 2)", "(0, -arctan 2)"}
    assert classify_orbit(R_STAR + 0.01).tag is OrbitTag.GRAPH
    ng = classify_orbit(R_STAR - 0.01)
    assert ng.tag is OrbitTag.NON_GRAPH
    assert ng.limits[1] == "(0, pi - arctan 2)"
    assert ng.limit_point("forward") == CORNERS["(0, pi - arctan 2)"]
    with pytest.raises(DomainError):
        classify_orbit(2.0)
    with pytest.raises(DomainError):
        classify_orbit(0.0)


def test_lambda_crossing_monotone_in_r0():
    r0s = [R_STAR + 0.01, 1.1, 1.3, 1.5, HALF_PI]
    xs = [classify_orbit(r).lambda_crossing for r in r0s]
    assert all(x is not None and x > HALF_PI for x in xs)
    assert all(a < b for a, b in zip(xs, xs[1:]))


def test_height_minimum_at_launch():
    for r0 in (0.3, R_STAR - 0.01, R_STAR + 0.01, 1.2, HALF_PI):
        oc = classify_orbit(r0)
        assert oc.z_min >= -1e-10
        assert abs(oc.s_at_z_min) <= 1e-6


def test_closed_orbits_vertical_cplus():
    fam = family("vertical", "c+")
    for y0 in (0.5, 1.0, 1.5):
        co = closed_orbit(fam, y0)
        assert co.return_distance <= 1e-6
        assert 0 < co.period < 50
    with pytest.raises(Exception):
        closed_orbit(fam, 2.0)  # the equilibrium does not loop


def test_portrait_vertical_px_arcs():
    ds = planar_portrait(family("vertical", "px"), [(0.5, 0.0), (1.0, 0.0), (3.0, 0.0)])
    for o in ds.orbits:
        assert o.tag == "arc"
        assert all(e.startswith("y->0") for e in o.ends)
        assert abs(o.uw[0, 1] - math.pi) < 0.05 and abs(o.uw[-1, 1]) < 0.05
        assert o.uw[0, 0] < 0.1 and o.uw[-1, 0] < 0.1
    assert ds.equilibria == []


def test_portrait_vertical_cplus_closed():
    ds = planar_portrait(family("vertical", "c+"), [(y, 0.0) for y in (0.3, 1.0, 1.7)])
    assert [o.tag for o in ds.orbits] == ["closed"] * 3
    assert all(o.return_distance <= 1e-6 for o in ds.orbits)


def test_portrait_vertical_cminus_three_behaviours():
    grid = [(0.5, 0.0), (1.0, 1.0), (3.0, 0.0)]
    ds = planar_portrait(family("vertical", "c-"), grid)
    ends = [tuple(sorted(o.ends)) for o in ds.orbits]
    assert ends == [("y->0", "y->0"), ("y->0", "y->inf"), ("y->inf", "y->inf")]


def test_portrait_rejects_non_planar():
    for fid in ("vertical-vz", "vertical-hxy", "parabolic-vz", "hyperbolic-px"):
        with pytest.raises(UnsupportedFamilyError):
            planar_portrait(family(*fid.split("-")), [(1.0, 0.0)])


def test_portrait_deterministic():
    fam = family("hyperbolic", "vz")
    a = planar_portrait(fam, [(0.5, 0.0), (1.2, 0.0)])
    b = planar_portrait(fam, [(0.5, 0.0), (1.2, 0.0)])
    for oa, ob in zip(a.orbits, b.orbits):
        assert oa.ends == ob.ends and np.array_equal(oa.uw, ob.uw)
