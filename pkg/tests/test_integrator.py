import math

import numpy as np
import numpy.testing as npt
import pytest

from grimreaper.errors import IntegrationError
from grimreaper.integrator import EventSpec, best_sign, integrate
from grimreaper.odes import closed_form, family, parabolic_v_angle


def test_span_validation():
    fam = family("parabolic", "vz")
    with pytest.raises(ValueError):
        integrate(fam, (1, 0, 0), (1, -1))
    with pytest.raises(ValueError):
        integrate(fam, (1, 0, 0), (0, math.inf))
    with pytest.raises(ValueError):
        integrate(fam, (1, 0, 0), (1, 2))  # s_initial = 0 outside the span
    with pytest.raises(ValueError):
        integrate(fam, (1, 0), (-1, 1))


def test_two_sided_samples_strictly_increasing():
    fam = family("parabolic", "vz")
    tr = integrate(fam, (1, 0, 0.3), (-2, 3))
    assert tr.s[0] == -2 and tr.s[-1] == 3
    assert np.all(np.diff(tr.s) > 0)
    assert 0.0 in tr.s
    assert len(tr) == len(tr.states) == len(tr.H) == len(tr.residual)
    assert tr.status == "completed"


def test_one_sided_from_shifted_start():
    fam = family("parabolic", "vz")
    s0 = 0.5
    tr = integrate(fam, closed_form(fam, s0), (s0, 2.0), s_initial=s0)
    npt.assert_allclose(tr.states, closed_form(fam, tr.s), atol=1e-8)


def test_angle_event_localised():
    # the bigraph angle crosses pi/2 exactly where tan(theta/2) = 1
    fam = family("parabolic", "vz")
    tr = integrate(fam, closed_form(fam, 0.0), (-4, 4))
    (ev,) = tr.events_named("angle=+pi/2")
    s_exact = 2 / math.sqrt(5) * math.atanh(1 / math.sqrt(5))
    assert parabolic_v_angle(s_exact) == pytest.approx(math.pi / 2, abs=1e-14)
    assert ev.s == pytest.approx(s_exact, abs=1e-9)
    assert ev.state[2] == pytest.approx(math.pi / 2, abs=1e-10)


def test_terminal_event_stops_both_directions():
    # y falls from its top towards 0 on both sides of the bigraph
    fam = family("parabolic", "vz")
    stop = EventSpec("y=1.2", lambda s, u: u[0] - 1.2, True, -1)
    tr = integrate(fam, closed_form(fam, 0.0), (-4, 4), extra_events=[stop])
    hits = tr.events_named("y=1.2")
    assert len(hits) == 2 and tr.status == "terminated"
    assert tr.s[0] == pytest.approx(hits[0].s) and tr.s[-1] == pytest.approx(hits[1].s)
    npt.assert_allclose(tr.states[[0, -1], 0], 1.2, atol=1e-9)
    npt.assert_allclose(closed_form(fam, tr.s[[0, -1]])[:, 0], 1.2, atol=1e-8)


def test_direction_is_along_travel():
    # moving backwards, y decreases towards the left end as well
    fam = family("parabolic", "vz")
    y0 = closed_form(fam, 0.0)[0]
    down = EventSpec("y-down", lambda s, u: u[0] - 0.9 * y0, True, -1)
    tr = integrate(fam, closed_form(fam, 0.0), (-6, 6), extra_events=[down])
    kinds = [(e.kind, np.sign(e.s)) for e in tr.events if e.kind == "y-down"]
    assert kinds == [("y-down", -1.0), ("y-down", 1.0)]


def test_domain_guard_event_and_failure():
    fam = family("vertical", "c-")
    tr = integrate(fam, (0.0, 1.0, 0.0), (-40, 40), raise_on_failure=False, max_steps=2000)
    assert tr.status.startswith("failed") or "domain-guard" in tr.event_names()
    with pytest.raises(IntegrationError) as info:
        integrate(fam, (0.0, 1.0, 0.0), (-40, 40), max_steps=50)
    assert info.value.trajectory is not None
    assert len(info.value.trajectory) > 1


def test_equilibrium_event():
    fam = family("vertical", "c+")
    tr = integrate(fam, (0.0, 2.0, 0.0), (0, 1))
    assert "equilibrium" in tr.event_names()
    assert tr.status == "terminated"


def test_deterministic():
    fam = family("hyperbolic", "vz")
    a = integrate(fam, (1.0, 0, 0), (-3, 3))
    b = integrate(fam, (1.0, 0, 0), (-3, 3))
    assert np.array_equal(a.s, b.s) and np.array_equal(a.states, b.states)


def test_best_sign():
    assert best_sign(np.array([1.0, 2.0]), np.array([1.0, 2.0])) == 1
    assert best_sign(np.array([1.0, 2.0]), np.array([-1.0, -2.0])) == -1


def test_samples_and_first_integral_column():
    fam = family("hyperbolic", "hxy")
    tr = integrate(fam, (1.0, 0.0, 0.8), (-1, 1))
    rows = list(tr.samples())
    assert len(rows) == len(tr)
    assert rows[0][6] is not None
    tr2 = integrate(family("parabolic", "vz"), (1, 0, 0), (-1, 1))
    assert tr2.first_integral is None
