"""Deterministic maps, ODE limits, closed forms, cobweb helpers."""
import numpy as np
import pytest

from bellcycle.dynmaps import (
    AmpPair,
    ThetaState,
    amp_flip_map,
    amp_map,
    analytic_curves,
    cobweb,
    concurrence_map,
    concurrence_noflip,
    flip_population,
    mw_flip_map_step,
    mw_map_step,
    peak_time,
    theta_flip_ode_step,
    theta_of_t,
    theta_ode_step,
)


# ---------------------------------------------------------------------------
# single map steps
# ---------------------------------------------------------------------------


def test_amp_map_at_the_bell_point():
    # a = d = 1/sqrt(2) with d = -a: a' = a (1 - eps/2)
    got = amp_map(1.0 / np.sqrt(2.0), 0.1)
    assert got == pytest.approx(0.6717514421272202, rel=1e-12)
    assert got == pytest.approx(0.95 / np.sqrt(2.0), rel=1e-14)


def test_amp_flip_map_from_full_excitation():
    for eps in (0.1, 0.02, 1e-3):
        assert amp_flip_map(1.0, eps) == -eps


def test_pair_flip_step_from_full_excitation():
    eps = 0.05
    p = mw_flip_map_step(AmpPair(1.0, 0.0), eps)
    norm = np.sqrt(1.0 + eps * eps)
    assert p.a == pytest.approx(-eps / norm, abs=1e-15)
    assert p.d == pytest.approx(1.0 / norm, abs=1e-15)


def test_map_is_singular_on_the_diagonal():
    with pytest.raises(ZeroDivisionError):
        mw_map_step(AmpPair(1.0 / np.sqrt(2.0), 1.0 / np.sqrt(2.0)), 0.01)
    # the 1-d maps restore d with the opposite sign, so they never divide
    # by zero on their domain
    assert np.isfinite(amp_map(0.0, 0.01))


def test_concurrence_map_frozen_values():
    assert concurrence_map(0.5, 0.1, rising=True) == pytest.approx(
        0.6366025403784439, rel=1e-12
    )
    assert concurrence_map(0.5, 0.1, rising=False) == pytest.approx(
        0.4633974596215561, rel=1e-12
    )


def test_concurrence_map_fixed_point_and_floor():
    for eps in (0.1, 0.02):
        assert concurrence_map(1.0, eps, rising=True) == 1.0
        assert concurrence_map(1.0, eps, rising=False) == 1.0
        assert concurrence_map(0.0, eps, rising=True) == pytest.approx(
            2.0 * eps, abs=1e-15
        )
        assert concurrence_map(0.0, eps, rising=False) == 0.0


def test_rising_increment_closed_form():
    # C' - C = eps (1 - C + sqrt(1 - C^2)) on the rising branch, exactly,
    # wherever the O(eps^2) overshoot clamp at C = 1 does not engage
    for eps in (0.1, 0.01):
        for c in (0.0, 0.2, 0.5, 0.9, 0.99):
            closed = eps * (1.0 - c + np.sqrt(1.0 - c * c))
            if c + closed >= 1.0:
                assert concurrence_map(c, eps, rising=True) == 1.0
                continue
            inc = concurrence_map(c, eps, rising=True) - c
            assert inc == pytest.approx(closed, abs=1e-14)


def test_concurrence_map_validates_input():
    with pytest.raises(ValueError):
        concurrence_map(-0.1, 0.01, rising=True)
    with pytest.raises(ValueError):
        concurrence_map(1.1, 0.01, rising=True)


# ---------------------------------------------------------------------------
# two-step law
# ---------------------------------------------------------------------------


def test_two_step_concurrence_law():
    # alternating branches compose to C -> C (1 - 2 eps) + 2 eps + O(eps^2)
    gaps = {}
    for c0 in (0.3, 0.5):
        for eps in (1e-2, 1e-3, 1e-4):
            c2 = concurrence_map(concurrence_map(c0, eps, True), eps, False)
            gaps[(c0, eps)] = abs(c2 - (c0 * (1.0 - 2.0 * eps) + 2.0 * eps))
            assert gaps[(c0, eps)] < 2.0 * eps * eps
        assert gaps[(c0, 1e-3)] / gaps[(c0, 1e-2)] == pytest.approx(0.01, rel=0.15)


def test_two_step_law_through_the_pair_map():
    for eps in (1e-2, 1e-3):
        p = AmpPair(np.cos(0.4), -np.sin(0.4))
        c0 = p.concurrence
        p2 = mw_flip_map_step(mw_flip_map_step(p, eps), eps)
        assert abs(p2.concurrence - (c0 * (1.0 - 2.0 * eps) + 2.0 * eps)) < 3.0 * eps * eps


# ---------------------------------------------------------------------------
# flip-map attractors
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "eps, frozen",
    [(0.1, 0.725476250110), (0.02, 0.710669054519)],
)
def test_amp_flip_map_two_cycle(eps, frozen):
    # the unnormalized flip map alternates between +-1/sqrt(2 - eps) exactly
    x = 1.0
    for _ in range(5000):
        x = amp_flip_map(x, eps)
    assert abs(x) == pytest.approx(1.0 / np.sqrt(2.0 - eps), abs=1e-12)
    assert abs(x) == pytest.approx(frozen, abs=1e-9)
    assert np.sign(amp_flip_map(x, eps)) == -np.sign(x)


@pytest.mark.parametrize(
    "eps, frozen_a, frozen_c",
    [(0.1, 0.724987548870, 0.998687707576), (0.02, 0.710651019293, 0.999949500063)],
)
def test_pair_flip_map_two_cycle(eps, frozen_a, frozen_c):
    p = AmpPair(1.0, 0.0)
    for _ in range(5000):
        p = mw_flip_map_step(p, eps)
    assert abs(p.a) == pytest.approx(frozen_a, abs=1e-9)
    assert p.concurrence == pytest.approx(frozen_c, abs=1e-9)
    # cycle concurrence deficit is eps^2/8 at leading order
    assert abs(p.concurrence - (1.0 - eps * eps / 8.0)) < eps**3


@pytest.mark.parametrize("eps", [0.1, 0.02])
def test_concurrence_map_reaches_the_bell_cycle(eps):
    # in the concurrence variable the Bell cycle C = 1 is an exact fixed
    # point, reached in float64 well before 600 alternating iterates
    c, rising = 0.0, True
    for _ in range(600):
        c = concurrence_map(c, eps, rising)
        rising = not rising
    assert c == 1.0
    a_rec = np.sqrt(0.5 + 0.5 * np.sqrt(1.0 - c * c))
    assert abs(a_rec - 1.0 / np.sqrt(2.0)) < 1e-6


# ---------------------------------------------------------------------------
# theta flows and closed forms
# ---------------------------------------------------------------------------


def test_noflip_closed_form_invariant():
    for gamma in (1.0, 2.0):
        for t in (0.2, 0.5, 1.0):
            th = theta_of_t(t / gamma, gamma)
            assert np.exp(-th) * np.cos(th) == pytest.approx(np.exp(-t), abs=1e-12)


def test_theta_of_t_edges():
    assert theta_of_t(0.0) == pytest.approx(0.0, abs=1e-12)
    assert theta_of_t(50.0) == pytest.approx(np.pi / 2, abs=1e-10)
    with pytest.raises(ValueError):
        theta_of_t(-0.1)


def test_noflip_rk4_matches_closed_form():
    st = ThetaState(0.0)
    dt = 1e-3
    for _ in range(1000):
        st = theta_ode_step(st, dt)
    assert st.theta == pytest.approx(theta_of_t(1.0), abs=1e-8)


@pytest.mark.parametrize("gamma", [1.0, 2.0])
def test_initial_rate_is_gamma(gamma):
    dt = 1e-6
    st = theta_ode_step(ThetaState(0.0), dt, gamma)
    assert st.theta / dt == pytest.approx(gamma, rel=1e-4)


def test_flip_ode_fixed_point():
    st = ThetaState(np.pi / 4.0)
    out = theta_flip_ode_step(st, 0.1)
    assert out.theta == pytest.approx(np.pi / 4.0, abs=1e-15)


def test_flip_ode_matches_population_closed_form():
    st = ThetaState(0.0)
    dt = 1e-3
    for k in range(3000):
        st = theta_flip_ode_step(st, dt)
        t = (k + 1) * dt
        assert np.cos(st.theta) ** 2 == pytest.approx(flip_population(t), abs=1e-8)


def test_peak_time_value():
    assert peak_time() == pytest.approx(1.131971753677421, abs=1e-15)
    assert peak_time(2.0) == pytest.approx(1.131971753677421 / 2.0, abs=1e-15)


def test_noflip_concurrence_peaks_at_peak_time():
    te = peak_time()
    assert concurrence_noflip(te) == pytest.approx(1.0, abs=1e-9)
    assert concurrence_noflip(te - 0.2) < concurrence_noflip(te)
    assert concurrence_noflip(te + 0.2) < concurrence_noflip(te)


def test_map_converges_to_ode_at_first_order():
    # n = 1/eps steps of the discrete map cover unit time; the error against
    # the dense RK4 flow halves when eps halves
    theta0 = 0.3
    st = ThetaState(theta0)
    for _ in range(20000):
        st = theta_ode_step(st, 5e-5)
    theta_ref = st.theta
    errs = {}
    for eps in (0.02, 0.01, 0.005):
        p = ThetaState(theta0).pair
        for _ in range(round(1.0 / eps)):
            p = mw_map_step(p, eps)
        errs[eps] = abs(np.arctan2(-p.d, p.a) - theta_ref)
    assert 1.6 < errs[0.02] / errs[0.01] < 2.4
    assert 1.6 < errs[0.01] / errs[0.005] < 2.4


# ---------------------------------------------------------------------------
# reference curves
# ---------------------------------------------------------------------------


def test_analytic_curves_keys_and_edges():
    ts = np.linspace(0.0, 3.0, 7)
    curves = analytic_curves(ts, gamma=1.0, eta=1.0)
    assert set(curves) == {
        "c_ideal_flip",
        "c_mw_noflip",
        "c_max_eta",
        "c_pd_nofeedback",
        "c_hom_nofeedback",
        "pop_flip",
    }
    assert curves["c_ideal_flip"][0] == 0.0
    assert curves["c_ideal_flip"][-1] == pytest.approx(1.0 - np.exp(-3.0), abs=1e-15)
    assert abs(curves["c_mw_noflip"][0]) < 1e-12
    assert np.all(curves["c_max_eta"] == 1.0)
    assert curves["c_pd_nofeedback"][0] == 0.0
    assert curves["pop_flip"][0] == 1.0
    assert np.all(np.diff(curves["pop_flip"]) < 0.0)


def test_curve_efficiency_behavior():
    ts = np.linspace(0.0, 2.0, 5)
    half = analytic_curves(ts, eta=0.5)
    assert np.all(half["c_hom_nofeedback"] == 0.0)
    lossy = analytic_curves(np.array([np.log(2.0)]), eta=0.9)
    # the counting curve peaks at t = ln 2 with value eta / 2
    assert lossy["c_pd_nofeedback"][0] == pytest.approx(0.45, abs=1e-12)
    assert lossy["c_max_eta"][0] == pytest.approx(1.0 / (0.1 * 2.0 + 0.9), abs=1e-14)


# ---------------------------------------------------------------------------
# cobweb helper
# ---------------------------------------------------------------------------


def test_cobweb_structure():
    fn = lambda x: amp_flip_map(x, 0.1)
    n_iter = 10
    cw = cobweb(fn, 1.0, n_iter, -1.0, 1.0, n_curve=101)
    assert cw.iterates.shape == (n_iter + 1,)
    assert cw.iterates[0] == 1.0
    for k in range(n_iter):
        assert cw.iterates[k + 1] == fn(cw.iterates[k])
    assert cw.seg_x.shape == cw.seg_y.shape == (2 * n_iter + 1,)
    assert (cw.seg_x[0], cw.seg_y[0]) == (1.0, 1.0)
    for k in range(n_iter):
        # vertical leg lands on the graph, horizontal leg on the diagonal
        assert cw.seg_x[2 * k + 1] == cw.iterates[k]
        assert cw.seg_y[2 * k + 1] == cw.iterates[k + 1]
        assert cw.seg_x[2 * k + 2] == cw.seg_y[2 * k + 2] == cw.iterates[k + 1]
    assert cw.curve_x[0] == -1.0 and cw.curve_x[-1] == 1.0
    assert cw.curve_y[50] == fn(cw.curve_x[50])


# ---------------------------------------------------------------------------
# container validation
# ---------------------------------------------------------------------------


def test_amp_pair_validation():
    with pytest.raises(ValueError):
        AmpPair(0.8, 0.7)
    p = AmpPair(0.8, -0.6)
    assert p.concurrence == pytest.approx(0.96, abs=1e-15)


def test_theta_state_validation():
    with pytest.raises(ValueError):
        ThetaState(-0.1)
    with pytest.raises(ValueError):
        ThetaState(np.pi / 2 + 0.01)
    pair = ThetaState(np.pi / 4).pair
    assert pair.a == pytest.approx(1.0 / np.sqrt(2.0), abs=1e-15)
    assert pair.d == pytest.approx(-1.0 / np.sqrt(2.0), abs=1e-15)
