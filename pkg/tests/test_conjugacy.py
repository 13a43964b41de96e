import cmath
import math
import random
from fractions import Fraction

import mpmath
import pytest

from ckdyn.automorphism import AutomorphismSpec
from ckdyn.boettcher import phi
from ckdyn.conjugacy import ModelPoint, SeqWindow, WindowTooShort, asymptotic_z1n, assemble_G, \
    build_omega, certified_order, compose_omega, contraction_report, critical_exponent, \
    deck_action, deck_delta, fit_q, g0_series, iterate_g, iterate_g_history, j_distance, \
    lambda_roots, model_constants, omega_apply, omega_iterate, orbit_window, refine_once, \
    refine_to_class, sample_model_points, shift_value, stable_order, support_exponents, \
    verify_conjugacy_numeric, verify_conjugacy_series
from ckdyn.genseries import GenSeries
from ckdyn.winding import DyadicLike


# -- roots, constants, omega ---------------------------------------------------------------

def test_lambda_roots_closed_form():
    roots = lambda_roots(AutomorphismSpec(3, 2, (1, 0)))
    assert roots[0] == pytest.approx(-1j / math.sqrt(2))
    assert roots[1] == pytest.approx(1j / math.sqrt(2))


@pytest.mark.parametrize("k,d,a2", [(2, 2, 0.5), (2, 3, 1 + 1j), (4, 2, 1.5j), (5, 3, -2)])
def test_lambda_roots_residual_and_order(k, d, a2):
    spec = AutomorphismSpec(k, d, (a2,) + (0,) * (k - 2))
    roots = lambda_roots(spec)
    assert len(roots) == k - 1
    assert all(abs(d * r ** (k - 1) + a2) <= 1e-12 for r in roots)
    phases = [cmath.phase(r) for r in roots]
    assert phases == sorted(phases)
    assert len({round(r.real, 9) + 1j * round(r.imag, 9) for r in roots}) == k - 1
    if k == 2:
        assert roots[0] == pytest.approx(-a2 / d)


def test_critical_exponent():
    assert critical_exponent(AutomorphismSpec(3, 2, (0.5, 0))) == Fraction(4, 3)
    assert critical_exponent(AutomorphismSpec(3, 3, (0.5, 0))) == Fraction(9, 4)
    assert critical_exponent(AutomorphismSpec(4, 2, (0.5, 0, 0))) == Fraction(8, 7)


def test_shift_k3_d2_by_hand():
    # S(v) = v^28/2 - (c/4) v^10 + (c^2/8) v for a_3 = c
    c = 0.3 + 0.1j
    omega = build_omega(AutomorphismSpec(3, 2, (0.7, c)))
    S = omega.shift_series
    assert omega.variant == "DEquals2"
    assert set(S.support()) == {-28, -10, -1}
    assert S.coeff(-28) == pytest.approx(0.5)
    assert S.coeff(-10) == pytest.approx(-c / 4)
    assert S.coeff(-1) == pytest.approx(c * c / 8)


def test_shift_k3_d3_by_hand():
    # c_S = (27 - 1) * 3 = 78; e_3 = -1 + 9 + 6 = 14
    c = 0.4j
    omega = build_omega(AutomorphismSpec(3, 3, (1.0, c)))
    assert omega.variant == "GeneralD"
    assert omega.shift_series.coeff(-78) == pytest.approx(0.5)
    assert omega.shift_series.coeff(-14) == pytest.approx(-c / 6)


def test_g0_k3_d3_by_hand():
    # L = 8 * 3 = 24, P = -2 * 27 = -54: g0 = v^24 + v^-54 (s1 + s2 - (c/3) v^14)
    c = 0.4j
    spec = AutomorphismSpec(3, 3, (1.0, c))
    g = g0_series(spec)
    assert model_constants(spec).L == 24
    assert g.coeff(-24) == 1
    assert g.coeff(54, (1, 0)) == 1 and g.coeff(54, (0, 1)) == 1
    assert g.coeff(40) == pytest.approx(-c / 3)


def test_g0_leading_exponents():
    assert model_constants(AutomorphismSpec(4, 3, (1, 0, 0))).L == 26 * 9
    assert model_constants(AutomorphismSpec(4, 2, (1, 0, 0))).L == 7 * 8
    assert model_constants(AutomorphismSpec(4, 3, (1, 0, 0))).P == -2 * 3**5


def test_omega_apply(spec32):
    omega = build_omega(spec32)
    p = ModelPoint(1.1 + 0.2j, (0.3, -1))
    q = omega_apply(omega, p)
    S = shift_value(omega, p.v)
    assert q.v == pytest.approx(p.v**2)
    assert q.s == pytest.approx(tuple(lam * (s + S) for lam, s in zip(omega.lambdas, p.s)))
    assert abs(q.v) > 1
    with pytest.raises(ValueError):
        ModelPoint(0.5, (0, 0))


def test_compose_matches_pointwise(spec32):
    omega = build_omega(spec32)
    g = g0_series(spec32)                      # exact, so the composition is exact too
    h = compose_omega(omega, g)
    p = ModelPoint(1.3 - 0.4j, (0.2j, 0.5))
    assert h.evaluate(p.v, p.s) == pytest.approx(g.evaluate(*(lambda q: (q.v, q.s))(omega_apply(omega, p))))


# -- the iteration -------------------------------------------------------------------

@pytest.mark.parametrize("k,d,alpha", [(3, 2, (0.5, 0.3 + 0.1j)), (3, 3, (0.5, 0.3 + 0.1j)),
                                       (4, 2, (0.5, 0.3 + 0.1j, 0.2)), (3, 2, (1.9j, -1))])
def test_contraction_bound(k, d, alpha):
    spec = AutomorphismSpec(k, d, alpha)
    # raise the working order until all five increments are resolved below it
    order = certified_order(spec, 4)
    rep = contraction_report(spec, 5, order)
    while math.inf in rep.valuations:
        order *= 2
        rep = contraction_report(spec, 5, order)
    assert rep.epsilon > 0
    assert rep.strictly_increasing
    assert rep.bound_holds


def test_plain_valuation_is_not_monotone(spec32):
    rep = contraction_report(spec32, 3, 200)
    assert rep.plain_valuations[1] < rep.plain_valuations[0]


def test_order_below_critical_rejected(spec32):
    omega = build_omega(spec32)
    with pytest.raises(ValueError):
        iterate_g(spec32, None, omega, 1, 16)      # crit * L = 4/3 * 12 = 16


def test_certificate_refuses_non_contracting_case():
    with pytest.raises(ValueError):
        certified_order(AutomorphismSpec(2, 2, (0.5,)), 3)


@pytest.mark.parametrize("fixture", ["spec32", "spec33", "spec42"])
def test_series_conjugacy(fixture, request):
    spec = request.getfixturevalue(fixture)
    omega = build_omega(spec)
    order = stable_order(spec, 3, 4 * certified_order(spec, 3))
    G = assemble_G(iterate_g(spec, None, omega, 3, order), omega)
    assert len(G) == spec.k
    report = verify_conjugacy_series(G, omega, spec, order)
    assert all(r.cancels for r in report)
    assert len(support_exponents(G, order)) >= 12


def test_series_conjugacy_detects_unconverged_g(spec32):
    omega = build_omega(spec32)
    G = assemble_G(g0_series(spec32, 96), omega)
    report = verify_conjugacy_series(G, omega, spec32, 96)
    assert not report[0].cancels
    assert all(r.cancels for r in report[1:])     # the shift components hold by construction


def test_numeric_conjugacy(spec32):
    omega = build_omega(spec32)
    g = iterate_g(spec32, None, omega, 3, 96)
    G = assemble_G(g, omega)
    pts = sample_model_points(omega, 20, vmin=4, rng=random.Random(2))
    res = verify_conjugacy_numeric(G, omega, spec32, pts, vmin=4, K=1.0)
    assert res.max_relative <= 1e-4 and res.n_samples == 20
    with pytest.raises(ValueError):
        verify_conjugacy_numeric(G, omega, spec32, pts, vmin=100)


# -- deck action -------------------------------------------------------------------------

def _mp_point(rng, nvars):
    with mpmath.workdps(50):
        v = mpmath.mpc(cmath.rect(rng.uniform(1.01, 1.2), rng.uniform(-3, 3)))
        return ModelPoint(v, tuple(mpmath.mpc(rng.gauss(0, 1), rng.gauss(0, 1))
                                   for _ in range(nvars)))


def test_deck_identity_and_freeness(spec32):
    omega = build_omega(spec32)
    p = ModelPoint(1.1 + 0.1j, (0.5, -0.5j))
    assert deck_action(DyadicLike(0, 0, 2), p, omega) == p
    assert deck_action(DyadicLike(4, 2, 2), p, omega) == p          # 4/4 = 0 mod 1
    q = deck_action(DyadicLike(1, 2, 2), p, omega)
    assert abs(q.v - p.v) > 1e-6


def test_deck_preserves_fibres(spec32):
    omega = build_omega(spec32)
    rng = random.Random(4)
    with mpmath.workdps(50):
        for _ in range(10):
            p = _mp_point(rng, 2)
            theta = DyadicLike(rng.randrange(1, 8, 2), 3, 2)
            a = omega_iterate(omega, deck_action(theta, p, omega), 3)
            b = omega_iterate(omega, p, 3)
            assert abs(a.v - b.v) < 1e-30
            assert all(abs(x - y) < 1e-25 * max(1, abs(y)) for x, y in zip(a.s, b.s))


def test_deck_delta_telescopes(spec33):
    omega = build_omega(spec33)
    v = mpmath.mpc(1.05, 0.02)
    with mpmath.workdps(50):
        v1 = v * mpmath.expjpi(mpmath.mpf(2) / 9)
        v2 = v1 * mpmath.expjpi(mpmath.mpf(4) / 3)
        total = deck_delta(omega, v, v2, 0, n=2)
        parts = deck_delta(omega, v, v1, 0, n=2) + deck_delta(omega, v1, v2, 0, n=1)
        assert abs(total - parts) < 1e-30 * max(1, abs(total))
        assert deck_delta(omega, v, v, 0) == 0


def test_deck_delta_dominant_term():
    # for large n the m = n-1 term dominates: Lambda^(1-n) (S(w) - S(w')) with w = v^(d^(n-1))
    spec = AutomorphismSpec(2, 3, (1.0,))
    omega = build_omega(spec)
    with mpmath.workdps(60):
        v = mpmath.mpc(1.3)
        n = 4
        v2 = v * mpmath.expjpi(mpmath.mpf(2) / 3**n)
        full = deck_delta(omega, v, v2, 0, n=n)
        w, w2 = v ** (3 ** (n - 1)), v2 ** (3 ** (n - 1))
        lead = mpmath.mpc(omega.lambdas[0]) ** (1 - n) * (shift_value(omega, w) - shift_value(omega, w2))
        assert abs(full - lead) / abs(lead) < 1e-6


def test_deck_group_law(spec32):
    omega = build_omega(spec32)
    rng = random.Random(9)
    with mpmath.workdps(50):
        for _ in range(10):
            p = _mp_point(rng, 2)
            t1, t2 = DyadicLike(rng.randrange(16), 4, 2), DyadicLike(rng.randrange(8), 3, 2)
            a = deck_action(t1, deck_action(t2, p, omega), omega)
            b = deck_action(t1 + t2, p, omega)
            assert abs(a.v - b.v) < 1e-9
            assert all(abs(x - y) <= 1e-9 * max(1, abs(y)) for x, y in zip(a.s, b.s))


# -- class (k, d) sequences ------------------------------------------------------------

@pytest.fixture
def spec_twin():
    return AutomorphismSpec(3, 2, (0.5, 0))


def test_j_distance_examples(spec_twin):
    w = orbit_window(spec_twin, (3, 0.5, 0.2), 6)
    assert j_distance(w, w) == 0
    eps = 1e-8
    vals = list(w.values)
    vals[2] += eps
    bumped = SeqWindow(tuple(vals), spec_twin)
    assert j_distance(bumped, w) == pytest.approx(eps * abs(w[2]) ** (4 / 3), rel=1e-6)


def test_window_validation(spec_twin):
    with pytest.raises(ValueError):
        SeqWindow((1, 2, 3), spec_twin)
    w = orbit_window(spec_twin, (3, 0.5, 0.2), 6)
    with pytest.raises(WindowTooShort):
        refine_once(spec_twin, w)


def test_true_orbit_is_fixed(spec32):
    with mpmath.workdps(400):
        w = orbit_window(spec32, (2.5, 0.5, 0.2), 10, dps=1)
        f = refine_to_class(spec32, w, 1)
        assert f.n0 == 0 and f.n1 == 6
        assert max(abs(f[n] - w[n]) / abs(w[n]) for n in range(7)) < 1e-150


def test_asymptotic_rejects_small_U(spec_twin):
    with pytest.raises(ValueError):
        asymptotic_z1n(spec_twin, 0.9, [0, 0], 10, 1)


def test_asymptotic_leading_term(spec_twin):
    # without corrections the development starts with U^(d^n) itself
    with mpmath.workdps(50):
        U = mpmath.mpc(3)
        val = asymptotic_z1n(spec_twin, U, [0, 0], 1, 4)
        assert abs(val / U**16 - 1) < 1e-6


def test_twin_fit_reproduces_fit_steps(spec_twin):
    seed = (3, 0.5, 0.2)
    with mpmath.workdps(1500):
        s = tuple(mpmath.mpc(c) for c in seed)
        U = phi(spec_twin, s, tol=mpmath.mpf(10) ** -1490).value
        w = orbit_window(spec_twin, s, 8, dps=1)
        q = fit_q(spec_twin, U, w, [1, 2], 30)
        for n in (1, 2):
            assert abs(w[n] - asymptotic_z1n(spec_twin, U, q, 30, n)) < 1e-100
        assert q[0] == pytest.approx(mpmath.conj(q[1]))      # real seed: conjugate pair
