import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from phasekit.fock import TameMonomial, tame_predicate, weyl_product
from phasekit.lattice import a_mu, classical_monodromy, intersection_form, reflection
from phasekit.models import model_a_mu
from phasekit.opcalc import normalized_log, operator_power
from phasekit.phase import omega_closed_form
from phasekit.polylog import ComplexPath, bernoulli_poly, jonquiere_invert, li_sigma, li_sigma_series

ranks = st.sampled_from([1, 2, 3])
small_int = st.integers(-3, 3)
unit = st.floats(0.15, 0.85)
angle = st.floats(0.1, np.pi - 0.1)


def vec(n):
    return st.lists(small_int, min_size=n, max_size=n).map(np.array)


tame = st.builds(TameMonomial, st.integers(0, 3), st.lists(st.integers(0, 4), max_size=3).map(tuple),
                 st.lists(st.integers(0, 4), max_size=3).map(tuple)).filter(tame_predicate)


@given(tame, tame)
def test_tame_closed_under_product(a, b):
    for m in weyl_product(a, b):
        assert tame_predicate(m)


@given(ranks, st.data())
def test_reflection_involution(mu, data):
    lat = a_mu(mu)
    G = intersection_form(lat)
    k = data.draw(st.integers(0, mu - 1))
    s = reflection(lat, np.eye(mu, dtype=int)[k])
    assert np.array_equal(s @ s, np.eye(mu, dtype=int))
    assert np.array_equal(s.T @ G @ s, G)


@given(ranks)
def test_sigma_preserves_forms(mu):
    lat = a_mu(mu)
    sig = classical_monodromy(lat).mat.real
    L = lat.seifert
    assert np.allclose(sig.T @ L @ sig, L)
    assert np.allclose(sig.T @ (L + L.T) @ sig, L + L.T)


@given(ranks)
def test_normalized_log_roundtrip(mu):
    sig = classical_monodromy(a_mu(mu)).mat
    N = normalized_log(sig)
    assert np.abs(operator_power(1.0, -2j * np.pi, N).mat - sig).max() < 1e-10


@settings(max_examples=25, deadline=None)
@given(ranks, st.data(), unit, angle)
def test_omega_bilinear(mu, data, r, th):
    m = model_a_mu(mu)
    a, b, c = data.draw(vec(mu)), data.draw(vec(mu)), data.draw(vec(mu))
    lam = 1.5 * np.exp(1j * th)
    x = r * np.exp(1j * data.draw(st.floats(-3.0, 3.0)))
    mu_ = lam * x
    lhs = omega_closed_form(a + b, c, lam, mu_, m).omega
    rhs = omega_closed_form(a, c, lam, mu_, m).omega + omega_closed_form(b, c, lam, mu_, m).omega
    assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(lhs))


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), unit, angle, st.booleans())
def test_jonquiere(p, r, th, upper):
    x = r * np.exp(1j * (th if upper else -th))
    arc = [np.exp(1j * a) / r for a in np.linspace(np.angle(x), -np.angle(x), 30)]
    path = ComplexPath((x, *arc[:-1], 1 / x))
    assert jonquiere_invert(p, x, path) < 1e-9


@settings(max_examples=25, deadline=None)
@given(ranks, unit, st.floats(-3.0, 3.0))
def test_li_sigma_reduction_matches_series(mu, r, phi):
    sig = classical_monodromy(a_mu(mu)).mat
    x = r * np.exp(1j * phi)
    assert np.abs(li_sigma(sig, x) - li_sigma_series(sig, x)).max() < 1e-10


@given(st.integers(1, 12), st.floats(-2, 2), st.floats(-2, 2))
def test_bernoulli_shift(p, a, b):
    x = complex(a, b)
    lhs = bernoulli_poly(p, x + 1) - bernoulli_poly(p, x)
    assert abs(lhs - p * x ** (p - 1)) < 1e-8 * max(1.0, abs(x) ** p)
