import numpy as np
import pytest

from phasekit.errors import DomainError, RegularizationFailure, TruncationOverflow
from phasekit.fock import (
    FockSpace,
    TameMonomial,
    apply_heisenberg,
    apply_vertex_operator,
    compose_and_extract_phase,
    generator,
    heisenberg_contraction,
    normal_ordered_vertex,
    ope_m_stability,
    ope_pole_order,
    ope_product,
    tame_predicate,
    weyl_product,
)
from phasekit.models import model_a_mu
from phasekit.phase import omega_oracle

LAM, MU = 1.3 + 0.4j, 0.6 - 0.2j


@pytest.fixture(params=[1, 2], ids=["A1", "A2"])
def small_model(request):
    return model_a_mu(request.param)


def test_tame_examples():
    assert tame_predicate(TameMonomial(1))
    assert not tame_predicate(TameMonomial(1, (4,)))
    assert tame_predicate(TameMonomial(0, (1,), (0, 0)))


def test_weyl_product_contractions():
    a = TameMonomial(1, (), (2,))
    b = TameMonomial(1, (2,), ())
    out = weyl_product(a, b)
    assert TameMonomial(1, (2,), (2,)) in out
    assert TameMonomial(2, (), ()) in out
    assert len(out) == 2


def test_vacuum(small_model):
    vac = FockSpace(small_model, 3).vacuum()
    assert vac.vacuum_coefficient() == 1
    z = np.zeros(small_model.mu)
    assert apply_vertex_operator(z, None, LAM, None, vac).distance(vac) == 0


def test_heisenberg_linear(small_model):
    vac = FockSpace(small_model, 3).vacuum()
    a, b = np.eye(small_model.mu)[0], np.ones(small_model.mu)
    lhs = apply_heisenberg(a + 2 * b, LAM, vac)
    rhs = apply_heisenberg(a, LAM, vac) + apply_heisenberg(b, LAM, vac).scale(2)
    assert lhs.distance(rhs) < 1e-12


def test_heisenberg_vertex_commutator(small_model):
    m = small_model
    vac = FockSpace(m, 3).vacuum()
    al, a = np.eye(m.mu)[0], np.eye(m.mu)[-1]
    w = apply_vertex_operator(al, None, MU, None, vac)
    lhs = apply_heisenberg(a, LAM, w) - apply_vertex_operator(al, None, MU, None, apply_heisenberg(a, LAM, vac))
    rhs = w.scale(heisenberg_contraction(a, al, LAM, MU, m, 3))
    assert lhs.distance(rhs) < 1e-12


@pytest.mark.parametrize("T", [4, 6, 8])
def test_composition_matches_series(small_model, T):
    m = small_model
    a = np.arange(1, m.mu + 1)
    b = -np.ones(m.mu)
    s = compose_and_extract_phase(a, b, LAM, MU, m, T)
    ref = np.exp(omega_oracle(a, b, LAM, MU, m, n_max=T)[0])
    assert abs(s - ref) < 1e-8 * max(1.0, abs(ref))


def test_composition_zero_class(small_model):
    z = np.zeros(small_model.mu)
    assert abs(compose_and_extract_phase(z, np.ones(small_model.mu), LAM, MU, small_model, 4) - 1) < 1e-14


def test_composition_multiplicative(small_model):
    m = small_model
    a1, a2, b = np.eye(m.mu)[0], np.ones(m.mu), np.eye(m.mu)[-1]
    s = compose_and_extract_phase(a1 + a2, b, LAM, MU, m, 4)
    s1 = compose_and_extract_phase(a1, b, LAM, MU, m, 4)
    s2 = compose_and_extract_phase(a2, b, LAM, MU, m, 4)
    assert abs(s - s1 * s2) < 1e-10 * abs(s)


def test_composition_needs_order():
    with pytest.raises(DomainError):
        compose_and_extract_phase([1.0], [1.0], MU, LAM, model_a_mu(1), 4)
    with pytest.raises(DomainError):
        compose_and_extract_phase([1.0], [1.0], LAM, MU, model_a_mu(1), 4, t=[0.1])


def test_normal_order_symmetric(small_model):
    vac = FockSpace(small_model, 3).vacuum()
    a, b = np.eye(small_model.mu)[0], np.ones(small_model.mu)
    x = normal_ordered_vertex([a, b], [LAM, MU], vac)
    y = normal_ordered_vertex([b, a], [MU, LAM], vac)
    assert x.distance(y) < 1e-13


def test_truncation_cap():
    V = FockSpace(model_a_mu(1), 1, weight_cap=2)
    with pytest.raises(TruncationOverflow):
        V.vacuum().mul_linear([0, 1]).mul_linear([0, 1])


def _pairs(mu):
    E = np.eye(mu)
    return [(generator("exp", E[0]), generator("exp", E[-1]), 0, 2),
            (generator("phi", E[0]), generator("exp", E[-1]), 0, 1),
            (generator("phi", E[0]), generator("phi", E[-1]), 1, 2)]


@pytest.mark.parametrize("idx", [0, 1, 2])
def test_ope_m_stability(small_model, idx):
    vac = FockSpace(small_model, 3).vacuum()
    a, b, k, M = _pairs(small_model.mu)[idx]
    assert ope_m_stability(a, b, k, M, LAM, small_model, vac) < 1e-9


def test_ope_regularization_failure(small_model):
    vac = FockSpace(small_model, 3).vacuum()
    a, b, _, _ = _pairs(small_model.mu)[2]
    with pytest.raises(RegularizationFailure):
        ope_product(a, b, 0, 0, LAM, small_model, vac)


def test_ope_pole_orders(small_model):
    m = small_model
    vac = FockSpace(m, 3).vacuum()
    E, G = np.eye(m.mu), m.intersection()
    assert ope_pole_order(generator("phi", E[0]), generator("phi", E[-1]), LAM, m, vac) == 2
    assert ope_pole_order(generator("phi", E[0]), generator("exp", E[-1]), LAM, m, vac) == 1
    for s in (1, -1):
        a, b = E[0], s * E[-1]
        got = ope_pole_order(generator("exp", a), generator("exp", b), LAM, m, vac)
        assert got == -int(a @ G @ b)


def test_generator_kind():
    with pytest.raises(DomainError):
        generator("psi", [1.0])
