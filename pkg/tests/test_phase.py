import numpy as np
import pytest

from phasekit.errors import DegenerateRatio, NotInteger, OutsideDomain, StepTooLarge
from phasekit.phase import (
    P_antisymmetry,
    dlambda_identity_check,
    locality_check,
    omega_closed_form,
    omega_oracle,
    pole_order,
    regular_part_jump,
    swap_path,
)

LAM, MU = 1.3 + 0.4j, 0.5 - 0.3j


def vectors(model):
    a = np.arange(1, model.mu + 1, dtype=float)
    b = np.ones(model.mu)
    b[0] = -1
    return a, b


def test_zero_class(model):
    a, _ = vectors(model)
    z = np.zeros(model.mu)
    assert omega_closed_form(z, a, LAM, MU, model).omega == 0
    assert omega_oracle(a, z, LAM, MU, model)[0] == 0


@pytest.mark.parametrize("lam,mu", [(LAM, MU), (2.0, -1.1 + 0.2j), (-0.8j, 0.1 + 0.05j)])
def test_closed_form_matches_series(model, lam, mu):
    a, b = vectors(model)
    o, tail = omega_oracle(a, b, lam, mu, model, n_max=120)
    assert tail < 1e-10
    assert abs(omega_closed_form(a, b, lam, mu, model).omega - o) < 1e-10


def test_tail_bound_decreases(model):
    a, b = vectors(model)
    tails = [omega_oracle(a, b, LAM, MU, model, n_max=n)[1] for n in (10, 20, 40)]
    assert tails[0] > tails[1] > tails[2]
    exact = omega_closed_form(a, b, LAM, MU, model).omega
    for n, tb in zip((10, 20, 40), tails):
        assert abs(omega_oracle(a, b, LAM, MU, model, n_max=n)[0] - exact) <= tb + 1e-13


def test_domain_errors(model):
    a, b = vectors(model)
    with pytest.raises(OutsideDomain):
        omega_oracle(a, b, MU, LAM, model)
    with pytest.raises(DegenerateRatio):
        omega_closed_form(a, b, LAM, LAM, model)
    with pytest.raises(OutsideDomain):
        omega_closed_form(a, b, 0, MU, model)


def test_both_logs_shifted(model):
    # continuing lambda and mu once around 0 together acts by sigma on both classes
    a, b = vectors(model)
    L, M = np.log(LAM), np.log(MU)
    o = omega_oracle(a, b, LAM, MU, model)[0]
    s = omega_oracle(a, b, LAM, MU, model, log_lam=L + 2j * np.pi, log_mu=M + 2j * np.pi)[0]
    assert abs(o - s) < 1e-12


def test_lambda_log_shift_is_sigma(model):
    a, b = vectors(model)
    L = np.log(LAM) + 2j * np.pi
    o = omega_oracle(a, b, LAM, MU, model, log_lam=L)[0]
    assert abs(o - omega_oracle(model.sigma() @ a, b, LAM, MU, model)[0]) < 1e-12
    assert abs(o - omega_closed_form(a, b, LAM, MU, model, log_lam=L).omega) < 1e-12


def test_locality_a1_odd(model):
    e = np.eye(model.mu)[0]
    for side in (1, -1):
        r = locality_check(e, e, LAM, MU, model, side=side).branch_data["ratio"]
        n = int(np.rint(r.real))
        assert abs(r - n) < 1e-9 and n % 2 == 1


def test_locality_integer_and_sides(model):
    a, b = vectors(model)
    ks = {locality_check(a, b, LAM, MU, model, side=s).k_integer for s in (1, -1)}
    assert ks == {0, -1}


def test_locality_orthogonal():
    from phasekit.models import model_a_mu
    m = model_a_mu(3)
    e1, e3 = np.eye(3)[0], np.eye(3)[2]
    v = locality_check(e1, e3, LAM, MU, m)
    assert v.k_integer == 0
    assert abs(v.branch_data["ratio"]) < 1e-9


def test_locality_phase_factor_agrees(model):
    a, b = vectors(model)
    v = locality_check(a, b, LAM, MU, model)
    assert abs(v.B - np.exp(v.branch_data["swapped"])) < 1e-8 * abs(v.B)


def test_locality_rejects_wrong_orientation(model):
    a, b = vectors(model)
    path = swap_path(LAM, MU).mapped(np.conj)
    with pytest.raises(Exception):
        locality_check(a, b, LAM, MU, model, path=path)


@pytest.mark.parametrize("lam,mu", [(LAM, MU), (2.0, -1.1 + 0.2j)])
def test_dlambda_identity(model, lam, mu):
    a, b = vectors(model)
    assert dlambda_identity_check(a, b, lam, mu, model) < 1e-8


def test_dlambda_step_too_large(model):
    a, b = vectors(model)
    with pytest.raises(StepTooLarge):
        dlambda_identity_check(a, b, 1.0, 0.95, model, h=0.1)


def test_pole_order(model):
    G = model.intersection()
    a, b = vectors(model)
    for x, y in [(a, b), (a, a), (np.eye(model.mu)[0], np.eye(model.mu)[-1])]:
        assert pole_order(x, y, MU, model) == -int(x @ G @ y)


def test_regular_part_converges(model):
    a, b = vectors(model)
    j1 = regular_part_jump(a, b, MU, model, eps=(1e-4, 1e-5))
    j2 = regular_part_jump(a, b, MU, model, eps=(1e-5, 1e-6))
    assert j1 < 1e-3
    assert j2 < 0.2 * j1


def test_P_antisymmetry(model):
    a, b = vectors(model)
    assert P_antisymmetry(a, b, LAM, MU, model) < 1e-12
