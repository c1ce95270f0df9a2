import numpy as np
import pytest

from phasekit.continuation import OneVariableModel, root_oracle
from phasekit.errors import ZeroLambda
from phasekit.periods import (
    discrepancy_slots,
    f_series_t0,
    fundamental_solution,
    higher_residue_pairing,
    k1_residual,
    k4_residual,
    period_vector_t0,
    spectral_part,
)


def test_residue_gram_is_eta(model):
    assert np.abs(model.residue_gram - model.eta).max() < 1e-12


def test_k4_k1(model):
    assert k4_residual(model) < 1e-12
    assert k1_residual(model) < 1e-12


def test_pairing_exponent(model):
    # only the z^{n+1} coefficient survives for the built-ins
    K = higher_residue_pairing(0, model.mu - 1, model)
    assert set(K.coeffs) == {1}


@pytest.mark.parametrize("k", [-1, 0, 1, 2])
def test_periods_match_roots(model, k):
    mu = model.mu
    lam = 0.7 + 0.3j
    alpha = np.arange(1, mu + 1, dtype=float)
    want = root_oracle(OneVariableModel(mu), alpha, k, np.zeros(mu), lam)
    got = period_vector_t0(alpha, k, lam, None, model)
    assert np.abs(got - want).max() < 1e-12


def test_lambda_derivative_lowers_index(model):
    lam, h = 0.8 - 0.4j, 1e-3
    for m in (0, 1, -1):
        d = (fundamental_solution(m, lam + h, None, model) - fundamental_solution(m, lam - h, None, model)) / (2 * h)
        d2 = (fundamental_solution(m, lam + h / 2, None, model) - fundamental_solution(m, lam - h / 2, None, model)) / h
        d = (4 * d2 - d) / 3
        assert np.abs(d - fundamental_solution(m - 1, lam, None, model)).max() < 1e-8


def test_log_shift_is_monodromy(model):
    lam = 0.7 + 0.3j
    L = np.log(lam)
    sig = model.sigma()
    for e in np.eye(model.mu):
        a = period_vector_t0(e, 0, lam, L + 2j * np.pi, model)
        b = period_vector_t0(sig @ e, 0, lam, L, model)
        assert np.abs(a - b).max() < 1e-12


def test_zero_lambda(model):
    with pytest.raises(ZeroLambda):
        period_vector_t0(np.eye(model.mu)[0], 0, 0, None, model)


def test_f_series_split(model):
    alpha = np.ones(model.mu)
    f = f_series_t0(alpha, 0.6 + 0.2j, None, model)
    total = spectral_part(f, model.theta, ">0") + spectral_part(f, model.theta, "0") + spectral_part(f, model.theta, "<0")
    for k in f.coeffs:
        assert np.abs(total[k] - f[k]).max() < 1e-15
    pm = f.plus() + f.minus()
    for k in f.coeffs:
        assert np.abs(pm[k] - f[k]).max() < 1e-15


def test_no_discrepancy_for_builtins(model):
    assert discrepancy_slots(model.theta) == []
