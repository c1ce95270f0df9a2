"""Phase factors Omega_{alpha,beta}(lambda, mu) at t = 0.

Three routes: the truncated series in period pairings, the operator
polylogarithm closed form, and the derivative identity in lambda.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import DegenerateRatio, NotInteger, OutsideDomain, PathInvalid, StepTooLarge
from .lattice import intersection_form, pairing, seifert_form
from .periods import SingularityModel, discrepancy_slots, dual_vector, energy, period_vector_t0
from .polylog import ComplexPath, li_sigma

INT_TOL = 1e-6
HARD_TOL = 1e-3


@dataclass(frozen=True)
class PhaseValue:
    omega: complex
    branch_data: dict = field(default_factory=dict)
    k_integer: int | None = None

    @property
    def B(self) -> complex:
        return complex(np.exp(self.omega))


def _log_rgamma(z: float) -> complex:
    """log(1/Gamma(z)) for real z, complex when 1/Gamma(z) < 0; -inf at poles."""
    if z > 0:
        return complex(-gammaln(z))
    s = np.sin(np.pi * z)
    if abs(s) < 1e-300:
        return complex(-np.inf)
    # 1/Gamma(z) = sin(pi z) Gamma(1 - z) / pi
    return complex(np.log(complex(s / np.pi)) + gammaln(1 - z))


def _log_period_scale(theta_j: float, k: int, log_lam: complex) -> complex:
    a = theta_j - k - 0.5
    return a * log_lam + _log_rgamma(a + 1)


def _logs(lam, mu, log_lam, log_mu):
    if lam == 0 or mu == 0:
        raise OutsideDomain("lambda and mu must be nonzero")
    log_lam = complex(np.log(lam)) if log_lam is None else complex(log_lam)
    log_mu = complex(np.log(mu)) if log_mu is None else complex(log_mu)
    return log_lam, log_mu


def series_terms(alpha, beta, lam, mu, model: SingularityModel, n_max: int, log_lam=None, log_mu=None):
    """Terms (-1)^{n+1} (I^{(n)}_alpha(0, lam), I^{(-n-1)}_beta(0, mu)) for n = 0..n_max (rho = 0)."""
    log_lam, log_mu = _logs(lam, mu, log_lam, log_mu)
    ua = dual_vector(model, alpha)
    ub = dual_vector(model, beta)
    theta, eta = model.theta, model.eta
    nz = [(j, k) for j in range(model.mu) for k in range(model.mu) if abs(eta[j, k]) > 0]
    out = np.zeros(n_max + 1, dtype=complex)
    for n in range(n_max + 1):
        acc = 0j
        for j, k in nz:
            c = eta[j, k] * ua[j] * ub[k]
            if c == 0:
                continue
            e = _log_period_scale(theta[j], n, log_lam) + _log_period_scale(theta[k], -n - 1, log_mu)
            if e.real == -np.inf:
                continue
            acc += c * np.exp(e)
        out[n] = (-1) ** (n + 1) * acc
    return out


def omega_oracle(alpha, beta, lam, mu, model: SingularityModel, n_max: int = 60, log_lam=None, log_mu=None):
    """Partial sum of the period-pairing series and a geometric tail bound."""
    if abs(lam) <= abs(mu):
        raise OutsideDomain("series needs |lambda| > |mu|")
    if np.any(model.rho):
        terms = _series_terms_general(alpha, beta, lam, mu, model, n_max, log_lam, log_mu)
    else:
        terms = series_terms(alpha, beta, lam, mu, model, n_max, log_lam, log_mu)
    r = abs(mu / lam)
    tail = abs(terms[-1]) * r / (1 - r) * (n_max + 2) ** 2 if n_max >= 0 else np.inf
    return complex(np.sum(terms)), float(tail)


def _series_terms_general(alpha, beta, lam, mu, model, n_max, log_lam, log_mu):
    log_lam, log_mu = _logs(lam, mu, log_lam, log_mu)
    return np.array([(-1) ** (n + 1) * model.pair(period_vector_t0(alpha, n, lam, log_lam, model),
                                                  period_vector_t0(beta, -n - 1, mu, log_mu, model))
                     for n in range(n_max + 1)])


def log_path(log_x: complex, start: complex = 0.5) -> ComplexPath:
    """Path in the unit disk from ``start`` to x = exp(log_x) along which log x varies linearly."""
    l0 = np.log(start)
    if abs(log_x - l0) < 1e-9:
        return ComplexPath((complex(np.exp(log_x)),), "ratio")
    s = np.linspace(0, 1, 2 + int(np.ceil(abs(log_x - l0) * 8)))
    return ComplexPath(tuple(np.exp(l0 + s * (log_x - l0))), "ratio")


def P_correction(alpha, beta, lam, mu, model: SingularityModel, log_lam=None, log_mu=None, window=(-12, 12)):
    """Finite discrepancy between the splitting by sign of k and by energy sign.

    sum over slots with k >= 0, energy <= 0 minus slots with k < 0, energy > 0 of
    (-1)^{k+1} (I^{(k)}_alpha restricted to the slot, I^{(-k-1)}_beta)."""
    slots = discrepancy_slots(model.theta, window)
    if not slots:
        return 0j
    log_lam, log_mu = _logs(lam, mu, log_lam, log_mu)
    tot = 0j
    for k, j in slots:
        v = period_vector_t0(alpha, k, lam, log_lam, model)
        mask = np.zeros_like(v)
        mask[j] = v[j]
        w = period_vector_t0(beta, -k - 1, mu, log_mu, model)
        sgn = 1 if k >= 0 else -1
        tot += sgn * (-1) ** (k + 1) * model.pair(mask, w)
    return tot


def li_matrix(x, model: SingularityModel, path: ComplexPath | None = None, log_x=None,
              clearance: float = 1e-3) -> np.ndarray:
    """Li_sigma(x) on homology coordinates, along ``path`` or on the branch given by log_x."""
    sigma = model.sigma()
    if path is None:
        if log_x is None:
            log_x = complex(np.log(x))
        if abs(x) >= 1:
            raise OutsideDomain("|x| >= 1 needs an explicit continuation path")
        path = log_path(log_x)
    return li_sigma(sigma, path.end, path, clearance=clearance)


def omega_closed_form(alpha, beta, lam, mu, model: SingularityModel, log_lam=None, log_mu=None,
                      path: ComplexPath | None = None, clearance: float = 1e-3) -> PhaseValue:
    """Omega = -(Li_sigma(mu/lambda) alpha | beta) + P.

    Without a path the ratio branch is log mu - log lambda; a path in the x = mu/lambda
    plane starting inside the unit disk continues the value."""
    log_lam, log_mu = _logs(lam, mu, log_lam, log_mu)
    x = mu / lam
    if abs(x) < 1e-300 or abs(x - 1) < 1e-12:
        raise DegenerateRatio("mu/lambda must avoid 0 and 1")
    G = intersection_form(model.lattice)
    alpha = np.asarray(alpha, dtype=complex)
    beta = np.asarray(beta, dtype=complex)
    if path is None:
        Li = li_matrix(x, model, log_x=log_mu - log_lam, clearance=clearance)
        branch = {"log_lambda": log_lam, "log_mu": log_mu}
    else:
        if abs(path.end - x) > 1e-9 * max(1, abs(x)):
            raise PathInvalid("ratio path must end at mu/lambda")
        Li = li_matrix(x, model, path=path, clearance=clearance)
        branch = {"log_lambda": log_lam, "log_mu": log_mu, "ratio_path": [complex(p) for p in path.points]}
    omega = -((Li @ alpha) @ G @ beta) + P_correction(alpha, beta, lam, mu, model, log_lam, log_mu)
    return PhaseValue(complex(omega), branch)


def swap_path(lam, mu, side: int = 1, npts: int = 41) -> ComplexPath:
    """Image in the x = mu/lambda plane of a path exchanging lambda and mu.

    Both points move along the segment between them, pushed apart by a bump of
    size |lambda - mu|/2 so that lambda = mu is never reached."""
    s = np.linspace(0, 1, npts)
    c = side * 0.5j * (lam - mu)
    L = (1 - s) * lam + s * mu + c * np.sin(np.pi * s)
    M = (1 - s) * mu + s * lam - c * np.sin(np.pi * s)
    if np.min(np.abs(L)) < 1e-9 or np.min(np.abs(M)) < 1e-9:
        raise PathInvalid("swap path passes through lambda = 0 or mu = 0")
    if np.min(np.abs(L - M)) < 1e-9:
        raise PathInvalid("swap path meets the diagonal")
    return ComplexPath(tuple(M / L), "swap")


def locality_check(alpha, beta, lam, mu, model: SingularityModel, path: ComplexPath | None = None,
                   side: int = 1, tol: float = INT_TOL) -> PhaseValue:
    """(Omega_{a,b}(lam, mu) - Omega_{b,a}(mu, lam) continued along the path) / (-2 pi i) = SF(a, b) + k (a|b)."""
    if abs(lam) <= abs(mu):
        raise OutsideDomain("locality check starts at |lambda| > |mu|")
    alpha = np.asarray(alpha)
    beta = np.asarray(beta)
    path = swap_path(lam, mu, side) if path is None else path
    if abs(path.start - mu / lam) > 1e-9 or abs(path.end - lam / mu) > 1e-9:
        raise PathInvalid("path must run from mu/lambda to lambda/mu")
    # the ratio path starts on the principal branch of log(mu/lambda); use the same branch for o1
    log_lam = complex(np.log(lam))
    log_mu = log_lam + complex(np.log(mu / lam))
    o1 = omega_closed_form(alpha, beta, lam, mu, model, log_lam=log_lam, log_mu=log_mu).omega
    o2 = omega_closed_form(beta, alpha, mu, lam, model, log_lam=log_mu, log_mu=log_lam, path=path).omega
    r = (o1 - o2) / (-2j * np.pi)
    sf = seifert_form(model.lattice, alpha, beta)
    ip = pairing(model.lattice, alpha, beta)
    if ip == 0:
        k, resid = 0, abs(r - sf)
    else:
        kf = (r - sf) / ip
        k = int(np.rint(kf.real))
        resid = abs(kf - k)
    if resid > tol:
        raise NotInteger(f"locality violated: residual {resid:.2e}")
    b1, b2 = np.exp(o1), np.exp(o2)
    if abs(b1 - b2) > 1e-8 * max(abs(b1), abs(b2), 1e-300):
        raise NotInteger("phase factors differ after the exchange")
    return PhaseValue(complex(o1), {"swapped": complex(o2), "ratio": complex(r), "residual": float(resid),
                                    "path": [complex(p) for p in path.points]}, k)


def dlambda_rhs(alpha, beta, lam, mu, model: SingularityModel, log_lam=None, log_mu=None) -> complex:
    """(lambda - mu)^{-1} (I^{(0)}_alpha(lam), (theta + 1/2) I^{(-1)}_beta(mu))."""
    log_lam, log_mu = _logs(lam, mu, log_lam, log_mu)
    v = period_vector_t0(alpha, 0, lam, log_lam, model)
    w = period_vector_t0(beta, -1, mu, log_mu, model)
    return complex(model.pair(v, (model.theta + 0.5) * w) / (lam - mu))


def dlambda_identity_check(alpha, beta, lam, mu, model: SingularityModel, h: float = 1e-3,
                           n_max: int = 200) -> float:
    """Residual between a Richardson-extrapolated central difference of the oracle and the identity."""
    if lam == mu:
        raise OutsideDomain("identity needs lambda != mu")
    if h >= 0.25 * (abs(lam) - abs(mu)):
        raise StepTooLarge("difference step leaves the convergence domain")

    def f(l):
        return omega_oracle(alpha, beta, l, mu, model, n_max)[0]

    def cd(h):
        return (f(lam + h) - f(lam - h)) / (2 * h)

    d = (4 * cd(h / 2) - cd(h)) / 3
    return float(abs(d - dlambda_rhs(alpha, beta, lam, mu, model)))


def regular_part_jump(alpha, beta, mu, model: SingularityModel, eps=(1e-4, 1e-5)) -> float:
    """|g(eps_1) - g(eps_2)| for g = Omega - (a|b) log(lambda - mu) at lambda = mu (1 + eps)."""
    ip = pairing(model.lattice, alpha, beta)
    g = [omega_closed_form(alpha, beta, mu * (1 + e), mu, model, clearance=1e-9).omega - ip * np.log(mu * e) for e in eps]
    return float(abs(g[0] - g[1]))


def pole_order(alpha, beta, mu, model: SingularityModel, eps=(1e-4, 1e-6)) -> int:
    """Order of the pole of e^Omega at lambda = mu, read off from the growth of |e^Omega|."""
    vals = [omega_closed_form(alpha, beta, mu * (1 + e), mu, model, clearance=1e-9).omega.real for e in eps]
    slope = (vals[0] - vals[1]) / (np.log(eps[0]) - np.log(eps[1]))
    return -int(np.rint(slope))


def P_antisymmetry(alpha, beta, lam, mu, model: SingularityModel) -> float:
    """Residual of P_{a,b}(lam, mu) - P_{b,a}(mu, lam) = SF(((e^{-2 pi i N} - 1)/N) x^N a_1, b), x = mu/lam.

    a_1 is the projection of alpha on the sigma-invariant part; N acts there nilpotently."""
    from .opcalc import normalized_log, operator_power
    lhs = P_correction(alpha, beta, lam, mu, model) - P_correction(beta, alpha, mu, lam, model)
    N = normalized_log(model.sigma())
    n = model.mu
    P1 = np.zeros((n, n), dtype=complex)
    for nu, P in zip(N.eigvals, N.projectors):
        if abs(nu) < 1e-12:
            P1 = P1 + P
    a1 = P1 @ np.asarray(alpha, dtype=complex)
    if not np.any(np.abs(a1) > 1e-14):
        return float(abs(lhs))
    Nn = N.nil
    # (e^{-2 pi i N} - 1)/N as a power series in the nilpotent part
    f = np.zeros((n, n), dtype=complex)
    term = np.eye(n, dtype=complex)
    c = -2j * np.pi
    fact = 1.0
    for k in range(1, n + 2):
        fact *= k
        f += c ** k / fact * term
        term = term @ Nn
    xN = operator_power(mu / lam, complex(np.log(mu / lam)), N).mat
    L = model.lattice.seifert
    rhs = (f @ xN @ a1) @ L @ np.asarray(beta, dtype=complex)
    return float(abs(lhs - rhs))
