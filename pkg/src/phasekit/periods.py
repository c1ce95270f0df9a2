"""Period vectors at t = 0 and the pairings built from them.

Periods are vectors in H written in the flat basis phi_1..phi_mu; the pairing
on H is (v, w) = v @ eta @ w. The A-basis is stored by its values on the
lattice basis, ``A_basis[k, i] = <A_i, e_k>``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import rgamma

from .errors import DomainError, ZeroLambda
from .lattice import MilnorLatticeData, classical_monodromy, intersection_form
from .opcalc import OperatorH, normalized_log, taylor_coefficients


@dataclass(frozen=True)
class SingularityModel:
    lattice: MilnorLatticeData
    frobenius: object  # continuation.FrobeniusData
    A_basis: np.ndarray
    p_exponents: tuple = ()
    residue_gram: np.ndarray | None = None

    def __post_init__(self):
        A = np.asarray(self.A_basis, dtype=complex)
        object.__setattr__(self, "A_basis", A)
        s = [float(v) for v in self.lattice.spectrum]
        if not self.p_exponents:
            # s_i = p_i + alpha_i with alpha_i in (-1, 0]
            object.__setattr__(self, "p_exponents", tuple(int(np.ceil(v - 1e-12)) for v in s))
        if self.residue_gram is None:
            object.__setattr__(self, "residue_gram", residue_gram_from_seifert(self))

    @property
    def mu(self) -> int:
        return self.lattice.rank

    @property
    def ell(self) -> int:
        return self.lattice.ell

    @property
    def spectrum(self) -> np.ndarray:
        return np.array([float(v) for v in self.lattice.spectrum])

    @property
    def alphas(self) -> np.ndarray:
        return self.spectrum - np.array(self.p_exponents)

    @property
    def eta(self) -> np.ndarray:
        return np.asarray(self.frobenius.eta, dtype=complex)

    @property
    def theta(self) -> np.ndarray:
        return np.asarray(self.frobenius.theta, dtype=float)

    @property
    def rho(self) -> np.ndarray:
        r = getattr(self.frobenius, "rho", None)
        return np.zeros((self.mu, self.mu)) if r is None else np.asarray(r, dtype=complex)

    def sigma(self) -> np.ndarray:
        return classical_monodromy(self.lattice).mat.real

    def N(self) -> OperatorH:
        return normalized_log(self.sigma())

    def pair(self, v, w) -> complex:
        return v @ self.eta @ w

    def intersection(self) -> np.ndarray:
        return intersection_form(self.lattice)


def cohomology_seifert(model: SingularityModel) -> np.ndarray:
    """Matrix of the unnormalized form <A, Var B> on covector components.

    Var is the inverse of alpha -> (-1)^{l+1} SF(alpha, .), so <A, Var B> = (-1)^{l+1} a L^{-T} b."""
    L = model.lattice.seifert.astype(float)
    return (-1) ** (model.ell + 1) * np.linalg.inv(L).T


def residue_gram_from_seifert(model: SingularityModel) -> np.ndarray:
    """(A_i, A_j) = (1/2 pi i) <A_i, e^{pi i N} e^{pi i p} A_j> for a semisimple N."""
    A = model.A_basis
    S = cohomology_seifert(model)
    M = np.exp(1j * np.pi * (model.alphas + np.array(model.p_exponents)))
    return (A.T @ S @ A) * M[None, :] / (2j * np.pi)


def dual_vector(model: SingularityModel, alpha) -> np.ndarray:
    """u_alpha = sum_i <A_i, alpha> phi^i, as coordinates in the basis phi_j."""
    a = model.A_basis.T @ np.asarray(alpha, dtype=complex)
    return np.linalg.solve(model.eta, a)


def _bare(theta_j: float, m: float, log_lam: complex) -> complex:
    a = theta_j + m - 0.5
    return np.exp(a * log_lam) * rgamma(a + 1)


def fundamental_solution(m: int, lam: complex, log_lam: complex | None, model) -> np.ndarray:
    """Phi_m(lambda) acting on H, theta diagonal on the flat basis.

    Phi_m = sum_k (1/k!) (d/dm)^k F(m - k) rho^k with F(m) = lambda^{theta+m-1/2}/Gamma(theta+m+1/2)."""
    if lam == 0:
        raise ZeroLambda("fundamental solution at lambda = 0")
    if log_lam is None:
        log_lam = complex(np.log(lam))
    theta = model.theta if hasattr(model, "theta") else np.asarray(model.frobenius.theta)
    rho = model.rho if hasattr(model, "rho") else np.zeros((len(theta),) * 2)
    n = len(theta)
    # order of nilpotency of rho
    K = 1
    r = np.array(rho, dtype=complex)
    while np.abs(r).max() > 1e-14 and K <= n:
        r = r @ rho
        K += 1
    out = np.zeros((n, n), dtype=complex)
    rk = np.eye(n, dtype=complex)
    for k in range(K):
        diag = np.empty(n, dtype=complex)
        for j in range(n):
            if k == 0:
                diag[j] = _bare(theta[j], m, log_lam)
            else:
                c = taylor_coefficients(lambda z, j=j: _bare(theta[j], z, log_lam), m - k, k + 1, radius=0.5)
                diag[j] = c[k]
        out += np.diag(diag) @ rk
        rk = rk @ rho
    return out


def period_vector_t0(alpha, k: int, lam: complex, log_lam: complex | None, model: SingularityModel) -> np.ndarray:
    """I^{(k)}_alpha(0, lambda) = Phi_{-k}(lambda) u_alpha."""
    if lam == 0:
        raise ZeroLambda("period vector at lambda = 0")
    if log_lam is None:
        log_lam = complex(np.log(lam))
    if not np.any(model.rho):
        # component j scales as lambda^{theta_j - k - 1/2}/Gamma(theta_j - k + 1/2)
        a = model.theta - k - 0.5
        return np.exp(a * log_lam) * rgamma(a + 1) * dual_vector(model, alpha)
    return fundamental_solution(-k, lam, log_lam, model) @ dual_vector(model, alpha)


def period_matrix_t0(k: int, lam, log_lam, model) -> np.ndarray:
    """Columns are I^{(k)}_{e_j}(0, lambda) for the lattice basis."""
    return np.column_stack([period_vector_t0(e, k, lam, log_lam, model) for e in np.eye(model.mu)])


@dataclass(frozen=True)
class TruncatedSeries:
    variable: str
    coeffs: dict
    window: tuple

    def __post_init__(self):
        lo, hi = self.window
        for k in self.coeffs:
            if not lo <= k <= hi:
                raise DomainError(f"exponent {k} outside window {self.window}")

    def __getitem__(self, k):
        return self.coeffs[k]

    def restrict(self, keep) -> "TruncatedSeries":
        """Keep components where keep(k, j) is true; coefficient vectors are masked slotwise."""
        out = {}
        for k, v in self.coeffs.items():
            v = np.asarray(v)
            mask = np.array([keep(k, j) for j in range(len(v))]) if v.ndim else np.array(keep(k, 0))
            out[k] = np.where(mask, v, 0)
        return TruncatedSeries(self.variable, out, self.window)

    def plus(self):
        return self.restrict(lambda k, j: k >= 0)

    def minus(self):
        return self.restrict(lambda k, j: k < 0)

    def __add__(self, other):
        lo = max(self.window[0], other.window[0])
        hi = min(self.window[1], other.window[1])
        ks = {k for k in (*self.coeffs, *other.coeffs) if lo <= k <= hi}
        z = 0
        out = {k: self.coeffs.get(k, z) + other.coeffs.get(k, z) for k in ks}
        return TruncatedSeries(self.variable, out, (lo, hi))


def energy(k: int, j: int, theta) -> float:
    """Eigenvalue of z d/dz + 1/2 - theta on (-z)^k phi_j."""
    return k + 0.5 - theta[j]


def f_series_t0(alpha, lam, log_lam, model, window=(-12, 12)) -> TruncatedSeries:
    lo, hi = window
    return TruncatedSeries("z", {k: period_vector_t0(alpha, k, lam, log_lam, model) for k in range(lo, hi + 1)}, window)


def spectral_part(f: TruncatedSeries, theta, which: str) -> TruncatedSeries:
    sel = {">0": lambda e: e > 1e-12, "0": lambda e: abs(e) <= 1e-12, "<0": lambda e: e < -1e-12}[which]
    return f.restrict(lambda k, j: sel(energy(k, j, theta)))


def discrepancy_slots(theta, window=(-12, 12)):
    """Slots (k, j) where the splitting by sign of k differs from the splitting by energy."""
    lo, hi = window
    return [(k, j) for k in range(lo, hi + 1) for j in range(len(theta))
            if (k >= 0) != (energy(k, j, theta) > 1e-12)]


def higher_residue_pairing(i: int, j: int, model: SingularityModel, z_window=(-12, 12)) -> TruncatedSeries:
    """K_W(omega_i, omega_j) as a Laurent polynomial in z (indices are 0-based).

    For eigen-sections the pairing is (1/2 pi i) <A_i, e^{pi i N} e^{pi i p} A_j> times
    z^{s_i + s_j - 2l + 1 + n + 1}; it vanishes unless the exponent is an integer."""
    A = model.A_basis
    S = cohomology_seifert(model)
    s = model.spectrum
    n = 2 * model.ell
    val = (A[:, i] @ S @ A[:, j]) * np.exp(1j * np.pi * s[j]) / (2j * np.pi)
    e = s[i] + s[j] - 2 * model.ell + 1 + n + 1
    coeffs = {}
    if abs(e - round(e)) < 1e-9:
        coeffs[int(round(e))] = complex(val)
    elif abs(val) > 1e-9:
        raise DomainError("nonzero pairing at non-integral z exponent")
    return TruncatedSeries("z", coeffs, z_window)


def seifert_pairing_A(model: SingularityModel) -> np.ndarray:
    """Matrix <A_i, A_j> = <A_i, Var A_j> in the A-basis."""
    A = model.A_basis
    return A.T @ cohomology_seifert(model) @ A


def M_operator(model: SingularityModel) -> np.ndarray:
    """e^{pi i N} e^{pi i p} in the A-basis (semisimple case)."""
    return np.diag(np.exp(1j * np.pi * (model.alphas + np.array(model.p_exponents))))


def k4_residual(model: SingularityModel) -> float:
    """max |z^{n+1} coefficient of K(omega_i, omega_j) - residue_gram[i, j]|."""
    e = 2 * model.ell + 1
    r = 0.0
    for i in range(model.mu):
        for j in range(model.mu):
            K = higher_residue_pairing(i, j, model)
            r = max(r, abs(K.coeffs.get(e, 0) - model.residue_gram[i, j]))
    return float(r)


def k1_residual(model: SingularityModel) -> float:
    """K(omega_i, omega_j)(z) = (-1)^{n+1} K(omega_j, omega_i)(-z), coefficient-wise."""
    n = 2 * model.ell
    r = 0.0
    for i in range(model.mu):
        for j in range(model.mu):
            a = higher_residue_pairing(i, j, model).coeffs
            b = higher_residue_pairing(j, i, model).coeffs
            for e in set(a) | set(b):
                r = max(r, abs(a.get(e, 0) - (-1) ** (n + 1) * (-1) ** e * b.get(e, 0)))
    return float(r)
