"""Operator calculus on the finite-dimensional spaces H and h.

Covers the semisimple/nilpotent split, the normalized logarithm
N = -(1/2 pi i) log sigma with spectrum in (-1, 0], operator powers x^N,
jets of 1/Gamma(s+1), the anti-homomorphism T -> T^# and the two transposes.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm

import numpy as np
from scipy.special import rgamma

from .errors import NotRootOfUnity, SingularPairing, ZeroBase

CLUSTER_TOL = 1e-9
MAX_DENOMINATOR = 64


@dataclass(frozen=True)
class OperatorH:
    mat: np.ndarray
    ss: np.ndarray | None = None
    nil: np.ndarray | None = None
    nil_order: int = 1
    # eigenvalue clusters of ss with their spectral projectors
    eigvals: tuple = ()
    projectors: tuple = ()
    order: int = 0  # |sigma| when the operator is a normalized log

    def __post_init__(self):
        object.__setattr__(self, "mat", np.asarray(self.mat, dtype=complex))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def __matmul__(self, other):
        return self.mat @ (other.mat if isinstance(other, OperatorH) else other)


def _nil_order(n: np.ndarray, tol: float = 1e-9) -> int:
    if n is None:
        return 1
    scale = max(1.0, np.abs(n).max())
    p = np.eye(len(n), dtype=complex)
    for d in range(1, len(n) + 2):
        p = p @ n
        if np.abs(p).max() <= tol * scale**d:
            return d
    return len(n)


def _cluster(values, tol):
    centers: list[complex] = []
    for v in values:
        for c in centers:
            if abs(c - v) < tol:
                break
        else:
            centers.append(v)
    return centers


def _lagrange_projectors(s: np.ndarray, centers):
    n = len(s)
    eye = np.eye(n, dtype=complex)
    out = []
    for c in centers:
        p = eye.copy()
        for d in centers:
            if d is not c:
                p = p @ (s - d * eye) / (c - d)
        out.append(p)
    return out


def semisimple_part(a: np.ndarray, centers) -> np.ndarray:
    """Newton iteration S <- S - p(S) p'(S)^{-1}, p the squarefree polynomial with roots ``centers``."""
    n = len(a)
    eye = np.eye(n, dtype=complex)
    s = np.asarray(a, dtype=complex).copy()
    for _ in range(60):
        p = eye.copy()
        dp = np.zeros_like(eye)
        for c in centers:
            f = s - c * eye
            dp = dp @ f + p
            p = p @ f
        if np.abs(p).max() < 1e-15 * max(1.0, np.abs(s).max()) ** len(centers):
            break
        s = s - np.linalg.solve(dp.T, p.T).T
    return s


def split(mat: np.ndarray, tol: float = CLUSTER_TOL) -> OperatorH:
    """Jordan-Chevalley split of a numeric matrix with clustered eigenvalues."""
    mat = np.asarray(mat, dtype=complex)
    ev = np.linalg.eigvals(mat)
    # defective clusters spread like tol^(1/k); cluster generously then refine
    centers = _cluster(ev, max(tol, 1e-6))
    centers = [np.mean([v for v in ev if abs(v - c) < max(tol, 1e-6)]) for c in centers]
    ss = semisimple_part(mat, centers)
    nil = mat - ss
    if np.abs(nil).max() < tol * max(1.0, np.abs(mat).max()):
        nil = np.zeros_like(mat)
    return OperatorH(mat, ss, nil, _nil_order(nil), tuple(centers),
                     tuple(_lagrange_projectors(ss, centers)))


def normalized_log(sigma, max_den: int = MAX_DENOMINATOR, tol: float = 1e-6) -> OperatorH:
    """N with exp(-2 pi i N) = sigma and eigenvalues of N_s in (-1, 0]."""
    sig = sigma.mat if isinstance(sigma, OperatorH) else np.asarray(sigma, dtype=complex)
    n = len(sig)
    ev = np.linalg.eigvals(sig)
    snapped = {}
    for v in ev:
        if abs(abs(v) - 1) > tol:
            raise NotRootOfUnity(f"eigenvalue {v} is not on the unit circle")
        q = Fraction(np.angle(v) / (2 * np.pi)).limit_denominator(max_den) % 1
        if abs(np.exp(2j * np.pi * float(q)) - v) > tol:
            raise NotRootOfUnity(f"eigenvalue {v} is not a root of unity of order <= {max_den}")
        snapped[q] = np.exp(2j * np.pi * float(q))
    qs = sorted(snapped)
    centers = [snapped[q] for q in qs]
    ss = semisimple_part(sig, centers)
    projs = _lagrange_projectors(ss, centers)
    nus = [-q for q in qs]  # exp(-2 pi i nu) = exp(2 pi i q), nu in (-1, 0]
    ns = sum(float(nu) * p for nu, p in zip(nus, projs))
    if not isinstance(ns, np.ndarray):
        ns = np.zeros((n, n), dtype=complex)
    unip = np.linalg.solve(ss, sig)
    x = unip - np.eye(n)
    nn = np.zeros((n, n), dtype=complex)
    xp = np.eye(n, dtype=complex)
    for j in range(1, n + 1):
        xp = xp @ x
        nn += (-1) ** (j + 1) * xp / j
    nn = -nn / (2j * np.pi)
    if np.abs(nn).max() < 1e-12:
        nn = np.zeros_like(nn)
    order = 1
    for q in qs:
        order = lcm(order, q.denominator)
    return OperatorH(ns + nn, ns, nn, _nil_order(nn), tuple(complex(float(v)) for v in nus),
                     tuple(projs), order)


def exp_minus_2pi_i(N: OperatorH) -> np.ndarray:
    return operator_power(1.0, -2j * np.pi, N).mat


def operator_power(x: complex, log_x: complex, N: OperatorH) -> OperatorH:
    """exp(log_x * N); exact finite sum on the nilpotent part when the split is known."""
    if x == 0:
        raise ZeroBase("operator power of zero base")
    if N.ss is None or not N.projectors:
        from scipy.linalg import expm
        return OperatorH(expm(log_x * N.mat))
    n = N.dim
    ss = sum(np.exp(log_x * nu) * p for nu, p in zip(N.eigvals, N.projectors))
    un = np.eye(n, dtype=complex)
    term = np.eye(n, dtype=complex)
    for j in range(1, N.nil_order):
        term = term @ (log_x * N.nil) / j
        un = un + term
    return OperatorH(ss @ un)


def taylor_coefficients(f, z0: complex, order: int, radius: float = 0.5, npts: int = 64) -> np.ndarray:
    """c_j = f^{(j)}(z0)/j!, j < order, by the trapezoid rule on a circle."""
    npts = max(npts, 2 * order + 8)
    w = np.exp(2j * np.pi * np.arange(npts) / npts)
    vals = np.array([f(z0 + radius * wk) for wk in w])
    c = np.fft.fft(vals) / npts
    return c[:order] / radius ** np.arange(order)


@dataclass(frozen=True)
class GammaJet:
    coefficients: tuple


def recip_gamma_jet(s: complex, nil_order: int) -> GammaJet:
    """Taylor coefficients of 1/Gamma(s+1) at s up to order nil_order-1."""
    c0 = complex(rgamma(s + 1))
    if nil_order == 1:
        return GammaJet((c0,))
    c = taylor_coefficients(lambda z: rgamma(z + 1), s, nil_order, radius=0.5)
    c[0] = c0
    return GammaJet(tuple(complex(v) for v in c))


def matrix_function(N: OperatorH, f, radius: float = 0.25) -> np.ndarray:
    """f(N) = sum over clusters P_c sum_j f^{(j)}(nu_c)/j! N_n^j for analytic f."""
    n = N.dim
    out = np.zeros((n, n), dtype=complex)
    for nu, p in zip(N.eigvals, N.projectors):
        if N.nil_order == 1:
            out += f(nu) * p
            continue
        c = taylor_coefficients(f, nu, N.nil_order, radius)
        c[0] = f(nu)
        acc = np.zeros((n, n), dtype=complex)
        term = np.eye(n, dtype=complex)
        for j in range(N.nil_order):
            acc += c[j] * term
            term = term @ N.nil
        out += p @ acc
    return out


def recip_gamma_op(N: OperatorH, shift: float = 1.0) -> np.ndarray:
    """1/Gamma(N + shift), using the jets cluster by cluster."""
    n = N.dim
    out = np.zeros((n, n), dtype=complex)
    for nu, p in zip(N.eigvals, N.projectors):
        jet = recip_gamma_jet(nu + shift - 1, N.nil_order).coefficients
        acc = np.zeros((n, n), dtype=complex)
        term = np.eye(n, dtype=complex)
        for cj in jet:
            acc += cj * term
            term = term @ N.nil
        out += p @ acc
    return out


def sharp_map(T, basis_pairing) -> OperatorH:
    """T^# A_i = sum_j (T phi^j, phi_i) A_j, i.e. T^# = eta^{-1} T^t eta."""
    T = T.mat if isinstance(T, OperatorH) else np.asarray(T, dtype=complex)
    eta = np.asarray(basis_pairing, dtype=complex)
    if abs(np.linalg.det(eta)) < 1e-12:
        raise SingularPairing("residue pairing Gram matrix is singular")
    return OperatorH(np.linalg.solve(eta, T.T @ eta))


def pairing_transpose(R, gram) -> np.ndarray:
    """Transpose w.r.t. the bilinear form (A, B) = A^t gram B."""
    R = R.mat if isinstance(R, OperatorH) else np.asarray(R)
    gram = np.asarray(gram, dtype=complex)
    if abs(np.linalg.det(gram)) < 1e-12:
        raise SingularPairing("Gram matrix is singular")
    return np.linalg.solve(gram, R.T @ gram)


def sf_transpose(R, gram, M) -> np.ndarray:
    """R^SF = M R^T M^{-1}, R^T the transpose w.r.t. the residue pairing ``gram``."""
    M = np.asarray(M, dtype=complex)
    return M @ pairing_transpose(R, gram) @ np.linalg.inv(M)
