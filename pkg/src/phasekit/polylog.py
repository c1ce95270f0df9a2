"""Polylogarithms with path-based analytic continuation.

A continued value of Li_p is stored as the principal value plus the
monodromy picked up at each crossing of the cut (1, +inf); the correction is
a polynomial in the logarithm tracked continuously along the path.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial, ceil

import mpmath
import numpy as np

from .errors import AmbiguousCrossing, OrderTooLarge, OutsideDomain, PathInvalid, PathTooClose
from .opcalc import OperatorH, normalized_log, operator_power, taylor_coefficients

MAX_BERNOULLI = 32
CLEARANCE = 1e-3


@dataclass(frozen=True)
class ComplexPath:
    points: tuple
    purpose: str = ""

    def __post_init__(self):
        pts = tuple(complex(p) for p in self.points)
        if len(pts) < 1:
            raise PathInvalid("empty path")
        for a, b in zip(pts, pts[1:]):
            if a == b:
                raise PathInvalid("consecutive path points coincide")
        object.__setattr__(self, "points", pts)

    @property
    def start(self):
        return self.points[0]

    @property
    def end(self):
        return self.points[-1]

    def segments(self):
        return zip(self.points, self.points[1:])

    def reversed(self):
        return ComplexPath(self.points[::-1], self.purpose)

    def mapped(self, f):
        return ComplexPath([f(p) for p in self.points], self.purpose)


@dataclass(frozen=True)
class BranchedValue:
    value: complex
    log_branch: complex | None = None


@lru_cache(maxsize=None)
def _bernoulli_numbers(n):
    B = [Fraction(1)]
    for m in range(1, n + 1):
        B.append(-sum(comb(m + 1, k) * B[k] for k in range(m)) / (m + 1))
    return tuple(B)


@lru_cache(maxsize=None)
def bernoulli_coefficients(p: int) -> tuple:
    """Exact coefficients of B_p(x) in increasing powers of x."""
    if p < 0 or p > MAX_BERNOULLI:
        raise OrderTooLarge(f"Bernoulli order {p} outside [0, {MAX_BERNOULLI}]")
    B = _bernoulli_numbers(p)
    return tuple(comb(p, k) * B[p - k] for k in range(p + 1))


def bernoulli_poly(p: int, x: complex) -> complex:
    c = bernoulli_coefficients(p)
    acc = 0j
    for a in reversed(c):
        acc = acc * x + float(a)
    return acc


def _seg_dist(a, b, q):
    d = b - a
    t = np.clip(((q - a) * np.conj(d)).real / abs(d) ** 2, 0.0, 1.0)
    return abs(a + t * d - q)


def check_clearance(path: ComplexPath, singular=(0.0, 1.0), clearance=CLEARANCE):
    pts = path.points
    for q in singular:
        if len(pts) == 1:
            dmin = abs(pts[0] - q)
        else:
            dmin = min(_seg_dist(a, b, q) for a, b in path.segments())
        if dmin < clearance:
            raise PathTooClose(f"path passes within {dmin:.2e} of {q}")


def cut_crossings(path: ComplexPath):
    """Continuous log at the end and the list of (direction, log at crossing) for the cut (1, inf).

    direction is +1 for a downward crossing (upper to lower half plane). Vertices
    lying on the real axis are allowed; touching the cut without crossing is not."""
    pts = path.points
    for q in (pts[0], pts[-1]):
        if q.imag == 0 and q.real > 1:
            raise AmbiguousCrossing(f"path endpoint {q} lies on the cut (1, inf)")
    logs = [complex(np.log(pts[0]))]
    for a, b in path.segments():
        logs.append(logs[-1] + complex(np.log(b / a)))
    out = []
    side = np.sign(pts[0].imag)
    i = 1
    while i < len(pts):
        q = pts[i]
        if q.imag != 0:
            s = np.sign(q.imag)
            if side != 0 and s != side:
                a = pts[i - 1]
                if a.imag != 0:  # crossing inside the segment
                    t = a.imag / (a.imag - q.imag)
                    xc = a + t * (q - a)
                    if xc.real > 1:
                        out.append((int(side), logs[i - 1] + complex(np.log(xc / a))))
            side = s
            i += 1
            continue
        # run of vertices on the real axis
        j = i
        while j < len(pts) and pts[j].imag == 0:
            j += 1
        run = pts[i:j]
        on_cut = [v.real > 1 for v in run]
        if j == len(pts) or side == 0:
            i = j
            continue
        nxt = np.sign(pts[j].imag)
        if any(on_cut):
            if not all(on_cut):
                raise AmbiguousCrossing("path runs along the real axis through 1")
            if nxt == side:
                raise AmbiguousCrossing("path touches the cut (1, inf) without crossing")
            out.append((int(side), logs[i]))
        i = j
    return logs[-1], out


def _principal(p, x):
    if x == 0:
        return 0j
    return complex(mpmath.polylog(p, x))


def li_scalar(p: int, x: complex, path: ComplexPath | None = None,
              clearance: float = CLEARANCE) -> BranchedValue:
    """Li_p(x) continued along ``path`` from a start point inside the unit disk."""
    if p < 1:
        raise OrderTooLarge("li_scalar needs p >= 1")
    x = complex(x)
    if path is None:
        if abs(x) >= 1:
            raise OutsideDomain("|x| >= 1 requires a continuation path")
        return BranchedValue(_principal(p, x), complex(np.log(x)) if x != 0 else None)
    if abs(path.start) >= 1:
        raise PathInvalid("continuation path must start in the unit disk")
    if abs(path.end - x) > 1e-12 * max(1.0, abs(x)):
        raise PathInvalid("path does not end at x")
    check_clearance(path, clearance=clearance)
    ell, crossings = cut_crossings(path)
    val = _principal(p, path.end)
    g = factorial(p - 1)
    for direction, lc in crossings:
        shift = 2j * np.pi * round(lc.imag / (2 * np.pi))  # log at the crossing is real + 2 pi i m
        val += direction * 2j * np.pi * (ell - shift) ** (p - 1) / g
    return BranchedValue(val, ell)


def jonquiere_log(path: ComplexPath) -> complex:
    """Branch of log x used by the inversion formula for a path from x to 1/x."""
    x = path.start
    _, crossings = cut_crossings(path)
    n = sum(d for d, _ in crossings)
    return complex(np.log(x)) + 2j * np.pi * (n + (1 if x.imag < 0 else 0))


def jonquiere_rhs(p: int, x: complex, log_x: complex) -> complex:
    sgn = (-1) ** (p + 1)
    return sgn * _principal(p, x) + sgn * (2j * np.pi) ** p / factorial(p) * bernoulli_poly(p, log_x / (2j * np.pi))


def jonquiere_invert(p: int, x: complex, path: ComplexPath) -> float:
    """|Li_p(1/x) - RHS| with Li_p(1/x) continued along ``path`` from x to 1/x."""
    x = complex(x)
    if not 0 < abs(x) < 1:
        raise OutsideDomain("inversion formula needs 0 < |x| < 1")
    if abs(path.start - x) > 1e-12 or abs(path.end - 1 / x) > 1e-12:
        raise PathInvalid("path must run from x to 1/x")
    lhs = li_scalar(p, 1 / x, ComplexPath((path.start,) + path.points[1:-1] + (1 / x,))).value
    rhs = jonquiere_rhs(p, x, jonquiere_log(path))
    return abs(lhs - rhs)


# ---------------------------------------------------------------- operators

def _as_log(sigma) -> OperatorH:
    if isinstance(sigma, OperatorH) and sigma.order:
        return sigma
    return normalized_log(sigma)


def li_sigma_series(sigma, x: complex, log_x: complex | None = None, tol: float = 1e-16) -> np.ndarray:
    """Direct series sum_k x^{k+N}/(k+N); any branch of log x is allowed for |x| < 1."""
    N = _as_log(sigma)
    x = complex(x)
    if not 0 < abs(x) < 1:
        raise OutsideDomain("direct series needs 0 < |x| < 1")
    if log_x is None:
        log_x = complex(np.log(x))
    K = max(8, int(ceil(np.log(tol * (1 - abs(x))) / np.log(abs(x)))) + 2)
    k = np.arange(1, K + 1)
    xk = np.exp(k * log_x)
    n = N.dim
    acc = np.zeros((n, n), dtype=complex)
    for nu, P in zip(N.eigvals, N.projectors):
        term = np.eye(n, dtype=complex)
        block = np.zeros((n, n), dtype=complex)
        for j in range(N.nil_order):
            s = np.sum(xk / (k + nu) ** (j + 1))
            block += s * term
            term = term @ (-N.nil)
        acc += P @ block
    return operator_power(x, log_x, N).mat @ acc


def _y_path(path: ComplexPath, order: int, clearance: float):
    """Image of a path under x -> exp(log x / order), as a fine polyline and the final log x."""
    pts = [complex(np.exp(np.log(path.start) / order))]
    ell = complex(np.log(path.start))
    for a, b in path.segments():
        d = complex(np.log(b / a))
        m = max(1, int(ceil(abs(d) / order * 40)))
        for j in range(1, m + 1):
            pts.append(np.exp((ell + d * j / m) / order))
        ell += d
    return pts, ell


def li_sigma(sigma, x: complex, path: ComplexPath | None = None, transpose: bool = False,
             clearance: float = CLEARANCE) -> np.ndarray:
    """Operator polylogarithm by reduction to scalar Li_p.

    With ``transpose`` the reduction uses sigma_s^{-r} and -N_n; this is the
    adjoint that appears in the inversion identity."""
    N = _as_log(sigma)
    x = complex(x)
    if x == 0:
        raise OutsideDomain("Li_sigma at x = 0")
    if path is None:
        if abs(x) >= 1:
            raise OutsideDomain("|x| >= 1 requires a continuation path")
        path = ComplexPath((x,))
    if abs(path.end - x) > 1e-12 * max(1.0, abs(x)):
        raise PathInvalid("path does not end at x")
    if abs(path.start) >= 1:
        raise PathInvalid("continuation path must start in the unit disk")
    check_clearance(path, clearance=clearance)
    m = N.order
    eta = np.exp(2j * np.pi / m)
    ypts, ell = _y_path(path, m, clearance)
    n = N.dim
    nn = -N.nil if transpose else N.nil
    ss = sum(np.exp(-2j * np.pi * nu) * P for nu, P in zip(N.eigvals, N.projectors))
    if transpose:
        ss = np.linalg.inv(ss)
    out = np.zeros((n, n), dtype=complex)
    ssr = np.eye(n, dtype=complex)
    for r in range(1, m + 1):
        ssr = ssr @ ss
        rp = ComplexPath(_dedupe([eta**r * y for y in ypts]))
        coef = np.eye(n, dtype=complex)
        for p in range(1, N.nil_order + 1):
            v = li_scalar(p, rp.end, rp if len(rp.points) > 1 else None, clearance=clearance * 0.5).value
            out += v * coef @ ssr
            coef = coef @ (-nn * m)
    return _nil_exp(ell * nn, N.nil_order) @ out


def _nil_exp(a, order):
    n = len(a)
    out = np.eye(n, dtype=complex)
    term = np.eye(n, dtype=complex)
    for j in range(1, order):
        term = term @ a / j
        out = out + term
    return out


def _dedupe(pts):
    out = [pts[0]]
    for p in pts[1:]:
        if abs(p - out[-1]) > 1e-15:
            out.append(p)
    return out


def chi0_from_path(path: ComplexPath, order: int) -> int:
    """Branch indicator of the induced path x^{1/|sigma|} -> x^{-1/|sigma|}.

    Equals 1 when the point 1 is passed on the right, i.e. the same indicator
    that selects log x = Log x + 2 pi i in the scalar inversion formula."""
    ypts, _ = _y_path(path, order, CLEARANCE)
    yp = ComplexPath(_dedupe(ypts))
    _, crossings = cut_crossings(yp)
    n = sum(d for d, _ in crossings)
    return n + (1 if yp.start.imag < 0 else 0)


def inversion_correction(sigma, x: complex, chi0: int) -> np.ndarray:
    """-2 pi i sigma^{1-chi0}/(sigma-1) + x^{-N_n}/(-N_n) * (projector onto sigma_s = 1).

    Off the unipotent block the inverse is taken literally; on it the two singular
    terms are combined into the analytic function of N_n they sum to."""
    N = _as_log(sigma)
    n = N.dim
    lx = complex(np.log(x))
    sig = operator_power(1.0, -2j * np.pi, N).mat
    out = np.zeros((n, n), dtype=complex)
    Q = sum((P for nu, P in zip(N.eigvals, N.projectors) if abs(nu) > 1e-12), np.zeros((n, n), dtype=complex))
    eye = np.eye(n, dtype=complex)
    inv = np.linalg.solve((sig - eye) @ Q + (eye - Q), Q)
    out += -2j * np.pi * (sig if chi0 == 0 else eye) @ inv
    for nu, P in zip(N.eigvals, N.projectors):
        if abs(nu) > 1e-12:
            continue

        def g(z):
            return -2j * np.pi * np.exp(-2j * np.pi * (1 - chi0) * z) / (np.exp(-2j * np.pi * z) - 1) - np.exp(-lx * z) / z

        c = taylor_coefficients(g, 0.0, N.nil_order, radius=0.3)
        acc = np.zeros((n, n), dtype=complex)
        term = np.eye(n, dtype=complex)
        for cj in c:
            acc += cj * term
            term = term @ N.nil
        out += P @ acc
    return out


def li_sigma_inversion_check(sigma, x: complex, path: ComplexPath, chi0: int | None = None) -> float:
    """Residual of Li_sigma(1/x) = Li_sigma(x)^T + inversion_correction(sigma, x, chi0)."""
    N = _as_log(sigma)
    x = complex(x)
    if abs(path.start - x) > 1e-12 or abs(path.end - 1 / x) > 1e-12:
        raise PathInvalid("path must run from x to 1/x")
    if chi0 is None:
        chi0 = chi0_from_path(path, N.order)
    lhs = li_sigma(N, 1 / x, path)
    rhs = li_sigma(N, x, None, transpose=True) + inversion_correction(N, x, chi0)
    return float(np.abs(lhs - rhs).max())
