"""Truncated Fock space, vertex operators and the phase factor of their composition.

Elements are finite sums of coherent pieces exp(h^{-1/2} l.q) m(q) where q runs over
negative-mode coordinates q_{(m, j)}, m = 0..T, and m is a polynomial whose terms carry
an integer power of h^{1/2}. Creation by f_- multiplies, annihilation by f_+ acts as
h^{1/2} times a derivation; e^{f_+} is the shift q -> q + h^{1/2} c.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as iproduct
from math import comb, factorial

import numpy as np

from .errors import DomainError, RegularizationFailure, TruncationOverflow, ZeroNormalOrderedTerm
from .periods import SingularityModel, period_vector_t0

DEFAULT_TRUNCATION = 8


# ------------------------------------------------------------------ tame monomials

@dataclass(frozen=True)
class TameMonomial:
    g: int
    neg: tuple = ()   # negative modes k_1..k_m'
    pos: tuple = ()   # positive modes l_1..l_m''


def tame_predicate(m: TameMonomial) -> bool:
    """k_1 + ... + k_m' - m' <= 3(g - 1 + m''/2), doubled to stay in integers."""
    lhs = 2 * (sum(m.neg) - len(m.neg))
    rhs = 6 * (m.g - 1) + 3 * len(m.pos)
    return lhs <= rhs


def weyl_product(a: TameMonomial, b: TameMonomial) -> list:
    """Monomials of a*b after moving b's negative modes left of a's positive modes.

    Each contraction of a positive mode l of a with an equal negative mode of b removes
    both insertions and raises the h-power by one."""
    out = []
    pos_a, neg_b = list(a.pos), list(b.neg)
    pairs = [(i, j) for i, l in enumerate(pos_a) for j, k in enumerate(neg_b) if l == k]

    def rec(start, used_i, used_j, n):
        out.append((used_i, used_j, n))
        for idx in range(start, len(pairs)):
            i, j = pairs[idx]
            if i not in used_i and j not in used_j:
                rec(idx + 1, used_i | {i}, used_j | {j}, n + 1)

    rec(0, frozenset(), frozenset(), 0)
    res = []
    for ui, uj, n in out:
        neg = tuple(a.neg) + tuple(k for j, k in enumerate(neg_b) if j not in uj)
        pos = tuple(l for i, l in enumerate(pos_a) if i not in ui) + tuple(b.pos)
        res.append(TameMonomial(a.g + b.g - 1 + n, neg, pos))
    return res


# ------------------------------------------------------------------ Fock space

@dataclass(frozen=True)
class FockSpace:
    model: SingularityModel
    truncation: int = DEFAULT_TRUNCATION
    weight_cap: int | None = None

    @property
    def nvars(self) -> int:
        return self.model.mu * (self.truncation + 1)

    def weights(self) -> np.ndarray:
        """Mode weight m + 1 of q_{(m, j)}."""
        return np.repeat(np.arange(1, self.truncation + 2), self.model.mu)

    @property
    def cap(self) -> int:
        return self.weight_cap if self.weight_cap is not None else 4 * (self.truncation + 1)

    def vacuum(self) -> "FockElement":
        z = (0,) * self.nvars
        return FockElement(self, ((np.zeros(self.nvars, dtype=complex), {(0, z): 1.0 + 0j}),))


def _key(lin):
    return tuple(np.round(np.concatenate([lin.real, lin.imag]), 10))


@dataclass(frozen=True)
class FockElement:
    space: FockSpace
    comps: tuple = field(default_factory=tuple)  # (lin, {(h, exps): coeff})

    def _new(self, comps):
        merged = {}
        for lin, poly in comps:
            k = _key(lin)
            if k in merged:
                d = merged[k][1]
                for m, c in poly.items():
                    d[m] = d.get(m, 0) + c
            else:
                merged[k] = (lin, dict(poly))
        return FockElement(self.space, tuple(merged.values()))

    def __add__(self, other):
        return self._new(self.comps + other.comps)

    def scale(self, c):
        return FockElement(self.space, tuple((l, {m: c * v for m, v in p.items()}) for l, p in self.comps))

    def __sub__(self, other):
        return self + other.scale(-1)

    def vacuum_coefficient(self) -> complex:
        z = (0, (0,) * self.space.nvars)
        return complex(sum(p.get(z, 0) for _, p in self.comps))

    def terms(self) -> dict:
        """Flat dict {(lin key, h, exps): coeff}."""
        out = {}
        for l, p in self.comps:
            k = _key(l)
            for m, c in p.items():
                out[(k,) + m] = out.get((k,) + m, 0) + c
        return out

    def distance(self, other) -> float:
        a, b = self.terms(), other.terms()
        return max([abs(a.get(k, 0) - b.get(k, 0)) for k in set(a) | set(b)] or [0.0])

    # -- elementary operators
    def mul_linear(self, g, check_cap: bool = True) -> "FockElement":
        """Multiplication by h^{-1/2} g.q."""
        g = np.asarray(g)
        w = self.space.weights()
        nz = np.nonzero(g)[0]
        out = []
        for lin, poly in self.comps:
            d = {}
            for (h, e), c in poly.items():
                for i in nz:
                    e2 = list(e)
                    e2[i] += 1
                    if check_cap and int(np.dot(e2, w)) > self.space.cap:
                        raise TruncationOverflow("monomial exceeds the mode-weight cap")
                    key = (h - 1, tuple(e2))
                    d[key] = d.get(key, 0) + c * g[i]
            out.append((lin, d))
        return self._new(out)

    def derive(self, c) -> "FockElement":
        """h^{1/2} sum_i c_i d/dq_i."""
        c = np.asarray(c)
        out = []
        for lin, poly in self.comps:
            s = complex(lin @ c)
            d = {m: s * v for m, v in poly.items()}
            for (h, e), v in poly.items():
                for i in np.nonzero(c)[0]:
                    if e[i]:
                        e2 = list(e)
                        e2[i] -= 1
                        key = (h + 1, tuple(e2))
                        d[key] = d.get(key, 0) + v * e[i] * c[i]
            out.append((lin, d))
        return self._new(out)

    def exp_creation(self, g) -> "FockElement":
        g = np.asarray(g, dtype=complex)
        return FockElement(self.space, tuple((lin + g, dict(p)) for lin, p in self.comps))

    def exp_annihilation(self, c) -> "FockElement":
        """q -> q + h^{1/2} c on every piece."""
        c = np.asarray(c, dtype=complex)
        out = []
        for lin, poly in self.comps:
            s = np.exp(complex(lin @ c))
            d = {}
            for (h, e), v in poly.items():
                idx = [i for i in range(len(e)) if e[i]]
                for rs in iproduct(*[range(e[i] + 1) for i in idx]):
                    coef = v * s
                    e2 = list(e)
                    for i, r in zip(idx, rs):
                        coef *= comb(e[i], r) * c[i] ** r
                        e2[i] -= r
                    key = (h + sum(rs), tuple(e2))
                    d[key] = d.get(key, 0) + coef
            out.append((lin, d))
        return self._new(out)

    def rebase(self, lin_ref, degree: int) -> "FockElement":
        """Rewrite each piece on the exponent lin_ref, expanding exp(h^{-1/2}(lin - lin_ref).q) to a degree."""
        out = []
        for lin, poly in self.comps:
            delta = lin - lin_ref
            piece = FockElement(self.space, ((np.asarray(lin_ref, dtype=complex), dict(poly)),))
            acc, term = piece, piece
            for n in range(1, degree + 1):
                term = term.mul_linear(delta, check_cap=False).scale(1.0 / n)
                acc = acc + term
            out.extend(acc.comps)
        return self._new(out)


# ------------------------------------------------------------------ fields

def _modes(alpha, lam, model, T, log_lam=None, shift: int = 0):
    """Creation vector g and annihilation shift c of d_lambda^shift f_alpha(lambda)."""
    eta = model.eta
    g = np.concatenate([period_vector_t0(alpha, -m - 1 + shift, lam, log_lam, model) for m in range(T + 1)])
    c = np.concatenate([(-1) ** (n + 1) * (period_vector_t0(alpha, n + shift, lam, log_lam, model) @ eta)
                        for n in range(T + 1)])
    return g, c


def _check_t(t):
    if t is not None and np.any(np.asarray(t)):
        raise DomainError("Fock-space operators are implemented at t = 0")


def apply_vertex_operator(alpha, t, lam, log_lam, v: FockElement, model=None) -> FockElement:
    """Gamma^alpha(lambda) v = e^{f_-} e^{f_+} v."""
    _check_t(t)
    model = v.space.model if model is None else model
    g, c = _modes(alpha, lam, model, v.space.truncation, log_lam)
    return v.exp_annihilation(c).exp_creation(g)


def apply_heisenberg(a, lam, v: FockElement, log_lam=None) -> FockElement:
    """phi_a(lambda) v with phi_a = d_lambda f_a."""
    g, c = _modes(a, lam, v.space.model, v.space.truncation, log_lam, shift=1)
    return v.mul_linear(g) + v.derive(c)


def normal_ordered_vertex(alphas, lams, v: FockElement, log_lams=None) -> FockElement:
    """:Gamma^{a_1}(l_1)...Gamma^{a_n}(l_n): v."""
    T = v.space.truncation
    model = v.space.model
    log_lams = log_lams or [None] * len(alphas)
    G = np.zeros(v.space.nvars, dtype=complex)
    C = np.zeros(v.space.nvars, dtype=complex)
    for a, l, ll in zip(alphas, lams, log_lams):
        g, c = _modes(a, l, model, T, ll)
        G, C = G + g, C + c
    return v.exp_annihilation(C).exp_creation(G)


def compose_and_extract_phase(alpha, beta, lam, mu, model: SingularityModel, truncation: int = DEFAULT_TRUNCATION,
                              t=None, log_lam=None, log_mu=None) -> complex:
    """Vacuum coefficient of Gamma^a Gamma^b |0> over that of :Gamma^a Gamma^b: |0>."""
    _check_t(t)
    if abs(lam) <= abs(mu):
        raise DomainError("composition needs |lambda| > |mu|")
    V = FockSpace(model, truncation)
    vac = V.vacuum()
    w = apply_vertex_operator(alpha, t, lam, log_lam, apply_vertex_operator(beta, t, mu, log_mu, vac))
    n = normal_ordered_vertex([alpha, beta], [lam, mu], vac, [log_lam, log_mu])
    d = n.vacuum_coefficient()
    if abs(d) < 1e-300:
        raise ZeroNormalOrderedTerm("normal-ordered vacuum coefficient vanishes")
    return w.vacuum_coefficient() / d


# ------------------------------------------------------------------ operator product expansion

def generator(kind: str, vec) -> tuple:
    """('phi', a) for a s^{-1} (x) 1 and ('exp', alpha) for 1 (x) e^alpha."""
    if kind not in ("phi", "exp"):
        raise DomainError(f"unknown generator {kind!r}")
    return kind, np.asarray(vec, dtype=float)


def heisenberg_contraction(a, alpha, lam, mu, model, T: int) -> complex:
    """Truncated Omega(d_lambda f_a(lambda), f_alpha(mu)) as a sum of period pairings."""
    s = 0j
    for n in range(T + 1):
        s += (-1) ** (n + 1) * model.pair(period_vector_t0(a, n + 1, lam, None, model),
                                          period_vector_t0(alpha, -n - 1, mu, None, model))
        s -= (-1) ** (n + 1) * model.pair(period_vector_t0(alpha, n, mu, None, model),
                                          period_vector_t0(a, -n, lam, None, model))
    return s


def _contraction_scalar(a, b, mu, lam, model, xpath):
    """Full (untruncated) contraction between X(a, mu) and X(b, lam)."""
    from .phase import dlambda_rhs, omega_closed_form
    from .polylog import ComplexPath
    ka, va = a
    kb, vb = b
    if ka == "exp" and kb == "exp":
        return np.exp(omega_closed_form(va, vb, mu, lam, model, path=ComplexPath(tuple(xpath)),
                                        clearance=1e-9).omega)
    if ka == "phi" and kb == "exp":
        return dlambda_rhs(va, vb, mu, lam, model)
    if ka == "exp" and kb == "phi":
        # Omega(mu, lam) depends on lam/mu only
        return -(mu / lam) * dlambda_rhs(va, vb, mu, lam, model)
    w = period_vector_t0(vb, -1, lam, None, model)
    w0 = period_vector_t0(vb, 0, lam, None, model)
    v = period_vector_t0(va, 0, mu, None, model)
    th = model.theta + 0.5
    return model.pair(v, th * w) / (mu - lam) ** 2 + model.pair(v, th * w0) / (mu - lam)


def _normal_ordered(a, b, mu, lam, v: FockElement):
    """(:X(a, mu) X(b, lam): v, X(b, lam) v, X(a, mu) v) at the space's truncation."""
    T = v.space.truncation
    model = v.space.model
    ka, va = a
    kb, vb = b
    ga, ca = _modes(va, mu, model, T, shift=1 if ka == "phi" else 0)
    gb, cb = _modes(vb, lam, model, T, shift=1 if kb == "phi" else 0)
    if ka == "exp" and kb == "exp":
        return v.exp_annihilation(ca + cb).exp_creation(ga + gb)
    if ka == "phi" and kb == "exp":
        Gb = v.exp_annihilation(cb).exp_creation(gb)
        return Gb.mul_linear(ga) + v.exp_annihilation(cb).derive(ca).exp_creation(gb)
    if ka == "exp" and kb == "phi":
        Ga = v.exp_annihilation(ca).exp_creation(ga)
        return Ga.mul_linear(gb) + v.exp_annihilation(ca).derive(cb).exp_creation(ga)
    return (v.mul_linear(gb).mul_linear(ga) + v.derive(cb).mul_linear(ga)
            + v.derive(ca).mul_linear(gb) + v.derive(cb).derive(ca))


def _contracted_rest(a, b, mu, lam, v: FockElement):
    """The operator left after the single contraction: Gamma^b v, Gamma^a v, or v."""
    T = v.space.truncation
    model = v.space.model
    ka, va = a
    kb, vb = b
    if ka == "phi" and kb == "exp":
        g, c = _modes(vb, lam, model, T)
        return v.exp_annihilation(c).exp_creation(g)
    if ka == "exp" and kb == "phi":
        g, c = _modes(va, mu, model, T)
        return v.exp_annihilation(c).exp_creation(g)
    return v


def _reference_lin(a, b, lam, v: FockElement):
    T = v.space.truncation
    model = v.space.model
    G = np.zeros(v.space.nvars, dtype=complex)
    for kind, vec in (a, b):
        if kind == "exp":
            G = G + _modes(vec, lam, model, T)[0]
    return G


def laurent_product(a, b, lam, v: FockElement, M: int, degree: int, radius=None, npts: int = 64):
    """Laurent coefficients in eps = mu - lam of eps^M X(a, mu) X(b, lam) v on a circle.

    Returns (dict j -> FockElement-terms dict, scale) for j in -npts/2 .. npts/2 - 1."""
    model = v.space.model
    rho = 0.25 * abs(lam) if radius is None else radius
    eps = rho * (lam / abs(lam)) * np.exp(2j * np.pi * np.arange(npts) / npts)
    lin_ref = [l for l, _ in v.comps]
    G = _reference_lin(a, b, lam, v)
    samples, keys = [], set()
    xs = []
    for e in eps:
        mu = lam + e
        xs.append(lam / mu)
        S = _contraction_scalar(a, b, mu, lam, model, xs)
        no = _normal_ordered(a, b, mu, lam, v)
        if a[0] == "exp" and b[0] == "exp":
            val = no.scale(S * e ** M)
        else:
            val = (no + _contracted_rest(a, b, mu, lam, v).scale(S)).scale(e ** M)
        parts = [FockElement(v.space, ((l, p),)) for l, p in val.comps]
        reb = None
        for part in parts:
            # attach each piece to the nearest reference exponent
            d = [np.abs(part.comps[0][0] - (r + G)).max() for r in lin_ref]
            ref = lin_ref[int(np.argmin(d))] + G
            r = part.rebase(ref, degree)
            reb = r if reb is None else reb + r
        t = reb.terms()
        samples.append(t)
        keys |= set(t)
    keys = sorted(keys)
    F = np.array([[s.get(k, 0) for k in keys] for s in samples])  # (npts, nkeys)
    C = np.fft.fft(F, axis=0) / npts  # C[j] = (1/N) sum_s F_s e^{-2 pi i s j/N}
    phase0 = lam / abs(lam)
    coeffs = {}
    for j in range(-npts // 2, npts // 2):
        coeffs[j] = {k: C[j % npts, i] / (rho * phase0) ** j for i, k in enumerate(keys)}
    scale = float(np.abs(F).max()) if F.size else 0.0
    return coeffs, scale, rho


def _terms_to_element(space, terms: dict) -> FockElement:
    comps = {}
    for key, c in terms.items():
        lk, h, e = key[0], key[1], key[2]
        if lk not in comps:
            n = len(lk) // 2
            comps[lk] = (np.array(lk[:n]) + 1j * np.array(lk[n:]), {})
        comps[lk][1][(h, e)] = comps[lk][1].get((h, e), 0) + c
    return FockElement(space, tuple(comps.values()))


def ope_product(a, b, k: int, M: int, lam, model, v: FockElement, t=None, npts: int = 64,
                tol: float = 1e-9) -> FockElement:
    """a_{(M-k-1)} b applied to v: the k-th Taylor coefficient at mu = lam of (mu - lam)^M X(a, mu) X(b, lam) v."""
    _check_t(t)
    if v.space.model is not model:
        raise DomainError("vector belongs to a different model")
    coeffs, scale, rho = laurent_product(a, b, lam, v, M, degree=k + 1, npts=npts)
    sing = max((abs(c) * rho ** (-j) for j in range(-npts // 2, 0) for c in coeffs[j].values()), default=0.0)
    if sing > tol * max(scale, 1.0):
        raise RegularizationFailure(f"(mu - lam)^{M} X X is singular at mu = lam (size {sing:.2e})")
    return _terms_to_element(v.space, coeffs[k])


def ope_pole_order(a, b, lam, model, v: FockElement, npts: int = 64, tol: float = 1e-8) -> int:
    """Order of the pole of X(a, mu) X(b, lam) v at mu = lam (negative for a zero)."""
    coeffs, scale, rho = laurent_product(a, b, lam, v, 0, degree=4, npts=npts)
    for j in range(-npts // 2 + 4, npts // 2):
        if max((abs(c) * rho ** j for c in coeffs[j].values()), default=0.0) > tol * max(scale, 1e-300):
            return -j
    return -npts // 2


def ope_m_stability(a, b, k: int, M: int, lam, model, v: FockElement, npts: int = 64) -> float:
    """Distance between the (k, M) and (k + 1, M + 1) evaluations of the same mode."""
    x = ope_product(a, b, k, M, lam, model, v, npts=npts)
    y = ope_product(a, b, k + 1, M + 1, lam, model, v, npts=npts)
    return x.distance(y)
