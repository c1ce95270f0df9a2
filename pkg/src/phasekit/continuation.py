"""Continuation of periods in (t, lambda) for one-variable A_mu models.

Frobenius data comes from the Jacobi algebra C[x]/(F') in flat coordinates.
Periods are continued either by integrating the Picard-Fuchs system or, as
an independent check, from the roots of F(x, t) = lambda tracked along paths.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.integrate import solve_ivp
from scipy.optimize import linear_sum_assignment

from .errors import (DomainError, MultipleRoot, NearDiscriminant, NonSemisimplePoint, NotInteger,
                     ParseError, PathInvalid, StiffnessFailure)

CLEARANCE = 1e-6
RTOL = 1e-12
ATOL = 1e-14


# ------------------------------------------------------------------ models

@dataclass(frozen=True)
class OneVariableModel:
    """F(x, t) = x^{mu+1}/(mu+1) + sum_j t_j x^{j-1} + c(t) in flat coordinates.

    c(t) is the constant correction making t flat for the primitive form dx;
    it vanishes for mu <= 2 and equals t_3^2/2 for mu = 3."""
    mu: int

    def __post_init__(self):
        if not 1 <= self.mu <= 3:
            raise DomainError("built-in one-variable models cover mu = 1, 2, 3")

    def correction(self, t):
        t = np.asarray(t, dtype=complex)
        if self.mu == 3:
            return t[2] ** 2 / 2, np.array([0, 0, t[2]])
        return 0j, np.zeros(self.mu, dtype=complex)

    def F(self, t) -> np.ndarray:
        """Coefficients of F(., t) in increasing powers of x."""
        t = np.asarray(t, dtype=complex)
        c = np.zeros(self.mu + 2, dtype=complex)
        c[: self.mu] = t
        c[self.mu + 1] = 1.0 / (self.mu + 1)
        c[0] += self.correction(t)[0]
        return c

    def dF(self, t, j: int) -> np.ndarray:
        """Coefficients of dF/dt_j (0-based j)."""
        c = np.zeros(self.mu, dtype=complex)
        c[j] = 1.0
        c[0] += self.correction(t)[1][j]
        return c

    def roots(self, t, lam) -> np.ndarray:
        c = self.F(t).copy()
        c[0] -= lam
        r = npoly.polyroots(c)
        return r

    def critical_points(self, t) -> np.ndarray:
        return npoly.polyroots(npoly.polyder(self.F(t)))

    def critical_values(self, t) -> np.ndarray:
        return npoly.polyval(self.critical_points(t), self.F(t))


@dataclass(frozen=True)
class FrobeniusData:
    N: int
    eta: np.ndarray
    theta: np.ndarray
    degrees: np.ndarray  # E = sum_j degrees[j] t_j d/dt_j
    model: OneVariableModel
    rho: np.ndarray | None = None
    unit_index: int = 0

    def _basis(self, t):
        return [self.model.dF(t, j) for j in range(self.N)]

    def _reduce(self, poly, t):
        """Coordinates of a polynomial modulo F' in the basis dF/dt_j."""
        dFdx = npoly.polyder(self.model.F(t))
        _, rem = npoly.polydiv(np.asarray(poly, dtype=complex), dFdx)
        rem = np.concatenate([rem, np.zeros(self.N - len(rem))])[: self.N]
        B = np.column_stack(self._basis(t))  # upper triangular with unit diagonal
        return np.linalg.solve(B, rem)

    def mult_matrix(self, poly, t) -> np.ndarray:
        """Matrix of multiplication by a polynomial in the flat basis."""
        return np.column_stack([self._reduce(npoly.polymul(poly, b), t) for b in self._basis(t)])

    def products(self, t) -> list:
        """C_i(t) with C_i[:, j] = coordinates of phi_i * phi_j."""
        return [self.mult_matrix(b, t) for b in self._basis(t)]

    def euler_matrix(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=complex)
        return sum(self.degrees[i] * t[i] * C for i, C in enumerate(self.products(t)))

    def product(self, v, w, t) -> np.ndarray:
        return sum(v[i] * C for i, C in enumerate(self.products(t))) @ w

    def residue_pairing(self, t) -> np.ndarray:
        """sum over critical points of dF_i dF_j / F''."""
        F = self.model.F(t)
        d2 = npoly.polyder(F, 2)
        cps = self.model.critical_points(t)
        B = [npoly.polyval(cps, b) for b in self._basis(t)]
        w = 1.0 / npoly.polyval(cps, d2)
        return np.array([[np.sum(B[i] * B[j] * w) for j in range(self.N)] for i in range(self.N)])


def frobenius_a_mu(mu: int) -> FrobeniusData:
    model = OneVariableModel(mu)
    eta = np.fliplr(np.eye(mu)).astype(complex)
    theta = np.array([0.5 - j / (mu + 1) for j in range(1, mu + 1)])
    degrees = np.array([1 - (j - 1) / (mu + 1) for j in range(1, mu + 1)])
    return FrobeniusData(mu, eta, theta, degrees, model, np.zeros((mu, mu)))


def canonical_coordinates(t, fdata: FrobeniusData, tol: float = 1e-8):
    """Critical values u_i (eigenvalues of E*) and Delta_i with 1/Delta_i = (pi_i, pi_i)."""
    E = fdata.euler_matrix(t)
    u = np.linalg.eigvals(E)
    n = len(u)
    for i in range(n):
        for j in range(i + 1, n):
            if abs(u[i] - u[j]) < tol:
                raise NonSemisimplePoint(f"critical values {u[i]} and {u[j]} coincide")
    one = np.zeros(n, dtype=complex)
    one[fdata.unit_index] = 1
    idem = []
    for i in range(n):
        P = np.eye(n, dtype=complex)
        for j in range(n):
            if j != i:
                P = P @ (E - u[j] * np.eye(n)) / (u[i] - u[j])
        idem.append(P @ one)
    delta = np.array([1 / (p @ fdata.eta @ p) for p in idem])
    return u, delta, idem


# ------------------------------------------------------------------ paths

@dataclass(frozen=True)
class ParamPath:
    """Polyline either in C (kind 'lambda', t fixed) or in C^N (kind 't', lambda fixed)."""
    points: tuple
    kind: str = "lambda"
    clearance: float = CLEARANCE

    def __post_init__(self):
        pts = tuple(np.asarray(p, dtype=complex) if self.kind == "t" else complex(p) for p in self.points)
        if len(pts) < 2:
            raise PathInvalid("a path needs at least two points")
        object.__setattr__(self, "points", pts)

    def segments(self):
        return zip(self.points, self.points[1:])

    def __add__(self, other):
        if self.kind != other.kind:
            raise PathInvalid("cannot join paths of different kinds")
        if np.max(np.abs(np.asarray(self.points[-1]) - np.asarray(other.points[0]))) > 1e-12:
            raise PathInvalid("paths do not join")
        return ParamPath(self.points + other.points[1:], self.kind, min(self.clearance, other.clearance))

    def reversed(self):
        return ParamPath(self.points[::-1], self.kind, self.clearance)


def path_from_json(obj) -> ParamPath:
    if isinstance(obj, (str, bytes)):
        obj = json.loads(obj)
    try:
        if obj.get("schema", "path.v1") != "path.v1":
            raise ParseError(f"unsupported schema {obj.get('schema')!r}")
        kind = obj.get("kind", "lambda")
        if kind == "lambda":
            pts = [complex(re, im) for re, im in obj["points"]]
        else:
            pts = [[complex(re, im) for re, im in p] for p in obj["points"]]
        return ParamPath(tuple(pts), kind, float(obj.get("clearance", CLEARANCE)))
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"malformed path: {e}") from None


def _seg_dist(a, b, q):
    d = b - a
    if d == 0:
        return abs(a - q)
    s = np.clip(((q - a) * np.conj(d)).real / abs(d) ** 2, 0.0, 1.0)
    return abs(a + s * d - q)


# ------------------------------------------------------------------ root oracle

def reference_roots(model: OneVariableModel, lam, log_lam=None) -> np.ndarray:
    """Roots of x^{mu+1}/(mu+1) = lambda labelled x_a = zeta^a ((mu+1) lambda)^{1/(mu+1)}."""
    m = model.mu + 1
    if log_lam is None:
        log_lam = np.log(complex(lam))
    base = np.exp((np.log(m) + log_lam) / m)
    return base * np.exp(2j * np.pi * np.arange(m) / m)


def cycle_weights(mu: int, alpha) -> np.ndarray:
    """Root weights of a lattice vector, e_k = [x_{mu+1-k}] - [x_{mu-k}]."""
    alpha = np.asarray(alpha)
    W = np.zeros((mu + 1, mu))
    for k in range(1, mu + 1):
        W[mu + 1 - k, k - 1] = 1
        W[mu - k, k - 1] = -1
    return W @ alpha


def weights_to_cycle(mu: int, w) -> np.ndarray:
    W = np.zeros((mu + 1, mu))
    for k in range(1, mu + 1):
        W[mu + 1 - k, k - 1] = 1
        W[mu - k, k - 1] = -1
    x, *_ = np.linalg.lstsq(W, np.asarray(w, dtype=float), rcond=None)
    return x


def track_roots(model: OneVariableModel, pts, roots0, max_halvings: int = 40) -> np.ndarray:
    """Follow labelled roots along a polyline of (t, lambda) points."""
    roots = np.array(roots0, dtype=complex)
    for (t0, l0), (t1, l1) in zip(pts, pts[1:]):
        t0, t1 = np.asarray(t0, dtype=complex), np.asarray(t1, dtype=complex)
        s, h = 0.0, 0.05
        while 1.0 - s > 1e-14:
            h = min(h, 1.0 - s)
            if _min_sep(roots) < 1e-9 or h < 1e-12:
                raise MultipleRoot("root tracking failed: roots collide along the path")
            for _ in range(max_halvings):
                sn = s + h
                new = model.roots(t0 + sn * (t1 - t0), l0 + sn * (l1 - l0))
                sep = _min_sep(roots)
                cost = np.abs(roots[:, None] - new[None, :])
                r, c = linear_sum_assignment(cost)
                moved = cost[r, c].max()
                if moved < 0.2 * sep:
                    roots = new[c]
                    s = sn
                    h *= 1.5
                    break
                h *= 0.5
            else:
                raise MultipleRoot("root tracking failed: roots collide along the path")
    return roots


def _min_sep(r):
    d = np.abs(r[:, None] - r[None, :])
    d[np.diag_indices(len(r))] = np.inf
    return d.min()


def roots_at(model: OneVariableModel, t, lam, route=None, lam_ref=None, log_lam_ref=None):
    """Labelled roots at (t, lambda) reached from (0, lam_ref) along ``route``.

    By default the route is (0, lam) -> (t, lam) in a straight line."""
    if route is None:
        lam_ref = lam if lam_ref is None else lam_ref
        route = [(np.zeros(model.mu), lam_ref), (np.asarray(t, dtype=complex), lam)]
    else:
        lam_ref = route[0][1]
    r0 = reference_roots(model, lam_ref, log_lam_ref)
    roots = track_roots(model, route, r0)
    if _min_sep(roots) < 1e-9:
        raise MultipleRoot("F(x, t) - lambda has a multiple root")
    return roots


def _deriv_chain(model: OneVariableModel, t, j: int, k: int):
    """Numerator/denominator power for d_lambda^k (dF_j / F') as N / F'^m."""
    dFdx = npoly.polyder(model.F(t))
    d2 = npoly.polyder(dFdx)
    N, m = model.dF(t, j), 1
    for _ in range(k):
        N = npoly.polysub(npoly.polymul(npoly.polyder(N), dFdx), m * npoly.polymul(N, d2))
        m += 2
    return N, dFdx, m


def root_oracle_from_roots(model: OneVariableModel, roots, weights, k: int, t) -> np.ndarray:
    """Covector components -d_lambda^k d_{t_j} sum_a w_a x_a for k >= -1."""
    w = np.asarray(weights)
    out = np.empty(model.mu, dtype=complex)
    for j in range(model.mu):
        if k == -1:
            G = npoly.polyint(model.dF(t, j))
            out[j] = np.sum(w * npoly.polyval(roots, G))
        elif k >= 0:
            N, dFdx, m = _deriv_chain(model, t, j, k)
            out[j] = np.sum(w * npoly.polyval(roots, N) / npoly.polyval(roots, dFdx) ** m)
        else:
            raise DomainError("root oracle supports k >= -1")
    return out


def root_oracle(model: OneVariableModel, alpha, k: int, t, lam, route=None, eta=None) -> np.ndarray:
    """I^{(k)}_alpha(t, lambda) as a vector in the flat basis.

    ``alpha`` is either a pair (a, b) of root labels or a lattice vector."""
    roots = roots_at(model, t, lam, route)
    if isinstance(alpha, tuple) and len(alpha) == 2 and all(isinstance(v, (int, np.integer)) for v in alpha):
        w = np.zeros(model.mu + 1)
        w[alpha[0]] += 1
        w[alpha[1]] -= 1
    else:
        w = cycle_weights(model.mu, alpha)
    c = root_oracle_from_roots(model, roots, w, k, t)
    eta = np.fliplr(np.eye(model.mu)) if eta is None else eta
    return np.linalg.solve(eta, c)


def root_monodromy(model: OneVariableModel, t, loop_lams, route_lam=None) -> np.ndarray:
    """Lattice matrix of the root permutation along a closed lambda-loop at fixed t."""
    lam0 = loop_lams[0]
    r0 = roots_at(model, t, lam0)
    r1 = track_roots(model, [(t, l) for l in loop_lams], r0)
    perm = np.argmin(np.abs(r0[:, None] - r1[None, :]), axis=0)  # r1[a] = r0[perm[a]]
    mu = model.mu
    cols = []
    for e in np.eye(mu):
        w = cycle_weights(mu, e)
        w2 = np.zeros(mu + 1)
        for a in range(mu + 1):
            w2[perm[a]] += w[a]
        cols.append(weights_to_cycle(mu, w2))
    return np.rint(np.column_stack(cols)).astype(int)


# ------------------------------------------------------------------ Picard-Fuchs integration

STEP_FACTOR = 0.2


class _LambdaSystem:
    """A(lam) = (lam - E*)^{-1} (theta - k - 1/2) at fixed t."""

    def __init__(self, fdata: FrobeniusData, t, k: int):
        E = fdata.euler_matrix(t)
        self.D = np.diag(fdata.theta - k - 0.5).astype(complex)
        self.E = E
        u, V = np.linalg.eig(E)
        self.u = u
        self.fast = np.linalg.cond(V) < 1e8
        if self.fast:
            self.V, self.ViD = V, np.linalg.solve(V, self.D)

    def __call__(self, lam):
        if self.fast:
            return (self.V * (1.0 / (lam - self.u))) @ self.ViD
        return np.linalg.solve(lam * np.eye(len(self.u)) - self.E, self.D)


def _t_operator(fdata: FrobeniusData, t, dt, lam, k: int) -> np.ndarray:
    """sum_i dt_i d/dt_i acting on I^{(k)}: -(dt *) (lam - E*)^{-1} (theta - k - 1/2)."""
    Cs = fdata.products(t)
    E = sum(fdata.degrees[i] * t[i] * C for i, C in enumerate(Cs))
    D = np.diag(fdata.theta - k - 0.5)
    X = sum(dt[i] * C for i, C in enumerate(Cs))
    return -X @ np.linalg.solve(lam * np.eye(fdata.N) - E, D)


def _pieces(dist, length, clearance, frac=STEP_FACTOR):
    """Parameter breakpoints on [0, 1] with each piece shorter than frac * distance."""
    s, out = 0.0, [0.0]
    while s < 1.0:
        d = dist(s)
        if d < clearance:
            raise NearDiscriminant(f"path comes within {d:.3g} of the discriminant")
        s = min(1.0, s + max(frac * d / max(length, 1e-300), 1e-9))
        out.append(s)
    if dist(1.0) < clearance:
        raise NearDiscriminant("path ends on the discriminant")
    return out


def _solve(rhs, y, breaks):
    for s0, s1 in zip(breaks, breaks[1:]):
        sol = solve_ivp(rhs, (s0, s1), y, method="DOP853", rtol=RTOL, atol=ATOL)
        if not sol.success:
            raise StiffnessFailure(sol.message)
        y = sol.y[:, -1]
    return y


def _crit_dist(u, shifts=(0,)):
    return lambda z: min(np.min(np.abs(z + s - u)) for s in shifts)


def pf_continue_lambda(I, k: int, t, path: ParamPath, fdata: FrobeniusData) -> np.ndarray:
    """Continue I^{(k)}(t, .) along a lambda-path (I may be a vector or a matrix of columns)."""
    I = np.asarray(I, dtype=complex)
    shape = I.shape
    A = _LambdaSystem(fdata, t, k)
    dist = _crit_dist(A.u)
    y = I.reshape(shape[0], -1).ravel()
    for a, b in path.segments():
        rhs = lambda s, y, a=a, b=b: ((b - a) * A(a + s * (b - a)) @ y.reshape(shape[0], -1)).ravel()
        y = _solve(rhs, y, _pieces(lambda s: dist(a + s * (b - a)), abs(b - a), path.clearance))
    return y.reshape(shape)


def pf_continue_t(I, k: int, path: ParamPath, lam, fdata: FrobeniusData) -> np.ndarray:
    """Continue I^{(k)}(., lam) along a path in the deformation space."""
    I = np.asarray(I, dtype=complex)
    shape = I.shape
    y = I.reshape(shape[0], -1).ravel()
    for a, b in path.segments():
        d = b - a
        dist = lambda s: np.min(np.abs(lam - fdata.model.critical_values(a + s * d)))
        rhs = lambda s, y, a=a, d=d: (_t_operator(fdata, a + s * d, d, lam, k) @ y.reshape(shape[0], -1)).ravel()
        y = _solve(rhs, y, _pieces(dist, np.linalg.norm(d), path.clearance))
    return y.reshape(shape)


def straight_t_path(t0, t1, clearance=CLEARANCE) -> ParamPath:
    return ParamPath((np.asarray(t0, dtype=complex), np.asarray(t1, dtype=complex)), "t", clearance)


def periods_at(model, t, lam, k: int = 0, log_lam=None) -> np.ndarray:
    """Period matrix (columns = lattice basis) at (t, lam), reached from (0, lam) along a straight t-path."""
    from .periods import period_matrix_t0
    P = period_matrix_t0(k, lam, log_lam, model)
    t = np.asarray(t, dtype=complex)
    if not np.any(t):
        return P
    return pf_continue_t(P, k, straight_t_path(np.zeros(model.mu), t), lam, model.frobenius)


# ------------------------------------------------------------------ phase form

def phase_form(Ia, Ib, t, fdata: FrobeniusData) -> np.ndarray:
    """Covector W_i = (phi_i * I_alpha, I_beta) of I_alpha(t, xi) * I_beta(t, 0).

    Ia, Ib may be matrices of columns, in which case W has shape (N, ma, mb)."""
    Ia, Ib = np.asarray(Ia, dtype=complex), np.asarray(Ib, dtype=complex)
    return np.array([(C @ Ia).T @ fdata.eta @ Ib for C in fdata.products(t)])


def phase_form_taylor(Ia0, Ib0, t, fdata: FrobeniusData, m_max: int) -> list:
    """Coefficients c_m with W(t, xi) = sum_m c_m xi^m, from I_alpha^{(0)}(t, 0) by the lambda-derivative recursion."""
    E = fdata.euler_matrix(t)
    if np.min(np.abs(np.linalg.eigvals(E))) < CLEARANCE:
        raise NearDiscriminant("lambda = 0 is a critical value")
    I = np.asarray(Ia0, dtype=complex)
    out, fact = [], 1.0
    for m in range(m_max + 1):
        out.append(phase_form(I, Ib0, t, fdata) / fact)
        I = np.linalg.solve(-E, np.diag(fdata.theta - m - 0.5) @ I)
        fact *= m + 1
    return out


def lambda_pairing_integral(fdata: FrobeniusData, t, path: ParamPath, xi, Pa0, Pb0):
    """J = -int (I_alpha(t, x + xi), I_beta(t, x)) dx along an x-path.

    This is the pull-back of the phase form along t - x 1 with shift xi.
    Pa0 are periods at x0 + xi, Pb0 at x0. Returns (J, Pa_end, Pb_end)."""
    Pa0, Pb0 = np.asarray(Pa0, dtype=complex), np.asarray(Pb0, dtype=complex)
    n, ma = Pa0.shape
    mb = Pb0.shape[1]
    A = _LambdaSystem(fdata, t, 0)
    eta = fdata.eta
    dist = _crit_dist(A.u, (0, xi))
    y = np.concatenate([Pa0.ravel(), Pb0.ravel(), np.zeros(ma * mb, dtype=complex)])
    na, nb = n * ma, n * mb

    def unpack(y):
        return y[:na].reshape(n, ma), y[na:na + nb].reshape(n, mb)

    for a, b in path.segments():
        def rhs(s, y, a=a, b=b):
            x = a + s * (b - a)
            Pa, Pb = unpack(y)
            return (b - a) * np.concatenate([(A(x + xi) @ Pa).ravel(), (A(x) @ Pb).ravel(),
                                             -(Pa.T @ eta @ Pb).ravel()])
        y = _solve(rhs, y, _pieces(lambda s: dist(a + s * (b - a)), abs(b - a), path.clearance))
    Pa, Pb = unpack(y)
    return y[na + nb:].reshape(ma, mb), Pa, Pb


def t_pairing_integral(fdata: FrobeniusData, path: ParamPath, lam, mu, Pl0, Pm0):
    """int of the phase form W(t', lam - mu) along t' - mu 1, i.e. sum_i dt_i (phi_i * I(t, lam), I(t, mu)).

    Returns (J, Pl_end, Pm_end) for period matrices continued at fixed lam and mu."""
    Pl0, Pm0 = np.asarray(Pl0, dtype=complex), np.asarray(Pm0, dtype=complex)
    n, ml = Pl0.shape
    mm = Pm0.shape[1]
    nl, nm = n * ml, n * mm
    y = np.concatenate([Pl0.ravel(), Pm0.ravel(), np.zeros(ml * mm, dtype=complex)])
    for a, b in path.segments():
        d = b - a

        def rhs(s, y, a=a, d=d):
            t = a + s * d
            Pl, Pm = y[:nl].reshape(n, ml), y[nl:nl + nm].reshape(n, mm)
            Cs = fdata.products(t)
            E = sum(fdata.degrees[i] * t[i] * C for i, C in enumerate(Cs))
            X = sum(d[i] * C for i, C in enumerate(Cs))
            Id = np.eye(n)
            D = np.diag(fdata.theta - 0.5)
            dPl = -X @ np.linalg.solve(lam * Id - E, D @ Pl)
            dPm = -X @ np.linalg.solve(mu * Id - E, D @ Pm)
            return np.concatenate([dPl.ravel(), dPm.ravel(), ((X @ Pl).T @ fdata.eta @ Pm).ravel()])

        dist = lambda s, a=a, d=d: np.min(np.abs(np.subtract.outer([lam, mu], fdata.model.critical_values(a + s * d))))
        y = _solve(rhs, y, _pieces(dist, np.linalg.norm(d), path.clearance))
    return y[nl + nm:].reshape(ml, mm), y[:nl].reshape(n, ml), y[nl:nl + nm].reshape(n, mm)


def integrate_phase_form(alpha, beta, path: ParamPath, xi, model, t=None, log_lam=None):
    """Line integral of W_{alpha, beta}(., xi) along a path in B'.

    For a 't' path the B'-path is taken literally, starting at t' = path[0]; periods are
    obtained at the start from t = 0 (with lambda' = xi + mu0 and mu0 chosen by translation).
    For a 'lambda' path at fixed t the B'-path is t - x 1 and the integral equals
    -int (I_alpha(t, x + xi), I_beta(t, x)) dx."""
    alpha = np.asarray(alpha, dtype=complex)
    beta = np.asarray(beta, dtype=complex)
    fdata = model.frobenius
    if path.kind == "lambda":
        if t is None:
            raise PathInvalid("a lambda-path needs the base deformation t")
        x0 = path.points[0]
        Pa = periods_at(model, t, x0 + xi) @ alpha[:, None]
        Pb = periods_at(model, t, x0) @ beta[:, None]
        J, _, _ = lambda_pairing_integral(fdata, t, path, xi, Pa, Pb)
        return complex(J[0, 0])
    # t' = t - mu 1 with t = 0 chosen so that t' = path start: mu = -t'_1 on the unit direction
    t0 = np.asarray(path.points[0], dtype=complex)
    mu0 = -t0[fdata.unit_index]
    tb = t0 + mu0 * np.eye(model.mu)[fdata.unit_index]
    shifted = ParamPath(tuple(p + mu0 * np.eye(model.mu)[fdata.unit_index] for p in path.points), "t",
                        path.clearance)
    Pl = periods_at(model, tb, xi + mu0, log_lam=log_lam) @ alpha[:, None]
    Pm = periods_at(model, tb, mu0) @ beta[:, None]
    J, _, _ = t_pairing_integral(fdata, shifted, xi + mu0, mu0, Pl, Pm)
    return complex(J[0, 0])


# ------------------------------------------------------------------ loops and monodromy

def generator_loop(u, base, i: int, radius=None, npts: int = 64, shifts=(0,), clearance=CLEARANCE) -> ParamPath:
    """Approach u[i] along a ray from ``base``, circle it counterclockwise, return.

    The radius defaults to 0.1 of the smallest gap between critical values. Every
    shifted copy (x + shift) of the loop must stay away from the other critical values."""
    u = np.asarray(u, dtype=complex)
    if radius is None:
        gaps = [abs(u[a] - u[b]) for a in range(len(u)) for b in range(a + 1, len(u))]
        radius = 0.1 * min(gaps) if gaps else 0.1 * abs(base - u[i])
    d = base - u[i]
    if abs(d) <= radius:
        raise PathInvalid("base point lies inside the circle")
    p = u[i] + radius * d / abs(d)
    phi0 = np.angle(d)
    circle = [u[i] + radius * np.exp(1j * (phi0 + 2 * np.pi * m / npts)) for m in range(npts + 1)]
    circle[-1] = p
    loop = ParamPath((base, p, *circle[1:], base), "lambda", clearance)
    others = np.delete(u, i)
    for s in shifts:
        for a, b in loop.segments():
            for v in others:
                if _seg_dist(a + s, b + s, v) < 0.5 * radius:
                    raise PathInvalid("loop passes too close to another critical value")
        if abs(s) >= radius:
            raise PathInvalid("shift exceeds loop radius")
    return loop


def compose(*paths: ParamPath) -> ParamPath:
    out = paths[0]
    for p in paths[1:]:
        out = out + p
    return out


def loop_monodromy(P0, P1, tol: float = 1e-6) -> np.ndarray:
    """Integer matrix W with P1 = P0 W, i.e. the continued basis cycle e_k is sum_j W_jk e_j."""
    W = np.linalg.solve(P0, P1)
    R = np.rint(W.real)
    if np.abs(W - R).max() > tol:
        raise NotInteger(f"monodromy matrix not integral (residual {np.abs(W - R).max():.2e})")
    return R.astype(int)


def vanishing_cycle(W, G) -> np.ndarray:
    """phi with W = I - phi (phi | .), recovered from a reflection matrix; sign is arbitrary."""
    W = np.asarray(W)
    D = np.eye(len(W), dtype=int) - W
    j = int(np.argmax(np.abs(D).sum(axis=0)))
    col = D[:, j]
    g = np.gcd.reduce(np.abs(col[col != 0])) if np.any(col) else 1
    phi = col // g
    if not np.array_equal(np.outer(phi, phi @ G), D):
        phi = -phi
        if not np.array_equal(np.outer(phi, phi @ G), D):
            raise NotInteger("loop monodromy is not a reflection")
    return phi


# ------------------------------------------------------------------ phase factors at t != 0

def omega_matrix_t(model, t, lam, mu):
    """Omega_{e_a, e_b}(t, lam, mu) for all basis pairs, with the period matrices at (t, lam), (t, mu).

    Omega(0, lam, mu) comes from the closed form (|lam| > |mu|); the value at t is obtained
    by integrating the phase form along t' = s t - mu 1, s in [0, 1]."""
    from .periods import period_matrix_t0
    from .phase import omega_closed_form
    n = model.mu
    if abs(lam) <= abs(mu):
        raise DomainError("base point needs |lambda| > |mu|")
    E = np.eye(n)
    O0 = np.array([[omega_closed_form(E[a], E[b], lam, mu, model).omega for b in range(n)] for a in range(n)])
    Pl = period_matrix_t0(0, lam, None, model)
    Pm = period_matrix_t0(0, mu, None, model)
    t = np.asarray(t, dtype=complex)
    if not np.any(t):
        return O0, Pl, Pm
    J, Pl, Pm = t_pairing_integral(model.frobenius, straight_t_path(np.zeros(n), t), lam, mu, Pl, Pm)
    return O0 + J, Pl, Pm


@dataclass
class LoopResult:
    integral: np.ndarray   # matrix over basis pairs of the loop integral
    monodromy: np.ndarray  # W with continued e_k = sum_j W_jk e_j
    omega: np.ndarray      # Omega at the base point
    values: dict = field(default_factory=dict)


def loop_integral(model, t, lam, mu, loop: ParamPath, base=None) -> LoopResult:
    """Integral of the phase form around a loop in B' based at t - mu 1.

    The loop is given in the x-plane (B'-point t - x 1), starting and ending at mu; the
    first period argument travels along x + (lam - mu)."""
    if abs(loop.points[0] - mu) > 1e-12 or abs(loop.points[-1] - mu) > 1e-12:
        raise PathInvalid("loop must start and end at mu")
    O, Pl, Pm = omega_matrix_t(model, t, lam, mu) if base is None else base
    J, Pa, Pb = lambda_pairing_integral(model.frobenius, t, loop, lam - mu, Pl, Pm)
    W = loop_monodromy(Pm, Pb)
    Wa = loop_monodromy(Pl, Pa)
    if not np.array_equal(W, Wa):
        raise PathInvalid("the two period arguments see different monodromies; shrink lam - mu")
    return LoopResult(J, W, O)


def integrality_value(res: LoopResult, alpha, beta, tol: float = 1e-5) -> dict:
    """(loop integral - Omega_{w a, w b} + Omega_{a, b}) / 2 pi i and its distance to an integer."""
    a = np.asarray(alpha, dtype=complex)
    b = np.asarray(beta, dtype=complex)
    W, O = res.monodromy, res.omega
    integral = a @ res.integral @ b
    val = integral - (W @ a) @ O @ (W @ b) + a @ O @ b
    q = val / (2j * np.pi)
    n = int(np.rint(q.real))
    resid = float(abs(q - n))
    out = {"integral": complex(integral), "value": complex(val), "integer": n, "residual": resid,
           "invariant": bool(np.array_equal(W @ a, a) and np.array_equal(W @ b, b))}
    if out["invariant"]:
        qi = integral / (2j * np.pi)
        out["invariant_integer"] = int(np.rint(qi.real))
        out["invariant_residual"] = float(abs(qi - np.rint(qi.real)))
    if resid > tol:
        raise NotInteger(f"loop combination off an integer by {resid:.2e}")
    return out


def integrality_check(alpha, beta, loop: ParamPath, t, lam, mu, model, tol: float = 1e-5) -> dict:
    return integrality_value(loop_integral(model, t, lam, mu, loop), alpha, beta, tol)


def vanishing_loop(model, t, lam, mu, i: int, npts: int = 64) -> dict:
    """Loop around the i-th critical value with alpha = beta = the vanishing cycle."""
    from .lattice import intersection_form
    u, _, _ = canonical_coordinates(t, model.frobenius)
    loop = generator_loop(u, mu, i, npts=npts, shifts=(0, lam - mu))
    res = loop_integral(model, t, lam, mu, loop)
    phi = vanishing_cycle(res.monodromy, intersection_form(model.lattice))
    val = phi @ res.integral @ phi
    return {"critical_value": complex(u[i]), "vanishing_cycle": phi.tolist(), "value": complex(val),
            "ratio": complex(val / (-4j * np.pi)), "result": res}


def invariant_loop(model, t, lam, mu, i: int, alpha, npts: int = 64) -> dict:
    """alpha invariant along the loop around u_i, beta = phi: returns integral and -2 Omega_{alpha, phi}."""
    from .lattice import intersection_form
    u, _, _ = canonical_coordinates(t, model.frobenius)
    loop = generator_loop(u, mu, i, npts=npts, shifts=(0, lam - mu))
    res = loop_integral(model, t, lam, mu, loop)
    phi = vanishing_cycle(res.monodromy, intersection_form(model.lattice))
    a = np.asarray(alpha)
    if not np.array_equal(res.monodromy @ a, a):
        raise DomainError("alpha is not invariant along the loop")
    return {"integral": complex(a @ res.integral @ phi), "expected": complex(-2 * (a @ res.omega @ phi)),
            "vanishing_cycle": phi.tolist()}


def random_loop(u, base, rng, max_len: int = 3, shifts=(0,), npts: int = 48) -> tuple:
    """Random word in the generator loops and their inverses; returns (loop, word)."""
    n = len(u)
    length = int(rng.integers(1, max_len + 1))
    word = [(int(rng.integers(0, n)), int(rng.choice([1, -1]))) for _ in range(length)]
    parts = []
    for i, e in word:
        g = generator_loop(u, base, i, npts=npts, shifts=shifts)
        parts.append(g if e == 1 else g.reversed())
    return compose(*parts), word
