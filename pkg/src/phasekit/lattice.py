"""Milnor lattice: Seifert form, intersection form, reflections, classical monodromy.

Conventions: ``seifert[i][j] = SF(e_i, e_j)`` in a distinguished basis, so
``SF(a, b) = a @ L @ b`` and the intersection form is ``G = L + L.T``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import NotVanishing, ParseError, SingularSeifert, SpectrumMismatch
from .opcalc import OperatorH

SCHEMA = "lattice.v1"


@dataclass(frozen=True)
class MilnorLatticeData:
    rank: int
    seifert: np.ndarray
    ell: int = 0
    spectrum: tuple = ()
    label: str = ""

    def __post_init__(self):
        L = np.array(self.seifert, dtype=np.int64)
        if L.shape != (self.rank, self.rank):
            raise ParseError(f"seifert matrix must be {self.rank}x{self.rank}, got {L.shape}")
        L.setflags(write=False)
        object.__setattr__(self, "seifert", L)
        object.__setattr__(self, "spectrum", tuple(Fraction(s) for s in self.spectrum))
        if self.spectrum and len(self.spectrum) != self.rank:
            raise ParseError("spectrum length differs from rank")
        if self.ell < 0:
            raise ParseError("ell must be nonnegative")


@dataclass(frozen=True)
class Cycle:
    coords: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "coords", np.asarray(self.coords))


def _vec(alpha) -> np.ndarray:
    return np.asarray(alpha.coords if isinstance(alpha, Cycle) else alpha)


def intersection_form(data: MilnorLatticeData) -> np.ndarray:
    L = data.seifert
    return L + L.T


def seifert_form(data: MilnorLatticeData, alpha, beta):
    return _vec(alpha) @ data.seifert @ _vec(beta)


def pairing(data: MilnorLatticeData, alpha, beta):
    """The symmetric form (alpha|beta)."""
    return _vec(alpha) @ intersection_form(data) @ _vec(beta)


def classical_monodromy(data: MilnorLatticeData, tol: float = 1e-9) -> OperatorH:
    """Solve SF(sigma a, b) = -SF(b, a), i.e. sigma = -L^{-T} L."""
    L = data.seifert.astype(float)
    if round(np.linalg.det(L)) == 0:
        raise SingularSeifert(f"det(L) = 0 for {data.label!r}")
    sigma = -np.linalg.solve(L.T, L)
    sigma = np.round(sigma) if np.allclose(sigma, np.round(sigma), atol=1e-9) else sigma
    if data.spectrum:
        ev = np.linalg.eigvals(sigma)
        want = [np.exp(-2j * np.pi * float(s)) for s in data.spectrum]
        if not _multiset_close(ev, want, tol=1e-6):
            raise SpectrumMismatch(f"eigenvalues of sigma do not match exp(-2 pi i s) for {data.label!r}")
    return OperatorH(sigma.astype(complex))


def _multiset_close(a, b, tol):
    b = list(b)
    for x in a:
        d = [abs(x - y) for y in b]
        k = int(np.argmin(d))
        if d[k] > tol:
            return False
        b.pop(k)
    return True


def reflection(data: MilnorLatticeData, alpha) -> np.ndarray:
    """Matrix of s_alpha(x) = x - (alpha|x) alpha."""
    a = _vec(alpha)
    G = intersection_form(data)
    if a @ G @ a != 2:
        raise NotVanishing(f"(alpha|alpha) = {a @ G @ a}, expected 2")
    return np.eye(data.rank, dtype=np.int64) - np.outer(a, a @ G)


def check_invariants(data: MilnorLatticeData) -> dict:
    """Structural checks used by ``validate``; values are booleans."""
    L = data.seifert
    G = intersection_form(data)
    out = {
        "det_nonzero": round(np.linalg.det(L.astype(float))) != 0,
        "diag_two": bool(np.all(np.diag(G) == 2)),
    }
    if data.spectrum:
        s = data.spectrum
        c = s[0] + s[-1]
        out["spectrum_symmetric"] = all(s[i] + s[-1 - i] == c for i in range(len(s)))
    if out["det_nonzero"]:
        sig = classical_monodromy(data).mat.real
        out["sigma_preserves_G"] = bool(np.allclose(sig.T @ G @ sig, G))
        out["sigma_preserves_SF"] = bool(np.allclose(sig.T @ L @ sig, L))
    return out


def a_mu(mu: int) -> MilnorLatticeData:
    """Built-in lattice of the one-variable A_mu singularity x^{mu+1}/(mu+1)."""
    L = np.eye(mu, dtype=np.int64) - np.diag(np.ones(mu - 1, dtype=np.int64), 1)
    spec = [Fraction(i, mu + 1) - 1 for i in range(1, mu + 1)]
    return MilnorLatticeData(rank=mu, seifert=L, ell=0, spectrum=spec, label=f"A{mu}")


BUILTIN = {f"A{m}": (lambda m=m: a_mu(m)) for m in (1, 2, 3)}


def builtin(label: str) -> MilnorLatticeData:
    try:
        return BUILTIN[label]()
    except KeyError:
        raise ParseError(f"unknown built-in dataset {label!r}; choose from {sorted(BUILTIN)}") from None


def from_json(obj) -> MilnorLatticeData:
    if isinstance(obj, (str, bytes)):
        try:
            obj = json.loads(obj)
        except json.JSONDecodeError as e:
            raise ParseError(str(e)) from None
    try:
        if obj.get("schema", SCHEMA) != SCHEMA:
            raise ParseError(f"unsupported schema {obj.get('schema')!r}")
        spec = [Fraction(v) if isinstance(v, str) else Fraction(int(v[0]), int(v[1]))
                for v in obj.get("spectrum", [])]
        return MilnorLatticeData(
            rank=int(obj["rank"]),
            seifert=np.array(obj["seifert"], dtype=np.int64),
            ell=int(obj.get("ell", 0)),
            spectrum=spec,
            label=str(obj.get("label", "")),
        )
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as e:
        raise ParseError(f"malformed lattice data: {e}") from None


def to_json(data: MilnorLatticeData) -> dict:
    return {
        "schema": SCHEMA,
        "label": data.label,
        "rank": data.rank,
        "ell": data.ell,
        "seifert": data.seifert.tolist(),
        "spectrum": [[s.numerator, s.denominator] for s in data.spectrum],
    }


def load(path_or_label: str) -> MilnorLatticeData:
    if path_or_label in BUILTIN:
        return builtin(path_or_label)
    try:
        with open(path_or_label) as fh:
            return from_json(json.load(fh))
    except OSError as e:
        raise ParseError(str(e)) from None
    except json.JSONDecodeError as e:
        raise ParseError(f"{path_or_label}: {e}") from None


def monodromy_order(mat: np.ndarray, max_order: int = 1000) -> int:
    m = np.rint(np.real(mat)).astype(np.int64)
    p = m.copy()
    eye = np.eye(len(m), dtype=np.int64)
    for k in range(1, max_order + 1):
        if np.array_equal(p, eye):
            return k
        p = p @ m
    raise ValueError("order exceeds bound")


def basis_cycles(rank: int) -> Sequence[np.ndarray]:
    return [np.eye(rank, dtype=np.int64)[k] for k in range(rank)]
