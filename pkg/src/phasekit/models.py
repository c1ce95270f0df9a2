"""Built-in A_mu singularity models: lattice, Frobenius data and A-basis together."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import gamma

from .continuation import cycle_weights, frobenius_a_mu
from .lattice import a_mu
from .periods import SingularityModel


def a_basis_a_mu(mu: int) -> np.ndarray:
    """A_basis[k, i] = <A_i, e_k> with A_i the section whose period is lambda^{s_i}/Gamma(s_i + 1)."""
    m = mu + 1
    zeta = np.exp(2j * np.pi / m)
    out = np.empty((mu, mu), dtype=complex)
    for k in range(mu):
        w = cycle_weights(mu, np.eye(mu)[k])
        for i in range(1, mu + 1):
            s = i / m - 1
            out[k, i - 1] = m ** s * gamma(s + 1) * np.sum(w * zeta ** (np.arange(m) * (i - 1 - mu)))
    return out


@lru_cache(maxsize=None)
def model_a_mu(mu: int) -> SingularityModel:
    return SingularityModel(a_mu(mu), frobenius_a_mu(mu), a_basis_a_mu(mu))


def builtin_model(label: str) -> SingularityModel:
    label = label.upper()
    if label in ("A1", "A2", "A3"):
        return model_a_mu(int(label[1]))
    from .errors import DomainError
    raise DomainError(f"no built-in model {label!r}")
