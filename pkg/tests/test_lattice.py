import json

import numpy as np
import pytest

from phasekit.errors import NotVanishing, ParseError, SingularSeifert, SpectrumMismatch
from phasekit.lattice import (a_mu, builtin, check_invariants, classical_monodromy, from_json, intersection_form,
                              load, monodromy_order, reflection, to_json)


def test_a1_intersection():
    assert intersection_form(a_mu(1)).tolist() == [[2]]


def test_a2_intersection_is_cartan_up_to_sign():
    G = intersection_form(a_mu(2))
    assert G[0, 0] == G[1, 1] == 2
    assert abs(G[0, 1]) == 1 and G[0, 1] == G[1, 0]


@pytest.mark.parametrize("mu", [1, 2, 3])
def test_builtin_invariants(mu):
    inv = check_invariants(a_mu(mu))
    assert all(inv.values()), inv


def test_a1_monodromy():
    assert np.allclose(classical_monodromy(a_mu(1)).mat, [[-1]])


@pytest.mark.parametrize("mu", [1, 2, 3])
def test_monodromy_order_and_pairing(mu):
    data = a_mu(mu)
    s = classical_monodromy(data).mat.real
    G = intersection_form(data)
    assert np.allclose(s.T @ G @ s, G)
    assert monodromy_order(s) == mu + 1


def test_a2_sigma_cubed():
    s = classical_monodromy(a_mu(2)).mat.real
    assert np.allclose(np.linalg.matrix_power(s, 3), np.eye(2))


@pytest.mark.parametrize("mu", [1, 2, 3])
def test_spectrum_matches_eigenvalues(mu):
    data = a_mu(mu)
    ev = np.linalg.eigvals(classical_monodromy(data).mat)
    target = np.exp(-2j * np.pi * np.array([float(s) for s in data.spectrum]))
    for e in ev:
        assert np.min(np.abs(e - target)) < 1e-10


def test_reflection_basics():
    data = a_mu(2)
    e1, e2 = np.eye(2, dtype=int)
    s1, s2 = reflection(data, e1), reflection(data, e2)
    assert np.array_equal(s1 @ e1, -e1)
    assert np.array_equal(s1 @ s1, np.eye(2))
    assert monodromy_order(s1 @ s2) == 3


def test_reflection_needs_vanishing_cycle():
    with pytest.raises(NotVanishing):
        reflection(a_mu(2), np.array([1, 1]) * 2)


def test_product_of_reflections_is_sigma_power():
    # Coxeter element of the distinguished basis
    for mu in (2, 3):
        data = a_mu(mu)
        P = np.eye(mu, dtype=int)
        for e in np.eye(mu, dtype=int):
            P = P @ reflection(data, e)
        assert monodromy_order(P) == mu + 1


def test_json_roundtrip(tmp_path):
    data = a_mu(3)
    p = tmp_path / "a3.json"
    p.write_text(json.dumps(to_json(data)))
    back = load(str(p))
    assert np.array_equal(back.seifert, data.seifert)
    assert back.spectrum == data.spectrum


def test_json_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ParseError):
        load(str(p))
    with pytest.raises(ParseError):
        from_json({"schema": "lattice.v9", "rank": 1, "seifert": [[1]]})


def test_singular_and_mismatched_data():
    with pytest.raises(SingularSeifert):
        classical_monodromy(from_json({"schema": "lattice.v1", "rank": 2, "seifert": [[1, 1], [1, 1]],
                                       "ell": 0}))
    bad = from_json({"schema": "lattice.v1", "rank": 1, "seifert": [[1]], "ell": 0, "spectrum": ["-1/3"]})
    with pytest.raises(SpectrumMismatch):
        classical_monodromy(bad)


def test_builtin_lookup():
    assert builtin("A2").rank == 2
