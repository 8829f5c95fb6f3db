import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amekit import biunimodular as bu
from amekit import gates
from amekit.linalg import DimensionError, partial_transpose, reshuffle, unitarity_residual
from amekit.verify import is_2unitary


def test_vector_invariants():
    with pytest.raises(ValueError):
        bu.UnimodularVector((2,), [1, 1, 1, 1.1])
    with pytest.raises(DimensionError):
        bu.UnimodularVector((2,), [1, 1, 1])
    with pytest.raises(DimensionError):
        bu.UnimodularVector((), [1])


def test_vector_json_round_trip():
    v = bu.fixture("lambda_23")
    data = json.loads(v.to_json())
    assert data["radices"] == [2, 3] and len(data["phases"]) == 36 and len(data["phases"][0]) == 2
    back = bu.UnimodularVector.from_json(v.to_json())
    assert back.radices == v.radices and np.array_equal(back.phases, v.phases)
    with pytest.raises(ValueError):
        bu.UnimodularVector.from_dict({"phases": []})


def test_fixture_literals():
    assert np.allclose(bu.fixture("lambda_22").phases, [1, 1, -1j, 1j, 1j, 1j, 1, -1, 1j, -1, 1, 1j, 1j, -1, -1, -1j])
    assert np.allclose(bu.fixture("lambda_4").phases, [1, 1, 1, -1, 1, -1, -1, -1, 1, 1, 1, -1, -1, 1, 1, 1])
    assert bu.fixture("lambda_23").phases.size == 36
    assert bu.fixture("lambda_222").phases.size == 64
    with pytest.raises(ValueError):
        bu.fixture("nope")


@pytest.mark.parametrize("name,count", [("lambda_4", 2), ("lambda_23", 3), ("lambda_22", 4), ("lambda_222", 4)])
def test_fixture_distinct_entries(name, count):
    vals = bu.fixture(name).distinct_values()
    assert len(vals) == count
    order = {2: 2, 3: 3, 4: 4}[count]
    assert all(abs(z**order - 1) < 1e-12 for z in vals)


@pytest.mark.parametrize("name", bu.FIXTURES)
def test_fixture_gates_are_two_unitary(name):
    lam = bu.fixture(name)
    u = gates.multiunitary_from_lambda(lam, ansatz=bu.fixture_ansatz(name))
    assert is_2unitary(u, lam.d, tol=1e-9)[0]


def test_fixture_validation_reports_failing_rearrangement(monkeypatch):
    radices, ansatz, phases = bu._FIXTURES["lambda_22"]
    broken = phases.copy()
    broken[0] = -broken[0]
    monkeypatch.setitem(bu._FIXTURES, "lambda_22", (radices, ansatz, broken))
    with pytest.raises(ValueError, match="R|Gamma"):
        bu.fixture("lambda_22")
    assert bu.fixture("lambda_22", validate=False).phases[0] == -1


# biunimodularity and correlations

def test_is_biunimodular_examples():
    assert not bu.is_biunimodular(np.ones(9), gates.fourier_radices([3, 3]))[0]
    lam = bu.fixture("lambda_22")
    ok, res = bu.is_biunimodular(lam, np.kron(gates.fourier_radices([2, 2]), gates.fourier_radices([2, 2])))
    assert ok and res < 1e-12
    delta = np.zeros(16)
    delta[0] = 1
    assert not bu.is_biunimodular(delta, bu.fourier_tensor([2, 2]))[0]
    with pytest.raises(DimensionError):
        bu.is_biunimodular(lam, np.eye(4))
    with pytest.raises(ValueError):
        bu.is_biunimodular(np.ones(4))


def _brute_autocorrelation(lam):
    radices = lam.radices
    idx = list(itertools.product(*[range(r) for r in radices * 2]))
    t = lam.phases.reshape(radices * 2)
    mods = np.array(radices * 2)
    out = {}
    for s in idx:
        out[s] = sum(t[x] * np.conj(t[tuple((np.array(x) + s) % mods)]) for x in idx)
    return out


@pytest.mark.parametrize("name", ["lambda_22", "lambda_23"])
def test_autocorrelation_matches_brute_force(name):
    lam = bu.fixture(name)
    brute = _brute_autocorrelation(lam)
    fast = bu.autocorrelation(lam)
    assert all(abs(fast[s] - brute[s]) < 1e-9 for s in brute)


def test_autocorrelation_examples():
    assert bu.autocorrelation_residual(bu.fixture("lambda_22")) < 1e-12
    assert bu.autocorrelation_residual(bu.fixture("lambda_222")) < 1e-12
    assert abs(bu.autocorrelation_residual(np.ones(9)) - 9) < 1e-12
    assert abs(bu.autocorrelation(np.ones(9))[0, 0] - 9) < 1e-12


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=20, deadline=None)
def test_random_vectors_have_large_correlations(seed):
    lam = np.exp(2j * np.pi * np.random.default_rng(seed).random(16))
    assert bu.autocorrelation_residual(lam) > 0.1


def test_gamma_residual_examples():
    assert bu.gamma_residual(bu.fixture("lambda_4")) < 1e-12
    # the constant vector has vanishing phase-weighted correlations (its gate is
    # the identity, whose partial transpose is unitary) but maximal autocorrelation
    assert bu.gamma_residual(np.ones(16)) < 1e-12
    assert bu.autocorrelation_residual(np.ones(16)) == pytest.approx(16)
    rng = np.random.default_rng(0)
    assert bu.gamma_residual(np.exp(2j * np.pi * rng.random(16))) > 0.1
    with pytest.raises(ValueError):
        bu.gamma_residual(bu.fixture("lambda_22"))


@pytest.mark.parametrize("d,order", [(3, 3), (4, 2), (4, 4)])
def test_correlations_match_rearrangement_unitarity(d, order):
    rng = np.random.default_rng(d * 10 + order)
    seen = {"R": 0, "G": 0}
    for _ in range(600):
        lam = np.exp(2j * np.pi * rng.integers(0, order, d * d) / order)
        u = gates.multiunitary_from_lambda(lam, ansatz="fourier_d")
        r_ok = unitarity_residual(reshuffle(u, d)) < 1e-9
        g_ok = unitarity_residual(partial_transpose(u, [d, d], [0])) < 1e-9
        assert (bu.autocorrelation_residual(lam) < 1e-9) == r_ok
        assert (bu.gamma_residual(lam) < 1e-9) == g_ok
        seen["R"] += r_ok
        seen["G"] += g_ok
    if order != 4:
        assert seen["R"] > 0 and seen["G"] > 0


def test_small_gamma_residual_gives_gamma_unitary_gate():
    lam = bu.fixture("lambda_4")
    u = gates.multiunitary_from_lambda(lam, ansatz="fourier_d")
    assert unitarity_residual(partial_transpose(u, [4, 4], [0])) < 1e-9


# searches

def test_search_config_validation():
    with pytest.raises(ValueError):
        bu.SearchConfig(max_trials=0)
    with pytest.raises(ValueError):
        bu.SearchConfig(tol=0)
    with pytest.raises(ValueError):
        bu.SearchConfig(group_order=1)
    with pytest.raises(ValueError):
        bu.SearchConfig(ansatz="nope")


def test_random_search_finds_qubit_pair_vector():
    info = {}
    cfg = bu.SearchConfig(seed=0, max_trials=10**6)
    v = bu.random_discrete_search(cfg, [2, 2], info=info)
    assert v is not None and info["trials"] <= 10**6
    assert set(np.round(v.phases**4, 9)) == {1}
    assert is_2unitary(gates.multiunitary_from_lambda(v), 4, tol=1e-9)[0]
    again = bu.random_discrete_search(cfg, [2, 2])
    assert np.array_equal(v.phases, again.phases)


def test_random_search_single_qubit_finds_nothing():
    info = {}
    assert bu.random_discrete_search(bu.SearchConfig(seed=3, max_trials=20000), [2], info=info) is None
    assert info["trials"] == 20000


def test_random_search_hits_are_exact_for_any_batch_size():
    small = bu.SearchConfig(seed=0, max_trials=40000, batch_size=1000)
    big = bu.SearchConfig(seed=0, max_trials=40000, batch_size=4000)
    a, b = bu.random_discrete_search(small, [2, 2]), bu.random_discrete_search(big, [2, 2])
    assert a is not None and b is not None
    assert is_2unitary(gates.multiunitary_from_lambda(a), 4)[0] and is_2unitary(gates.multiunitary_from_lambda(b), 4)[0]


def test_iterative_search_converges_for_qubit_qutrit():
    cfg = bu.SearchConfig(seed=0, require_2unitary=False)
    info = {}
    v = bu.iterative_search(cfg, [2, 3], info=info)
    assert v is not None
    assert bu.is_biunimodular(v)[1] < 1e-8
    again = bu.iterative_search(cfg, [2, 3])
    assert np.array_equal(v.phases, again.phases)


def test_iterative_search_fixture_is_a_fixed_point():
    info = {}
    v = bu.iterative_search(bu.SearchConfig(), [2, 3], start=bu.fixture("lambda_23"), info=info)
    assert info["iterations"] == 0 and info["restarts"] == 0
    assert np.allclose(v.phases, bu.fixture("lambda_23").phases)


def test_iterative_search_three_qubits_two_unitary():
    cfg = bu.SearchConfig(seed=4, max_restarts=20, max_iterations=5000)
    v = bu.iterative_search(cfg, [2, 2, 2])
    assert v is not None
    assert is_2unitary(gates.multiunitary_from_lambda(v), 8, tol=1e-9)[0]


def test_iterative_search_two_qubits_two_unitary():
    v = bu.iterative_search(bu.SearchConfig(seed=1), [2, 2])
    assert v is not None and is_2unitary(gates.multiunitary_from_lambda(v), 4, tol=1e-9)[0]


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_accepted_gaps_never_increase(seed):
    trace = []
    bu.iterative_search(bu.SearchConfig(seed=seed, require_2unitary=False, max_iterations=3000), [2, 3], trace=trace)
    assert len(trace) > 1
    assert all(b <= a for a, b in zip(trace, trace[1:]))


def test_iterative_search_budget_exhausted():
    cfg = bu.SearchConfig(seed=0, max_iterations=3, max_restarts=2)
    info = {}
    assert bu.iterative_search(cfg, [2, 3], info=info) is None
    assert info["restarts"] == 2


def test_twisted_projection_rejects_qutrits():
    with pytest.raises(ValueError):
        bu.iterative_search(bu.SearchConfig(enforce_gamma=True), [2, 3])
