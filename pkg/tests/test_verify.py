import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import unitary_group

from amekit import circuits, gates, verify
from amekit.biunimodular import fixture, fixture_ansatz
from amekit.circuits import ghz, haar_random, operator_state
from amekit.linalg import DimensionError, StateVector, kron
from amekit.noise import depolarize


def _fixture_gate(name):
    lam = fixture(name)
    return gates.multiunitary_from_lambda(lam, ansatz=fixture_ansatz(name)), lam.d


def _swap(d):
    return np.eye(d * d)[[(i % d) * d + i // d for i in range(d * d)]]


def _gf_gate(q):
    return circuits.minimal_support_unitary(circuits.gf_latin_square(q, 1), circuits.gf_latin_square(q, 2))


# uniformity and AME checks

def test_balanced_cuts():
    assert verify.balanced_cuts(4) == [(0, 1), (0, 2), (0, 3)]
    assert len(verify.balanced_cuts(5)) == 10
    assert len(verify.balanced_cuts(6)) == 10


def test_zero_state_is_only_zero_uniform():
    v = StateVector.basis((3,) * 4)
    assert verify.is_k_uniform(v, 0)
    assert not verify.is_k_uniform(v, 1)
    assert verify.uniformity(v) == 0
    report = verify.is_ame(v)
    assert not report.verdict
    assert all(abs(s) < 1e-12 for s in report.entropies.values())


def test_ghz_is_one_but_not_two_uniform():
    g = ghz(4, 6)
    assert verify.is_k_uniform(g, 1) and not verify.is_k_uniform(g, 2)
    assert verify.uniformity(g) == 1
    assert all(abs(s - 1) < 1e-9 for s in verify.is_ame(g).entropies.values())


def test_mixed_radix_ame_needs_grouping():
    c = circuits.build_named("ame46_mixed")
    v = circuits.simulate(c)
    with pytest.raises(DimensionError):
        verify.is_ame(v)
    report = verify.is_ame(v, groups=c.parties)
    assert report.verdict and report.d == 6 and report.n_parties == 4
    assert all(abs(s - 2) < 1e-9 for s in report.entropies.values())


def test_report_serializes():
    data = json.loads(json.dumps(verify.is_ame(circuits.named_state("ame44_f4")).to_dict()))
    assert data["ame"] is True and set(data["entropies"]) == {"12", "13", "14"}


def test_uniformity_of_ame_state():
    assert verify.uniformity(verify.ideal_ame_state(5)) == 2


# 2-unitarity

@pytest.mark.parametrize("name", ["lambda_22", "lambda_23", "lambda_222", "lambda_4"])
def test_fixture_gates_pass(name):
    u, d = _fixture_gate(name)
    ok, res = verify.is_2unitary(u, d, tol=1e-9)
    assert ok and len(res) == 3


def test_swap_and_identity_fail():
    # SWAP reshuffles to a permutation but its partial transpose is rank one
    ok, res = verify.is_2unitary(_swap(2), 2)
    assert not ok and res[0] < 1e-12 and res[1] < 1e-12 and res[2] > 1
    ok, res = verify.is_2unitary(np.eye(9), 3)
    assert not ok and res[1] > 1


def test_is_2unitary_shape_error():
    with pytest.raises(DimensionError):
        verify.is_2unitary(np.eye(8), 3)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_operator_state_ame_iff_two_unitary(d):
    rng = np.random.default_rng(d)
    gates_ = [unitary_group.rvs(d * d, random_state=rng) for _ in range(3)] + [_swap(d), np.eye(d * d)]
    if d == 3:
        gates_.append(_gf_gate(3))
    if d == 4:
        gates_.append(_fixture_gate("lambda_22")[0])
        gates_.append(_gf_gate(4))
    for u in gates_:
        assert verify.is_2unitary(u, d, tol=1e-9)[0] == verify.is_ame(operator_state(u, d)).verdict
    assert any(verify.is_2unitary(u, d, tol=1e-9)[0] for u in gates_) == (d > 2)


# LU invariants

@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_identity_moment_is_d4(d):
    assert verify.lu_invariant_moment(np.eye(d * d), d, 2) == d**4
    assert verify.lu_invariant_moment(np.eye(d * d), d, 4) == d**4


@pytest.mark.parametrize("d", [2, 3])
def test_matrix_free_matches_dense_operator(d):
    u = unitary_group.rvs(d * d, random_state=np.random.default_rng(7))
    dense = verify.invariant_operator(u, d)
    for k in (1, 2, 4):
        expected = np.trace(np.linalg.matrix_power(dense, k))
        assert abs(verify.lu_invariant_moment(u, d, k) - expected) < 1e-9
    assert abs(verify.lu_invariant_moment(u, d, 2, block=7) - verify.lu_invariant_moment(u, d, 2)) < 1e-10


def test_identity_invariant_operator_is_identity():
    assert np.allclose(verify.invariant_operator(np.eye(9), 3), np.eye(81))


def test_table_value_qubit_pair():
    u, d = _fixture_gate("lambda_22")
    m = verify.lu_invariant_moment(u, d, 2)
    assert abs(m.real - 64) < 1e-4 and abs(m.imag) < 1e-6


def test_gf4_minimal_support_value():
    assert abs(verify.lu_invariant_moment(_gf_gate(4), 4, 2) - 256) < 1e-4


def test_moment_is_bitwise_stable():
    u, d = _fixture_gate("lambda_23")
    assert verify.lu_invariant_moment(u, d, 2) == verify.lu_invariant_moment(u, d, 2)


def test_moment_errors():
    with pytest.raises(DimensionError):
        verify.lu_invariant_moment(np.eye(8), 3)
    with pytest.raises(ValueError):
        verify.lu_invariant_moment(np.eye(9), 3, 0)


@pytest.mark.parametrize("d", [3, 4])
def test_lu_invariance_property(d):
    rng = np.random.default_rng(100 + d)
    u = unitary_group.rvs(d * d, random_state=rng)
    base = verify.lu_invariant_moment(u, d, 2)
    for _ in range(100 if d == 3 else 20):
        u1, u2, v1, v2 = (unitary_group.rvs(d, random_state=rng) for _ in range(4))
        w = kron(u1, u2) @ u @ kron(v1, v2)
        assert abs(verify.lu_invariant_moment(w, d, 2) - base) < 1e-8


def test_lu_distinguish():
    u, d = _fixture_gate("lambda_22")
    assert verify.lu_distinguish(u, _gf_gate(4), d) == "distinct"
    assert verify.lu_distinguish(u, u, d) == "inconclusive"
    rng = np.random.default_rng(3)
    local = kron(*(unitary_group.rvs(4, random_state=rng) for _ in range(2)))
    assert verify.lu_distinguish(u, local @ u, d) == "inconclusive"
    with pytest.raises(DimensionError):
        verify.lu_distinguish(u, np.eye(9), d)


def test_fixture_moments_are_real():
    for name in ("lambda_22", "lambda_23", "lambda_4"):
        u, d = _fixture_gate(name)
        assert abs(verify.lu_invariant_moment(u, d, 2).imag) < 1e-6


# fidelity thresholds

@pytest.mark.parametrize("d", [3, 4, 5, 6, 7, 8])
def test_threshold_is_d_minus_one_over_d(d):
    assert abs(verify.gme_fidelity_threshold(d) - (d - 1) / d) < 1e-12


def test_threshold_rejects_qubits():
    with pytest.raises(ValueError):
        verify.gme_fidelity_threshold(2)
    with pytest.raises(ValueError):
        verify.ideal_ame_state(2)


def test_unrestricted_pattern_gives_one():
    v = verify.ideal_ame_state(6)
    assert verify.f_max_bounded_pattern(v, (6, 6, 6, 6)) == 1.0


def test_pattern_errors():
    v = verify.ideal_ame_state(3)
    with pytest.raises(DimensionError):
        verify.f_max_bounded_pattern(v, (3, 3, 2))
    with pytest.raises(ValueError):
        verify.f_max_bounded_pattern(v, (3, 3, 3, 0))


def test_grouped_pattern():
    c = circuits.build_named("ame46_mixed")
    v = circuits.simulate(c)
    assert abs(verify.f_max_bounded_pattern(v, (6, 6, 6, 5), groups=c.parties) - 5 / 6) < 1e-12


@given(st.integers(0, 2**31 - 1), st.lists(st.integers(1, 3), min_size=4, max_size=4), st.integers(0, 3))
@settings(max_examples=40, deadline=None)
def test_f_max_monotone_in_caps(seed, caps, which):
    v = haar_random((3,) * 4, seed=seed % 5000)
    raised = list(caps)
    raised[which] = min(3, raised[which] + 1)
    assert verify.f_max_bounded_pattern(v, caps) <= verify.f_max_bounded_pattern(v, raised) + 1e-12


def test_certify_pure_ame_state():
    v = verify.ideal_ame_state(6)
    rho = depolarize(np.outer(v.amplitudes, v.amplitudes.conj()), 0.0)
    report = verify.certify_gme(rho, v, 6)
    assert abs(report.f_exp - 1) < 1e-12 and report.certified
    assert abs(report.f_max - 5 / 6) < 1e-12


def test_certify_scalar_fidelity():
    v = verify.ideal_ame_state(6)
    report = verify.certify_gme(0.80, v, 6)
    assert not report.certified and report.to_dict()["f_exp"] == 0.80
    assert verify.certify_gme(0.84, v, 6).certified
    with pytest.raises(ValueError):
        verify.certify_gme(1.5, v, 6)
    with pytest.raises(DimensionError):
        verify.certify_gme(0.9, v, 4)


@pytest.mark.parametrize("d", [3, 4, 6])
def test_certification_boundary(d):
    g = verify.certification_boundary(d)
    assert abs((1 - g) + g / d**4 - (d - 1) / d) < 1e-12
    v = verify.ideal_ame_state(d)
    pure = np.outer(v.amplitudes, v.amplitudes.conj())
    assert verify.certify_gme(depolarize(pure, g - 1e-6), v, d).certified
    assert not verify.certify_gme(depolarize(pure, g + 1e-6), v, d).certified
