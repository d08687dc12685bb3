import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from erasekit.qcore import (
    CircuitDescription,
    QuantumState,
    apply_circuit,
    circuit_unitary,
    fidelity,
)
from erasekit.stabsim import (
    IncompleteLearningError,
    PauliString,
    Tableau,
    _canonical_key,
    bell_sample,
    bell_sampling_learn,
    clifford_table,
    complete_tableau,
    count_stabilizer_states,
    enumerate_stabilizer_states,
    random_clifford,
    random_clifford_tableau,
    random_stabilizer_state,
    symplectic_product,
    synthesize,
)
from util import random_circuit

seeds = st.integers(0, 2**32 - 1)


# Pauli algebra -------------------------------------------------------------------


def test_pauli_labels_and_products():
    x, y, z = (PauliString.from_label(c) for c in "XYZ")
    assert (x * z).label() == "-iY"
    assert (z * x).label() == "+iY"
    assert (x * y).label() == "+iZ"
    assert not x.commutes(z)
    assert PauliString.from_label("XX").commutes(PauliString.from_label("ZZ"))


@given(seed=seeds)
def test_pauli_product_matches_dense(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    a, b = (PauliString.from_bits(rng.integers(0, 2, 2 * n), int(rng.integers(2))) for _ in range(2))
    vec = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    np.testing.assert_allclose((a * b).apply(vec), a.apply(b.apply(vec)), atol=1e-12)
    assert symplectic_product(a.bits, b.bits) == (0 if a.commutes(b) else 1)


# tableau ----------------------------------------------------------------------------


def test_identity_tableau_is_zero_state():
    t = Tableau.identity(3)
    assert [p.label() for p in t.stabilizers()] == ["+ZII", "+IZI", "+IIZ"]
    assert t.is_valid()
    np.testing.assert_allclose(t.to_statevector(), np.eye(8)[0])


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_tableau_agrees_with_dense(n):
    rng = np.random.default_rng(n)
    for _ in range(10):
        circ = random_circuit(n, 40, rng, clifford_only=True)
        t = Tableau.identity(n).apply_circuit(circ)
        dense = apply_circuit(QuantumState.zero(n), circ)
        got = QuantumState.from_vector(t.to_statevector())
        assert fidelity(got, dense) == pytest.approx(1.0, abs=1e-9)


@given(seed=seeds)
def test_tableau_vs_dense_fidelity_property(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    circ = random_circuit(n, 30, rng, clifford_only=True)
    t = Tableau.from_circuit(circ)
    assert t.is_valid()
    dense = apply_circuit(QuantumState.zero(n), circ)
    assert fidelity(QuantumState.from_vector(t.to_statevector()), dense) > 1 - 1e-9


def test_tableau_stabilizes_its_state(rng):
    t = random_clifford_tableau(4, rng)
    vec = t.to_statevector()
    for p in t.stabilizers():
        np.testing.assert_allclose(p.apply(vec), vec, atol=1e-10)


def test_tableau_json_round_trip(rng):
    t = random_clifford_tableau(5, rng)
    assert Tableau.from_json(t.to_json()) == t


def test_synthesis_reproduces_tableau_and_unitary(rng):
    for n in (1, 2, 3, 4):
        t = random_clifford_tableau(n, rng)
        circ = synthesize(t)
        assert {i.name for i in circ.instructions} <= {"h", "s", "cnot"}
        assert Tableau.from_circuit(circ) == t
        u = circuit_unitary(circ)
        ref = t.to_unitary()
        k = np.argmax(np.abs(ref))
        phase = u.flat[k] / ref.flat[k]
        np.testing.assert_allclose(u, phase * ref, atol=1e-9)


# random Cliffords -----------------------------------------------------------------------


def test_clifford_group_orders():
    # |C_n / U(1)| = 2^{n^2 + 2n} prod (4^j - 1)
    for n in (1, 2):
        order = 2 ** (n * n + 2 * n) * math.prod(4**j - 1 for j in range(1, n + 1))
        assert len(clifford_table(n)) == order
    assert len(clifford_table(1)) == 24


def test_single_qubit_cliffords_are_uniform():
    keys = {_canonical_key(u): i for i, u in enumerate(clifford_table(1))}
    counts = np.zeros(24)
    trials = 10_000
    for seed in range(trials):
        counts[keys[_canonical_key(circuit_unitary(random_clifford(1, seed)))]] += 1
    p = 1 / 24
    sigma = math.sqrt(p * (1 - p) / trials)
    assert np.all(np.abs(counts / trials - p) <= 3 * sigma)
    chi2 = float(np.sum((counts - trials * p) ** 2 / (trials * p)))
    assert chi2 < 49.7  # 0.999 quantile, 23 degrees of freedom


def test_random_clifford_is_deterministic():
    assert random_clifford(1, 5).to_json() == random_clifford(1, 5).to_json()
    assert random_clifford(3, 5).to_json() == random_clifford(3, 5).to_json()


def test_random_clifford_preserves_stabilizer_states():
    states = enumerate_stabilizer_states(2)
    lookup = {_canonical_key(v) for v in states}
    for seed in range(20):
        u = circuit_unitary(random_clifford(2, seed))
        for v in states[:10]:
            assert _canonical_key(u @ v) in lookup


def test_random_clifford_range():
    with pytest.raises(ValueError):
        random_clifford(0, 1)
    with pytest.raises(ValueError):
        random_clifford(17, 1)


# counting ---------------------------------------------------------------------------------


def test_stabilizer_counts():
    assert len(enumerate_stabilizer_states(1)) == count_stabilizer_states(1) == 6
    assert len(enumerate_stabilizer_states(2)) == count_stabilizer_states(2) == 60
    assert len(enumerate_stabilizer_states(3)) == count_stabilizer_states(3) == 1080
    assert count_stabilizer_states(4) == 36720


def test_stabilizer_count_is_quadratic():
    for n in range(2, 15):
        ratio = math.log2(count_stabilizer_states(n)) / n**2
        assert 0.4 <= ratio <= 1.6


# Bell sampling ------------------------------------------------------------------------------


def _learn(state, n, seed, budget=None):
    return bell_sampling_learn(lambda: state, n, budget=budget, seed=seed)


def test_bell_learn_zero_state():
    circ = _learn(QuantumState.zero(3), 3, seed=1)
    out = apply_circuit(QuantumState.zero(3), circ)
    assert fidelity(out, QuantumState.zero(3)) == pytest.approx(1.0, abs=1e-9)


def test_bell_learn_bell_pair():
    bell = QuantumState.from_vector(np.array([1, 0, 0, 1]) / np.sqrt(2))
    circ = _learn(bell, 2, seed=2)
    t = Tableau.from_circuit(circ)
    group = {p.label() for p in t.stabilizers()}
    xx, zz = PauliString.from_label("XX"), PauliString.from_label("ZZ")
    for p in t.stabilizers():
        assert p.commutes(xx) and p.commutes(zz)
    assert fidelity(apply_circuit(QuantumState.zero(2), circ), bell) == pytest.approx(1.0, abs=1e-9)
    assert group <= {"+XX", "+ZZ", "-YY"}


def test_bell_learn_success_rate():
    rng = np.random.default_rng(7)
    wins = 0
    for trial in range(100):
        psi = random_stabilizer_state(4, rng)
        out = apply_circuit(QuantumState.zero(4), _learn(psi, 4, seed=trial))
        wins += fidelity(out, psi) > 1 - 1e-9
    assert wins >= 99


def test_bell_sums_lie_in_stabilizer_group(rng):
    t = random_clifford_tableau(3, rng)
    psi = QuantumState.from_vector(t.to_statevector())
    stabs = t.stabilizers()
    first = bell_sample(psi, psi, rng)
    for _ in range(20):
        p = PauliString.from_bits(bell_sample(psi, psi, rng) ^ first)
        assert all(p.commutes(g) for g in stabs)


def test_bell_learn_reports_incomplete_budget():
    with pytest.raises(IncompleteLearningError) as info:
        _learn(QuantumState.zero(3), 3, seed=0, budget=80)
    assert isinstance(info.value.partial_generators, list)


def test_complete_tableau_rejects_anticommuting():
    with pytest.raises(ValueError):
        complete_tableau([PauliString.from_label("XI"), PauliString.from_label("ZI")])
