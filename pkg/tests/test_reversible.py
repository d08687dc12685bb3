import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from erasekit.learners import (
    CircuitLearner,
    basis_learner,
    coin_learner,
    xz_shadow_learner,
)
from erasekit.qcore import (
    CircuitDescription,
    Coin,
    Measure,
    QuantumState,
    QubitLayout,
    apply_circuit,
    circuit_unitary,
    product,
    trace_distance,
)
from erasekit.reversible import (
    AncillaBudgetError,
    IncompleteFamilyError,
    MEMORY_COPY,
    _lifted_input,
    apply_lifted,
    coherent_coin,
    coherent_measure,
    copy_out,
    extract_coefficients,
    lift,
    memory_distribution,
    uncompute,
)
from util import random_pure, random_unitary

SQ = 1 / np.sqrt(2)
ZERO, ONE = QuantumState.zero(1), QuantumState.basis(1, 1)
PLUS = QuantumState.from_vector([SQ, SQ])
H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)


def _is_unitary(circ, tol=1e-10):
    u = circuit_unitary(circ)
    return np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=tol)


def xz_exact_distribution(states, truth, s):
    """Prediction distribution of the X/Z shadow learner by enumerating every branch."""
    learner = xz_shadow_learner(states, s)
    dist = np.zeros(len(states))
    psi = states[truth].vector
    for bases in itertools.product((0, 1), repeat=s):
        amps = [(H if a else np.eye(2)) @ psi for a in bases]
        for outs in itertools.product((0, 1), repeat=s):
            p = 0.5**s * math.prod(abs(amps[j][outs[j]]) ** 2 for j in range(s))
            bits = {}
            for j in range(s):
                bits[f"a{j}"], bits[f"b{j}"] = bases[j], outs[j]
            dist[learner.decoder(bits)] += p
    return dist


# coherent measurement ---------------------------------------------------------------------------


def test_coherent_basis_measurement_is_cnot():
    lay = QubitLayout.of(("T", 1), ("A", 1))
    circ = coherent_measure([np.diag([1, 0]), np.diag([0, 1])], [0], [1], lay)
    assert [(g.name, g.controls, g.targets) for g in circ.instructions] == [("cnot", (0,), (1,))]


def test_coherent_coin_branches():
    lay = QubitLayout.of(("P", 1), ("A", 1))
    out = apply_circuit(QuantumState.zero(lay), coherent_coin(0, 1, lay))
    np.testing.assert_allclose(np.abs(out.vector), [SQ, 0, 0, SQ], atol=1e-12)


def test_coherent_measure_random_projectors(rng):
    u = random_unitary(4, rng)
    p0 = u[:, :2] @ u[:, :2].conj().T
    p1 = np.eye(4) - p0
    lay = QubitLayout.of(("T", 2), ("A", 1))
    circ = coherent_measure([p0, p1], [0, 1], [2], lay)
    assert _is_unitary(circ)
    psi = random_pure(2, rng, QubitLayout.of(("T", 2)))
    out = apply_circuit(product(psi, QuantumState.zero(QubitLayout.of(("A", 1)))), circ)
    want = np.concatenate([p0 @ psi.vector, p1 @ psi.vector])
    np.testing.assert_allclose(out.vector, want, atol=1e-10)


def test_coherent_measure_rejects_bad_families():
    lay = QubitLayout.of(("T", 1), ("A", 1))
    with pytest.raises(IncompleteFamilyError):
        coherent_measure([np.diag([1, 0])], [0], [1], lay)
    with pytest.raises(IncompleteFamilyError):
        coherent_measure([np.diag([1, 0]), PLUS.density()], [0], [1], lay)


# lifting ---------------------------------------------------------------------------------------------


def test_lift_measurement_free_learner():
    circ = CircuitDescription(QubitLayout.of(("S", 1))).h(0).s(0)
    learner = CircuitLearner([ZERO, ONE], 1, circ, lambda bits: 1, [])
    lifted = lift(learner)
    names = [g.name for g in lifted.circuit.instructions]
    assert names == ["h", "s", "x"]
    assert lifted.ancilla_count == 0


def test_lift_basis_learner_is_single_cnot():
    lifted = lift(basis_learner())
    gates = [(g.name, g.controls, g.targets) for g in lifted.circuit.instructions]
    assert gates == [("cnot", (0,), (1,))]
    assert lifted.layout.to_list() == [["S", 1], ["M", 1], ["A", 0]]
    np.testing.assert_allclose(extract_coefficients(lifted, [ZERO, ONE]).magnitudes, np.eye(2))


def test_lift_coin_learner(rng):
    states = [random_pure(1, rng), random_pure(1, rng)]
    lifted = lift(coin_learner(states))
    assert _is_unitary(lifted.circuit)
    c = extract_coefficients(lifted, states)
    np.testing.assert_allclose(c.magnitudes, np.full((2, 2), SQ), atol=1e-12)


def test_lift_has_no_stochastic_instructions():
    lifted = lift(xz_shadow_learner([ZERO, PLUS], 3))
    assert lifted.circuit.is_unitary
    assert not any(isinstance(i, (Measure, Coin)) for i in lifted.circuit.instructions)
    assert _is_unitary(lifted.circuit, 1e-9)


def test_lift_reports_required_ancillas():
    with pytest.raises(AncillaBudgetError) as info:
        lift(xz_shadow_learner([ZERO, PLUS], 4), ancilla_budget=2)
    assert info.value.required == 4
    with pytest.raises(AncillaBudgetError):
        lift(xz_shadow_learner([ZERO, PLUS], 8))  # 8 + 1 + 8 > 16


def test_lifted_json_manifest():
    import json

    lifted = lift(xz_shadow_learner([ZERO, PLUS], 2))
    obj = json.loads(lifted.to_json())
    assert obj["manifest"]["registers"] == [["S", 2], ["M", 1], ["A", 2]]
    assert obj["manifest"]["ancilla_map"] == {"a0": 3, "b0": 0, "a1": 4, "b1": 1}
    assert obj["circuit"]["n"] == 5


# coefficients ---------------------------------------------------------------------------------------------


def test_xz_lift_matches_branch_enumeration():
    states = [ZERO, PLUS]
    lifted = lift(xz_shadow_learner(states, 4))
    c = extract_coefficients(lifted, states, 4)
    for x in range(2):
        np.testing.assert_allclose(c.probabilities[x], xz_exact_distribution(states, x, 4), atol=1e-10)
    # frozen from the enumeration oracle above
    np.testing.assert_allclose(np.diag(c.probabilities), [0.94921875, 0.73828125], atol=1e-10)


@given(seed=st.integers(0, 2**32 - 1), s=st.integers(1, 3))
def test_coefficient_rows_are_normalised(seed, s):
    rng = np.random.default_rng(seed)
    states = [random_pure(1, rng) for _ in range(3)]
    vecs = [st_.vector.real.astype(complex) for st_ in states]
    states = [QuantumState.from_vector(v / np.linalg.norm(v)) for v in vecs]
    c = extract_coefficients(lift(xz_shadow_learner(states, s)), states)
    np.testing.assert_allclose(c.row_norms, np.ones(3), atol=1e-9)


def test_deferred_measurement_equivalence():
    states = [ZERO, PLUS]
    learner = xz_shadow_learner(states, 4)
    exact = extract_coefficients(lift(learner), states).probabilities
    runs = 10_000
    for x in range(2):
        hits = sum(learner.predict([states[x]] * 4, seed) == 1 for seed in range(runs))
        p = exact[x, 1]
        assert abs(hits / runs - p) <= 3 * math.sqrt(p * (1 - p) / runs)


# copy-out and uncompute --------------------------------------------------------------------------------


def _two_regs(vec_m):
    lay = QubitLayout.of(("M", 1), (MEMORY_COPY, 1))
    return QuantumState.from_vector(np.kron([1, 0], vec_m), lay)


def test_copy_out_basis_state():
    out = copy_out(_two_regs(np.array([0, 1])))
    np.testing.assert_allclose(out.vector, [0, 0, 0, 1])


def test_copy_out_superposition_entangles():
    a, b = 0.6, 0.8
    out = copy_out(_two_regs(np.array([a, b])))
    np.testing.assert_allclose(out.vector, [a, 0, 0, b])


def test_copy_out_checks_destination():
    lay = QubitLayout.of(("M", 1), (MEMORY_COPY, 1))
    with pytest.raises(ValueError):
        copy_out(QuantumState.basis(lay, {MEMORY_COPY: 1}))
    copy_out(QuantumState.basis(lay, {MEMORY_COPY: 1}), debug=False)


def _pipeline_state(lifted, psi):
    start = _lifted_input(lifted, psi)
    width = lifted.layout.size("M")
    return product(start, QuantumState.zero(QubitLayout.of((MEMORY_COPY, width))))


def test_uncompute_without_copy_out_is_identity(rng):
    lifted = lift(xz_shadow_learner([ZERO, PLUS], 3))
    start = _pipeline_state(lifted, PLUS)
    back = uncompute(apply_lifted(start, lifted), lifted)
    assert abs(np.vdot(start.vector, back.vector)) ** 2 == pytest.approx(1.0, abs=1e-9)


def test_pipeline_with_perfect_learner():
    lifted = lift(basis_learner())
    for x, psi in enumerate([ZERO, ONE]):
        st_ = copy_out(apply_lifted(_pipeline_state(lifted, psi), lifted))
        out = uncompute(st_, lifted)
        want = QuantumState.basis(out.layout, {"S": x, MEMORY_COPY: x})
        assert abs(np.vdot(want.vector, out.vector)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("truth", [0, 1])
def test_uncompute_overlap_is_diagonal_coefficient(truth):
    states = [ZERO, PLUS]
    lifted = lift(xz_shadow_learner(states, 4))
    c = extract_coefficients(lifted, states)
    start = _pipeline_state(lifted, states[truth])
    out = uncompute(copy_out(apply_lifted(start, lifted)), lifted)
    ideal = QuantumState.from_vector(
        np.kron(QuantumState.basis(1, truth).vector,
                _lifted_input(lifted, states[truth]).vector), out.layout)
    overlap = abs(np.vdot(ideal.vector, out.vector))
    assert overlap == pytest.approx(c.probabilities[truth, truth], abs=1e-8)
    assert trace_distance(out, ideal) == pytest.approx(
        math.sqrt(1 - c.probabilities[truth, truth] ** 2), abs=1e-8)


def test_memory_distribution_of_lifted_output():
    lifted = lift(basis_learner())
    out = apply_lifted(_lifted_input(lifted, ONE), lifted)
    np.testing.assert_allclose(memory_distribution(out), [0, 1])
