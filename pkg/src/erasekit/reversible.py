"""Deferred-measurement lifting of learners, copy-out and uncomputation.

A lifted learner is a unitary over registers ``S`` (the copies), optionally
``W`` (work qubits of the original circuit), ``M`` (the prediction, zero-based
binary, ``ceil(log2 m)`` qubits) and ``A`` (ancillas standing in for coins and
measurement records).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .learners import CircuitLearner
from .qcore import (
    MAX_PURE_QUBITS,
    CapExceededError,
    CircuitDescription,
    Coin,
    DimensionMismatchError,
    Gate,
    Measure,
    QuantumState,
    QubitLayout,
    apply_circuit,
    copies as tensor_copies,
    embed_circuit,
    product,
    register_zero_probability,
)

PROJECTOR_TOL = 1e-10
BRANCH_FLOOR = 1e-12
MEMORY_COPY = "Mp"


class AncillaBudgetError(ValueError):
    def __init__(self, message: str, required: int):
        super().__init__(message)
        self.required = required


class IncompleteFamilyError(ValueError):
    pass


def memory_width(m: int) -> int:
    return math.ceil(math.log2(m)) if m > 1 else 0


# ---------------------------------------------------------------------------
# coherent measurement


def _shift_perm(dim: int, a: int) -> np.ndarray:
    perm = np.zeros((dim, dim))
    for b in range(dim):
        perm[b ^ a, b] = 1.0
    return perm


def coherent_measure(projectors: Sequence[np.ndarray], targets: Sequence[int],
                     ancillas: Sequence[int], layout) -> CircuitDescription:
    """Unitary with ``U |psi>|0> = sum_a P_a |psi> |a>`` on the ancilla wires."""
    projs = [np.asarray(p, dtype=np.complex128) for p in projectors]
    d = 1 << len(targets)
    if any(p.shape != (d, d) for p in projs):
        raise DimensionMismatchError("projector dimension does not match the target wires")
    if len(projs) > (1 << len(ancillas)):
        raise ValueError("not enough ancilla wires to record every outcome")
    if not np.allclose(sum(projs), np.eye(d), atol=PROJECTOR_TOL):
        raise IncompleteFamilyError("projectors do not sum to the identity")
    for i, p in enumerate(projs):
        for j, q in enumerate(projs):
            want = p if i == j else np.zeros_like(p)
            if not np.allclose(p @ q, want, atol=PROJECTOR_TOL):
                raise IncompleteFamilyError("projectors are not pairwise orthogonal")
    circ = CircuitDescription(layout)
    if len(targets) == 1 and len(ancillas) == 1 and len(projs) == 2 and \
            np.allclose(projs[1], np.diag([0, 1]), atol=PROJECTOR_TOL):
        return circ.cnot(targets[0], ancillas[0])
    da = 1 << len(ancillas)
    full = sum(np.kron(_shift_perm(da, a), p) for a, p in enumerate(projs))
    return circ.unitary(full, tuple(targets) + tuple(ancillas))


def coherent_coin(plus_wire: int, record_wire: int, layout) -> CircuitDescription:
    """Fair coin as ``|+>`` followed by a coherent computational measurement."""
    return CircuitDescription(layout).h(plus_wire).cnot(plus_wire, record_wire)


# ---------------------------------------------------------------------------
# lifting


@dataclass
class LiftedLearner:
    circuit: CircuitDescription
    m: int
    s: int
    n: int
    ancilla_map: dict = field(default_factory=dict)
    ancilla_budget: int | None = None

    @property
    def layout(self) -> QubitLayout:
        return self.circuit.layout

    @property
    def ancilla_count(self) -> int:
        return self.layout.size("A")

    def manifest(self) -> dict:
        return {"registers": self.layout.to_list(), "m": self.m, "s": self.s, "n": self.n,
                "ancilla_map": {str(k): v for k, v in self.ancilla_map.items()}}

    def to_json(self) -> str:
        return json.dumps({"manifest": self.manifest(), "circuit": self.circuit.to_dict()})


def _measured_in_place(instructions, idx: int, wire: int) -> bool:
    for later in instructions[idx + 1:]:
        if isinstance(later, Measure) and later.target == wire:
            return False
        if isinstance(later, Gate) and wire in later.targets:
            return False
    return True


def lift(learner: CircuitLearner, m: int | None = None, s: int | None = None,
         ancilla_budget: int | None = None, max_qubits: int = MAX_PURE_QUBITS) -> LiftedLearner:
    """Replace coins, measurements and classical control by unitary gates.

    A coin becomes H on a fresh ancilla.  A measurement becomes a CNOT onto a
    fresh ancilla, or is read off the measured wire itself when nothing later
    disturbs it.  Classical conditions turn into quantum controls on the
    recording wires, and the decoder's truth table is written into ``M`` with
    one multi-controlled X for each pattern and set bit.
    """
    m = learner.m if m is None else m
    s = learner.s if s is None else s
    src = learner.circuit
    inst = src.instructions
    needs = sum(1 for i, ins in enumerate(inst)
                if isinstance(ins, Coin)
                or (isinstance(ins, Measure) and not _measured_in_place(inst, i, ins.target)))
    width = memory_width(m)
    total = src.layout.total_qubits + width + needs
    if ancilla_budget is not None and needs > ancilla_budget:
        raise AncillaBudgetError(
            f"lifting needs {needs} ancillas, budget is {ancilla_budget}", needs)
    if total > max_qubits:
        raise AncillaBudgetError(
            f"lifted learner needs {total} qubits ({needs} ancillas), cap is {max_qubits}", needs)
    layout = src.layout.concat(QubitLayout.of(("M", width), ("A", needs)))
    m_off, a_off = layout.offset("M"), layout.offset("A")
    circ = CircuitDescription(layout)
    wires: dict = {}
    next_a = a_off
    for i, ins in enumerate(inst):
        if isinstance(ins, Coin):
            wires[ins.cbit] = next_a
            circ.h(next_a)
            next_a += 1
        elif isinstance(ins, Measure):
            if _measured_in_place(inst, i, ins.target):
                wires[ins.cbit] = ins.target
            else:
                wires[ins.cbit] = next_a
                circ.cnot(ins.target, next_a)
                next_a += 1
        else:
            controls, values = list(ins.controls), list(ins.control_values)
            fires = True
            for bit, val in ins.cbits:
                w = wires[bit]
                if w in ins.targets:
                    raise ValueError("a gate cannot be conditioned on its own target")
                if w in controls:
                    fires = fires and values[controls.index(w)] == val
                    continue
                controls.append(w)
                values.append(val)
            if fires:
                circ.append(Gate(ins.name if ins.name not in ("cnot", "cx", "cz") or not ins.cbits
                                 else {"cnot": "x", "cx": "x", "cz": "z"}[ins.name],
                                 ins.targets, tuple(controls), tuple(values), (), ins.matrix))
    cbits = list(learner.cbits)
    ctrl = tuple(wires[b] for b in cbits)
    for pattern in range(1 << len(cbits)):
        bits = {b: (pattern >> j) & 1 for j, b in enumerate(cbits)}
        pred = int(learner.decoder(bits))
        if not 0 <= pred < max(m, 1):
            raise ValueError(f"decoder produced {pred}, outside 0..{m - 1}")
        vals = tuple(bits[b] for b in cbits)
        for j in range(width):
            if (pred >> j) & 1:
                if len(ctrl) == 1 and vals == (1,):
                    circ.cnot(ctrl[0], m_off + j)
                elif ctrl:
                    circ.gate("mcx", m_off + j, controls=ctrl, control_values=vals)
                else:
                    circ.x(m_off + j)
    return LiftedLearner(circ, m, s, learner.n, wires, ancilla_budget)


# ---------------------------------------------------------------------------
# coefficients, copy-out, uncompute


@dataclass(frozen=True)
class LearnerCoefficients:
    """Branch magnitudes ``|c_{x'|x}|`` (rows: truth, columns: prediction)."""

    magnitudes: np.ndarray

    @property
    def probabilities(self) -> np.ndarray:
        return self.magnitudes ** 2

    @property
    def row_norms(self) -> np.ndarray:
        return self.probabilities.sum(axis=1)

    @property
    def p_succ(self) -> float:
        return float(np.min(np.diag(self.probabilities)))


def _lifted_input(lifted: LiftedLearner, state: QuantumState) -> QuantumState:
    s_reg = tensor_copies(state, lifted.s, "S")
    rest = QubitLayout(lifted.layout.registers[1:])
    return product(s_reg, QuantumState.zero(rest))


def memory_distribution(out: QuantumState, name: str = "M") -> np.ndarray:
    probs = out.probabilities()
    off, width = out.layout.offset(name), out.layout.size(name)
    idx = (np.arange(probs.shape[0]) >> off) & ((1 << width) - 1)
    return np.bincount(idx, weights=probs, minlength=1 << width)


def extract_coefficients(lifted: LiftedLearner, states: Sequence[QuantumState],
                         s: int | None = None) -> LearnerCoefficients:
    if s is not None and s != lifted.s:
        raise ValueError("s does not match the lifted learner")
    if lifted.layout.total_qubits > MAX_PURE_QUBITS:
        raise CapExceededError("lifted learner exceeds the dense cap")
    m = len(states)
    rows = []
    for st in states:
        out = apply_circuit(_lifted_input(lifted, st), lifted.circuit)
        dist = memory_distribution(out)[:m]
        dist[dist < BRANCH_FLOOR ** 2] = 0.0
        rows.append(np.sqrt(dist / dist.sum()))
    return LearnerCoefficients(np.array(rows))


def copy_out(state: QuantumState, source: str = "M", dest: str = MEMORY_COPY,
             debug: bool = True) -> QuantumState:
    """Transversal CNOT fan-out from ``source`` into ``dest``."""
    layout = state.layout
    if layout.size(source) != layout.size(dest):
        raise DimensionMismatchError("copy-out registers must have equal width")
    if debug and register_zero_probability(state, [dest]) < 1.0 - 1e-9:
        raise ValueError(f"register {dest} is not in |0>")
    circ = CircuitDescription(layout)
    for a, b in zip(layout.qubits(source), layout.qubits(dest)):
        circ.cnot(a, b)
    return apply_circuit(state, circ)


def apply_lifted(state: QuantumState, lifted: LiftedLearner) -> QuantumState:
    return apply_circuit(state, embed_circuit(lifted.circuit, state.layout))


def uncompute(state: QuantumState, lifted: LiftedLearner) -> QuantumState:
    """Apply the inverse of the lifted learner to its registers in ``state``."""
    return apply_circuit(state, embed_circuit(lifted.circuit.inverse(), state.layout))
