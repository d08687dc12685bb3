"""Work accounting and the erasure protocols.

Work is booked in bits, one bit being ``k_B T ln 2``; joules appear only when
a report is rendered with a temperature.  Every erased memory qubit costs
exactly one bit in ``ideal`` mode.  ``finite`` mode replaces this with the
swap-chain value of a bath of ``|E|`` thermal qubits.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .learners import Learner
from .qcore import (
    MAX_DENSITY_QUBITS,
    MAX_PURE_QUBITS,
    CapExceededError,
    CircuitDescription,
    ProductState,
    QuantumState,
    QubitLayout,
    apply_circuit,
    numerical_rank,
    product,
    register_zero_probability,
    trace_distance,
    DEFAULT_RANK_TOL,
)
from .reversible import (
    MEMORY_COPY,
    LiftedLearner,
    apply_lifted,
    copy_out,
    extract_coefficients,
    memory_width,
    uncompute,
)

K_BOLTZMANN = 1.380649e-23
LN2 = math.log(2.0)
EXACT_TOL = 1e-6  # pure-state distances carry sqrt of rounding error


class RankAmbiguityError(ValueError):
    pass


class InsufficientCopiesError(ValueError):
    pass


class ErasureFailedError(RuntimeError):
    def __init__(self, message: str, report: "ErasureReport"):
        super().__init__(message)
        self.report = report


# ---------------------------------------------------------------------------
# bath and ledger


@dataclass(frozen=True)
class BathSpec:
    size: int = 10**6
    beta: float = 1.0

    def __post_init__(self):
        if int(self.size) < 2:
            raise ValueError("a bath needs at least two levels")
        if not self.beta > 0:
            raise ValueError("beta must be positive")

    def level(self, i: int) -> float:
        """Energy gap of the i-th bath qubit (1-based), ``(i-1)/sqrt|E|``."""
        return (i - 1) / math.sqrt(self.size)

    @property
    def top_level(self) -> float:
        return self.level(self.size)

    def excited_population(self, delta: float) -> float:
        e = math.exp(-self.beta * delta)
        return e / (1.0 + e)

    @property
    def residual(self) -> float:
        return self.excited_population(self.top_level)

    @property
    def log_residual(self) -> float:
        """Natural log of :attr:`residual`, finite where the residual underflows."""
        x = self.beta * self.top_level
        return -x - math.log1p(math.exp(-x))

    def work_bits(self) -> float:
        return self.beta * kernels.bath_work(int(self.size), float(self.beta)) / LN2


@dataclass(frozen=True)
class LedgerEntry:
    label: str
    bits: float
    direction: str = "cost"  # or "yield"

    @property
    def signed(self) -> float:
        return self.bits if self.direction == "cost" else -self.bits


@dataclass
class WorkLedger:
    entries: list[LedgerEntry] = field(default_factory=list)

    def cost(self, label: str, bits: float) -> None:
        self.entries.append(LedgerEntry(label, bits, "cost"))

    def credit(self, label: str, bits: float) -> None:
        self.entries.append(LedgerEntry(label, bits, "yield"))

    @property
    def cost_bits(self):
        return sum(e.bits for e in self.entries if e.direction == "cost")

    @property
    def yield_bits(self):
        return sum(e.bits for e in self.entries if e.direction == "yield")

    @property
    def total(self):
        """Net cost in bits (costs minus yields)."""
        return sum(e.signed for e in self.entries)

    def joules(self, temperature: float) -> float:
        return float(self.total) * K_BOLTZMANN * temperature * LN2

    def extend(self, other: "WorkLedger") -> None:
        self.entries.extend(other.entries)


@dataclass(frozen=True)
class EraseStep:
    state: np.ndarray
    work_bits: float
    residual: float


def single_qubit_erase(state, bath: BathSpec | None = None, mode: str = "ideal") -> EraseStep:
    """Reset one qubit against the bath; the cost does not depend on the input."""
    rho = state.density() if isinstance(state, QuantumState) else np.asarray(state, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError("single_qubit_erase takes a 2x2 density matrix")
    QuantumState.from_density(rho)  # validates
    if mode == "ideal":
        return EraseStep(np.diag([1.0, 0.0]).astype(complex), 1, 0.0)
    if mode != "finite":
        raise ValueError(f"unknown erasure mode {mode!r}")
    bath = bath or BathSpec()
    p = bath.residual
    return EraseStep(np.diag([1.0 - p, p]).astype(complex), bath.work_bits(), p)


# ---------------------------------------------------------------------------
# reports


@dataclass
class ErasureReport:
    protocol: str
    n: int
    N: int
    trace_distance: float
    ledger: WorkLedger
    ancilla_restored: bool
    error_bound: float
    m: int | None = None
    s: int | None = None
    mode: str = "ideal"
    p_succ_estimate: float | None = None
    final_state: object = None
    notes: list[str] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def success(self) -> bool:
        return self.trace_distance <= self.error_bound and self.ancilla_restored

    @property
    def work_bits(self):
        return self.ledger.total

    @property
    def total_qubits(self) -> int:
        return self.n * self.N

    def to_dict(self, temperature: float | None = None) -> dict:
        out = {
            "protocol": self.protocol, "n": self.n, "N": self.N, "m": self.m, "s": self.s,
            "mode": self.mode, "work_bits": self.work_bits,
            "work_joules": None if temperature is None else self.ledger.joules(temperature),
            "trace_distance": self.trace_distance,
            "p_succ_estimate": self.p_succ_estimate,
            "ancilla_restored": self.ancilla_restored,
            "success": self.success,
            "entries": [{"label": e.label, "bits": e.bits, "direction": e.direction}
                        for e in self.ledger.entries],
        }
        if self.notes:
            out["notes"] = list(self.notes)
        return out

    def to_json(self, temperature: float | None = None, **kw) -> str:
        return json.dumps(self.to_dict(temperature), **kw)

    def to_csv(self, temperature: float | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["protocol", "label", "direction", "bits"]
        if temperature is not None:
            header.append("joules")
        w.writerow(header)
        for e in self.ledger.entries:
            row = [self.protocol, e.label, e.direction, repr(e.bits)]
            if temperature is not None:
                row.append(repr(e.bits * K_BOLTZMANN * temperature * LN2))
            w.writerow(row)
        return buf.getvalue()


def _erase_register(ledger: WorkLedger, label: str, width: int, bath, mode: str) -> float:
    """Book ``width`` qubit erasures; returns the per-qubit residual."""
    residual = 0.0
    for j in range(width):
        step = single_qubit_erase(np.diag([0.5, 0.5]), bath, mode)
        ledger.cost(f"{label}[{j}]", step.work_bits)
        residual = step.residual
    return residual


# ---------------------------------------------------------------------------
# compress-to-erase


def _reset_qubits(rho: np.ndarray, qubits: Sequence[int], n: int, tau: np.ndarray) -> np.ndarray:
    t = rho.reshape((2,) * (2 * n))
    for q in qubits:
        row_ax, col_ax = n - 1 - q, 2 * n - 1 - q
        reduced = np.trace(t, axis1=row_ax, axis2=col_ax)
        # reinsert the qubit in state tau at the same axes
        t = np.multiply.outer(reduced, tau)
        order = list(range(reduced.ndim))
        order.insert(row_ax, reduced.ndim)
        order.insert(col_ax, reduced.ndim + 1)
        t = np.transpose(t, order)
    return t.reshape(rho.shape)


def check_rank_band(eigenvalues: np.ndarray, rank_tolerance: float) -> None:
    top = float(np.max(eigenvalues))
    cut = rank_tolerance * top
    near = eigenvalues[(eigenvalues > cut / 10.0) & (eigenvalues < cut * 10.0)]
    if near.size:
        raise RankAmbiguityError(
            f"eigenvalues {near.tolist()} lie within a factor 10 of the cutoff {cut:.3e}")


def compress_to_erase(state: QuantumState, rank_tolerance: float = DEFAULT_RANK_TOL,
                      bath: BathSpec | None = None, mode: str = "ideal") -> ErasureReport:
    """Rotate the eigenbasis onto ``|bin(i)>|0...0>`` and erase the low qubits."""
    n = state.n_qubits
    ledger = WorkLedger()
    if state.kind == "pure":
        # rank one: one reflection maps psi to |0>, nothing left to erase
        vec = state.vector
        phase = vec[0] / abs(vec[0]) if abs(vec[0]) > 0 else 1.0
        w = vec - phase * np.eye(1, vec.shape[0], 0, dtype=complex)[0]
        nw = np.linalg.norm(w)
        out = vec if nw < 1e-15 else vec - 2.0 * w * (np.vdot(w, vec) / nw**2)
        final = QuantumState.from_vector(out / np.linalg.norm(out), state.layout)
        td = trace_distance(final, QuantumState.zero(state.layout))
        return ErasureReport("compress", n, 1, td, ledger, True, EXACT_TOL, mode=mode,
                             final_state=final, diagnostics={"rank": 1})
    if n > MAX_DENSITY_QUBITS:
        raise CapExceededError("compress-to-erase needs a density matrix within the cap")
    rho = state.density()
    evals, evecs = np.linalg.eigh(rho)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    check_rank_band(evals, rank_tolerance)
    rank = numerical_rank(evals, rank_tolerance)
    width = math.ceil(math.log2(rank)) if rank > 1 else 0
    u = evecs.conj().T
    rotated = u @ rho @ u.conj().T
    tau = np.diag([1.0, 0.0]).astype(complex)
    residual = 0.0
    for j in range(width):
        step = single_qubit_erase(np.diag([0.5, 0.5]), bath, mode)
        ledger.cost(f"erase q[{j}]", step.work_bits)
        tau, residual = step.state, step.residual
    final_rho = _reset_qubits(rotated, range(width), n, tau)
    final = QuantumState(state.layout, "density", rho=final_rho)
    td = trace_distance(final, QuantumState.zero(state.layout))
    bound = EXACT_TOL if mode == "ideal" else width * residual + EXACT_TOL
    return ErasureReport("compress", n, 1, td, ledger, True, bound, mode=mode,
                         final_state=final, diagnostics={"rank": rank})


# ---------------------------------------------------------------------------
# classical erasure


def classical_erase(state: QuantumState, n: int, N: int, tolerance: float = 1e-9) -> ErasureReport:
    """Cancel copies 2..N against copy 1 with CNOTs, then erase copy 1."""
    if state.n_qubits != n * N:
        raise ValueError(f"expected {n * N} qubits for {N} copies of {n} bits")
    if state.kind == "density":
        rho = state.density()
        off = np.abs(rho).sum() - np.abs(np.diag(rho)).sum()
        if off > tolerance:
            raise ValueError("input is not classical (off-diagonal mass present)")
    else:
        vecs, _ = state.low_rank()
        for v in vecs:
            if np.sum(np.abs(v) > tolerance) != 1:
                raise ValueError("input is not classical (superposed amplitudes)")
    probs = state.probabilities()
    mask = (1 << n) - 1
    final_probs: dict[int, float] = {}
    for k in np.flatnonzero(probs > tolerance):
        k = int(k)
        first = k & mask
        out = 0
        for j in range(1, N):
            out |= (((k >> (j * n)) & mask) ^ first) << (j * n)
        final_probs[out] = final_probs.get(out, 0.0) + float(probs[k])
    ledger = WorkLedger()
    _erase_register(ledger, "copy1", n, None, "ideal")
    td = 1.0 - final_probs.get(0, 0.0)
    return ErasureReport("classical", n, N, max(td, 0.0), ledger, True, tolerance,
                         final_state=final_probs)


# ---------------------------------------------------------------------------
# learning to erase


def _ensure_copies(copies, n: int | None = None):
    if isinstance(copies, ProductState):
        return copies
    if isinstance(copies, tuple) and len(copies) == 2:
        return ProductState.copies(copies[0], copies[1])
    raise TypeError("copies must be a ProductState or a (state, N) pair")


def learning_to_erase(copies, learner: Learner, bath: BathSpec | None = None,
                      mode: str = "stochastic", seed: int = 0, work_mode: str = "ideal",
                      lifted: LiftedLearner | None = None, truth: int | None = None,
                      error_bound: float | None = None) -> ErasureReport:
    """Learn, copy out, uncompute, unprepare controlled on M', erase M'.

    ``stochastic`` samples the learner's prediction and follows that branch
    (the deferred-measurement equivalent of the lifted circuit).  ``coherent``
    runs the lifted learner as a dense pure-state simulation.
    """
    prod = _ensure_copies(copies)
    N, n, s, m = prod.count, learner.n, learner.s, learner.m
    if N < s:
        raise InsufficientCopiesError(f"N={N} copies cannot feed a learner needing s={s}")
    width = memory_width(m)
    ledger = WorkLedger()
    notes: list[str] = []
    if mode == "stochastic":
        try:
            guess = learner.predict(prod.factors[:s], seed)
        except Exception as exc:  # learner failure must surface in the report
            notes.append(f"learner failed: {exc}")
            guess = 0
        # uncompute leaves S intact on the branch; unprepare every copy
        unprep = learner.preparation(guess).inverse()
        final = prod.apply_each([unprep] * N)
        residual = _erase_register(ledger, "erase M'", width, bath, work_mode)
        td = final.distance_to_zero()
        bound = EXACT_TOL if error_bound is None else error_bound
        report = ErasureReport("learn", n, N, td, ledger, not notes, bound, m=m, s=s,
                               mode="stochastic", final_state=final, notes=notes,
                               diagnostics={"prediction": guess, "memory_residual": residual})
        return report
    if mode != "coherent":
        raise ValueError(f"unknown pipeline mode {mode!r}")
    if lifted is None:
        raise ValueError("coherent mode needs a lifted learner")
    return _coherent_pipeline(prod, learner, lifted, bath, work_mode, truth, error_bound)


def _coherent_pipeline(prod: ProductState, learner: Learner, lifted: LiftedLearner,
                       bath, work_mode: str, truth: int | None, error_bound) -> ErasureReport:
    N, n, s, m = prod.count, learner.n, lifted.s, lifted.m
    width = memory_width(m)
    extra = [r for r in lifted.layout.registers if r[0] not in ("S",)]
    layout = QubitLayout((("S", s * n), ("R", (N - s) * n)) + tuple(extra)
                         + ((MEMORY_COPY, width),))
    if layout.total_qubits > MAX_PURE_QUBITS:
        raise CapExceededError(f"coherent pipeline needs {layout.total_qubits} qubits")
    copies_vec = product(*prod.factors, layout=QubitLayout.of(("C", N * n))).vector
    rest = QuantumState.zero(QubitLayout(layout.registers[2:]))
    state = QuantumState.from_vector(np.kron(rest.vector, copies_vec), layout)

    state = apply_lifted(state, lifted)                       # 1. learn
    state = copy_out(state, "M", MEMORY_COPY)                 # 2. copy M -> M'
    state = uncompute(state, lifted)                          # 3. uncompute
    after_uncompute = state
    mp = layout.qubits(MEMORY_COPY)                           # 4. unprepare on M'
    circ = CircuitDescription(layout)
    for x in range(m):
        vals = tuple((x >> j) & 1 for j in range(width))
        unprep = learner.preparation(x).inverse()
        for c in range(N):
            base = layout.offset("S") + c * n if c < s else layout.offset("R") + (c - s) * n
            mapping = {q: base + q for q in range(n)}
            circ.extend(unprep.controlled(mp, vals, layout=layout, mapping=mapping))
    state = apply_circuit(state, circ)

    ledger = WorkLedger()                                     # 5. erase M'
    residual = _erase_register(ledger, "erase M'", width, bath, work_mode)
    keep = [r for r in layout.registers if r[0] != MEMORY_COPY]
    sub = QubitLayout(tuple(keep))
    branches, weights = _branches(state.vector, layout.offset(MEMORY_COPY), width,
                                  sub.total_qubits)
    final = QuantumState.ensemble(branches, weights, sub)
    td = trace_distance(final, QuantumState.zero(sub))
    ancillas = [r[0] for r in keep if r[0] not in ("S", "R")]
    restored = register_zero_probability(final, ancillas) >= 1.0 - 1e-9 if ancillas else True

    coeffs = extract_coefficients(lifted, learner.states) if hasattr(learner, "states") else None
    p_succ = coeffs.p_succ if coeffs is not None else None
    if error_bound is None:
        error_bound = math.sqrt(max(0.0, 1.0 - p_succ**2)) + EXACT_TOL if p_succ is not None \
            else EXACT_TOL
    diagnostics = {"memory_residual": residual}
    if truth is not None:
        ideal = np.kron(QuantumState.basis(QubitLayout.of((MEMORY_COPY, width)), truth).vector,
                        np.kron(QuantumState.zero(QubitLayout(tuple(extra))).vector, copies_vec))
        diagnostics["uncompute_overlap"] = float(abs(np.vdot(ideal, after_uncompute.vector)))
        diagnostics["uncompute_distance"] = math.sqrt(
            max(0.0, 1.0 - diagnostics["uncompute_overlap"] ** 2))
    return ErasureReport("learn", n, N, td, ledger, bool(restored), error_bound, m=m, s=s,
                         mode="coherent", p_succ_estimate=p_succ, final_state=final,
                         diagnostics=diagnostics)


def _branches(vec: np.ndarray, offset: int, width: int, rest_qubits: int):
    """Split a pure vector on the register at ``offset`` into weighted branches."""
    total = rest_qubits + width
    idx = np.arange(1 << total)
    low = idx & ((1 << offset) - 1)
    high = idx >> (offset + width)
    key = (idx >> offset) & ((1 << width) - 1)
    rest_idx = low | (high << offset)
    out, weights = [], []
    for x in range(1 << width):
        sel = key == x
        branch = np.zeros(1 << rest_qubits, dtype=complex)
        branch[rest_idx[sel]] = vec[sel]
        w = float(np.vdot(branch, branch).real)
        if w > 1e-24:
            out.append(branch / math.sqrt(w))
            weights.append(w)
    weights = np.array(weights)
    return np.array(out), weights / weights.sum()


# ---------------------------------------------------------------------------
# work extraction


@dataclass(frozen=True)
class ExtractionResult:
    yield_bits: float
    ledger: WorkLedger
    report: ErasureReport


class ExtractionAbortedError(RuntimeError):
    def __init__(self, message: str, ledger: WorkLedger, report: ErasureReport):
        super().__init__(message)
        self.ledger = ledger
        self.report = report


def extract_work(state, protocol: Callable[[object], ErasureReport],
                 total_qubits: int | None = None) -> ExtractionResult:
    """Erase with ``protocol``, then credit one bit per refreshed qubit."""
    report = protocol(state)
    ledger = WorkLedger()
    ledger.extend(report.ledger)
    if not report.success:
        raise ExtractionAbortedError("erasure failed; extraction aborted", ledger, report)
    if total_qubits is None:
        total_qubits = state.n_qubits
    ledger.credit("refresh", total_qubits)
    return ExtractionResult(ledger.yield_bits - ledger.cost_bits, ledger, report)
