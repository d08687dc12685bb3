"""Learning algorithms for finite state classes.

Two learners do the real work.  Shadow hypothesis selection collects random
Clifford snapshots and runs a Helstrom tournament over an explicit list of
states.  The phase-state learner recovers a low-degree GF(2) polynomial from
single-qubit X/Z measurements.  Both are wrapped by :class:`Learner`, which
is what the erasure pipeline consumes.
"""

from __future__ import annotations

import itertools
import json
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _gf2, kernels
from .bounds import StateClassDescriptor, phase_monomial_count
from .qcore import (
    CircuitDescription,
    DimensionMismatchError,
    QuantumState,
    QubitLayout,
    apply_circuit,
    prepare_state_circuit,
)
from .stabsim import clifford_table, enumerate_stabilizer_states, random_clifford_tableau

MAX_ENUMERATED = 4096
MOM_BATCHES = 8
TIE_TOL = 1e-12
ML_MONOMIAL_LIMIT = 12


class SupplierExhaustedError(RuntimeError):
    pass


class UnderdeterminedError(RuntimeError):
    pass


class ClassTooLargeError(ValueError):
    pass


# ---------------------------------------------------------------------------
# copy suppliers


class CopySupply:
    """Hands out copies of an unknown state, at most ``limit`` of them."""

    def __init__(self, source: QuantumState | Callable[[], QuantumState],
                 limit: int | None = None):
        self._source = source
        self.limit = limit
        self.used = 0

    @property
    def remaining(self) -> int | None:
        return None if self.limit is None else self.limit - self.used

    def take(self, count: int) -> list[QuantumState]:
        if self.limit is not None and self.used + count > self.limit:
            raise SupplierExhaustedError(
                f"requested {count} copies, only {self.limit - self.used} left")
        self.used += count
        if isinstance(self._source, QuantumState):
            return [self._source] * count
        return [self._source() for _ in range(count)]


def _take(copies, count: int) -> list[QuantumState]:
    if isinstance(copies, CopySupply):
        return copies.take(count)
    if isinstance(copies, QuantumState):
        return [copies] * count
    if callable(copies):
        return [copies() for _ in range(count)]
    copies = list(copies)
    if len(copies) < count:
        raise SupplierExhaustedError(f"requested {count} copies, only {len(copies)} given")
    return copies[:count]


# ---------------------------------------------------------------------------
# Helstrom observables


@dataclass(frozen=True)
class HelstromObservable:
    pair: tuple[int, int]
    projector: np.ndarray
    ref_x: float
    ref_y: float

    @property
    def gap(self) -> float:
        return self.ref_x - self.ref_y

    @property
    def success_probability(self) -> float:
        return 0.5 * (1.0 + self.gap)


def helstrom_observable(x_state: QuantumState, y_state: QuantumState,
                        pair: tuple[int, int] = (0, 1)) -> HelstromObservable:
    """Projector onto the nonnegative eigenspace of ``psi_x - psi_y``."""
    if x_state.n_qubits != y_state.n_qubits:
        raise DimensionMismatchError("Helstrom pair must have equal dimension")
    a, b = x_state.vector, y_state.vector
    diff = np.outer(a, a.conj()) - np.outer(b, b.conj())
    evals, evecs = np.linalg.eigh(diff)
    keep = evecs[:, evals >= -TIE_TOL]
    proj = keep @ keep.conj().T
    ref_x = float(np.real(np.vdot(a, proj @ a)))
    ref_y = float(np.real(np.vdot(b, proj @ b)))
    return HelstromObservable(pair, proj, ref_x, ref_y)


def pairwise_observables(states: Sequence[QuantumState]) -> list[HelstromObservable]:
    return [helstrom_observable(states[i], states[j], (i, j))
            for i, j in itertools.combinations(range(len(states)), 2)]


# ---------------------------------------------------------------------------
# classical shadows

# estimator a * <phi|O|phi> - b * tr(O) for each snapshot ensemble
_XZ_SCALE = (2.0, 0.5)
_H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / math.sqrt(2.0)


@dataclass(frozen=True)
class ShadowSnapshot:
    """One snapshot; the estimator ``a C^†|b><b|C - b I`` is never formed."""

    unitary: np.ndarray
    outcome: int
    ensemble: str = "clifford"

    @property
    def vector(self) -> np.ndarray:
        return self.unitary[self.outcome].conj()

    def estimate(self, observable: np.ndarray) -> float:
        return float(ShadowBatch(self.vector[None, :], self.ensemble).estimates([observable])[0, 0])

    def matrix(self) -> np.ndarray:
        a, b = _scales(self.ensemble, self.vector.shape[0])
        phi = self.vector
        return a * np.outer(phi, phi.conj()) - b * np.eye(phi.shape[0])


def _scales(ensemble: str, dim: int) -> tuple[float, float]:
    if ensemble == "clifford":
        return float(dim + 1), 1.0
    if ensemble == "xz":
        return _XZ_SCALE
    raise ValueError(f"unknown shadow ensemble {ensemble!r}")


@dataclass
class ShadowBatch:
    """Snapshot vectors ``phi_j = C_j^†|b_j>`` stacked row-wise."""

    phis: np.ndarray
    ensemble: str = "clifford"

    def __len__(self) -> int:
        return self.phis.shape[0]

    def estimates(self, observables: Sequence[np.ndarray]) -> np.ndarray:
        """Per-snapshot values, shape ``(snapshots, observables)``."""
        a, b = _scales(self.ensemble, self.phis.shape[1])
        obs = np.array(observables)
        quad = np.einsum("si,kij,sj->sk", self.phis.conj(), obs, self.phis).real
        return a * quad - b * np.trace(obs, axis1=1, axis2=2).real[None, :]


def _sample_rows(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(probs, axis=1)
    u = rng.random(probs.shape[0]) * cdf[:, -1]
    return np.minimum((cdf < u[:, None]).sum(axis=1), probs.shape[1] - 1)


def _copy_probs(unitaries: np.ndarray, copies: Sequence[QuantumState]) -> np.ndarray:
    if all(c.kind == "pure" for c in copies):
        vecs = np.array([c.vector for c in copies])
        amps = np.einsum("sij,sj->si", unitaries, vecs)
        return np.abs(amps) ** 2
    rhos = np.array([c.density() for c in copies])
    return np.einsum("sij,sjk,sik->si", unitaries, rhos, unitaries.conj()).real.clip(0.0)


def random_clifford_unitaries(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` uniform random n-qubit Cliffords as dense matrices."""
    if n <= 2:
        table = clifford_table(n)
        return table[rng.integers(0, table.shape[0], size=count)]
    return np.array([random_clifford_tableau(n, rng).to_unitary() for _ in range(count)])


def marginal_shadow(copies: Sequence[QuantumState], rng: np.random.Generator) -> ShadowBatch:
    """Clifford snapshots drawn from their exact marginal (n <= 3).

    For uniform C and Born outcome b, ``phi = C^†|b>`` is a stabilizer state
    with probability ``2^n <phi|rho|phi> / |Stab_n|``, so sampling from the
    enumerated stabilizer states gives the same snapshot distribution without
    drawing Cliffords.
    """
    copies = list(copies)
    n = copies[0].n_qubits
    stabs = np.array(enumerate_stabilizer_states(n))
    if all(c.kind == "pure" for c in copies):
        vecs = np.array([c.vector for c in copies])
        probs = np.abs(vecs.conj() @ stabs.T) ** 2
    else:
        rhos = np.array([c.density() for c in copies])
        probs = np.einsum("ti,sij,tj->st", stabs.conj(), rhos, stabs).real.clip(0.0)
    picks = _sample_rows(probs, rng)
    return ShadowBatch(stabs[picks], "clifford")


def classical_shadow(copies: Sequence[QuantumState], rng: np.random.Generator,
                     ensemble: str = "clifford") -> ShadowBatch:
    """One snapshot per copy."""
    copies = list(copies)
    n = copies[0].n_qubits
    count = len(copies)
    if ensemble == "marginal":
        return marginal_shadow(copies, rng)
    if ensemble == "clifford":
        unitaries = random_clifford_unitaries(n, count, rng)
    elif ensemble == "xz":
        if n != 1:
            raise ValueError("the X/Z shadow ensemble is defined for one qubit")
        basis = rng.integers(0, 2, size=count)
        unitaries = np.where(basis[:, None, None] == 1, _H[None], np.eye(2)[None])
    else:
        raise ValueError(f"unknown shadow ensemble {ensemble!r}")
    outcomes = _sample_rows(_copy_probs(unitaries, copies), rng)
    phis = unitaries[np.arange(count), outcomes].conj()
    return ShadowBatch(phis, ensemble)


def median_of_means(values: np.ndarray, batches: int = MOM_BATCHES) -> np.ndarray:
    """Median over ``batches`` contiguous batch means (axis 0)."""
    values = np.asarray(values, dtype=float)
    s = values.shape[0]
    if s == 0:
        raise ValueError("no samples")
    if s < batches:
        groups = np.array_split(values, s, axis=0)
    else:
        groups = np.array_split(values, batches, axis=0)
    means = np.array([g.mean(axis=0) for g in groups])
    return np.median(means, axis=0)


def tournament(estimates: np.ndarray, observables: Sequence[HelstromObservable], m: int) -> int:
    """Zero-based winner; ``x`` beats ``y`` when the estimate sits on x's side."""
    wins = np.zeros(m, dtype=np.int64)
    for est, obs in zip(estimates, observables):
        x, y = obs.pair
        mid = 0.5 * (obs.ref_x + obs.ref_y)
        score = (est - mid) * (obs.ref_x - obs.ref_y)
        if score > TIE_TOL:
            wins[x] += 1
        elif score < -TIE_TOL:
            wins[y] += 1
    return int(np.argmax(wins))


def select_from_shadow(batch: ShadowBatch, observables: Sequence[HelstromObservable],
                       m: int) -> int:
    if m == 1:
        return 0
    est = median_of_means(batch.estimates([o.projector for o in observables]))
    return tournament(est, observables, m)


def shadow_hypothesis_select(copies, states: Sequence[QuantumState], s: int, seed: int,
                             ensemble: str = "clifford",
                             observables: Sequence[HelstromObservable] | None = None) -> int:
    """Index in ``1..m`` of the selected hypothesis."""
    states = list(states)
    if not states:
        raise ValueError("empty hypothesis class")
    if len(states) == 1:
        return 1
    if observables is None:
        observables = pairwise_observables(states)
    rng = np.random.default_rng(seed)
    batch = classical_shadow(_take(copies, s), rng, ensemble)
    return select_from_shadow(batch, observables, len(states)) + 1


# ---------------------------------------------------------------------------
# Boolean polynomials and phase states


def monomial_basis(n: int, k: int) -> list[tuple[int, ...]]:
    """All monomials of degree at most ``k`` in canonical order."""
    out: list[tuple[int, ...]] = []
    for deg in range(min(k, n) + 1):
        out.extend(itertools.combinations(range(n), deg))
    return out


def _canonical(monos: Iterable[Iterable[int]]) -> tuple[tuple[int, ...], ...]:
    return tuple(sorted({tuple(sorted(set(int(v) for v in m))) for m in monos},
                        key=lambda t: (len(t), t)))


@dataclass(frozen=True)
class BooleanPolynomial:
    """GF(2) polynomial over variables ``0..n-1`` (variable ``j`` is qubit ``j``)."""

    n: int
    monomials: tuple[tuple[int, ...], ...] = ()
    k: int | None = None

    def __post_init__(self):
        monos = _canonical(self.monomials)
        for m in monos:
            if any(not 0 <= v < self.n for v in m):
                raise ValueError(f"monomial {m} uses a variable outside 0..{self.n - 1}")
            if self.k is not None and len(m) > self.k:
                raise ValueError(f"monomial {m} exceeds degree bound {self.k}")
        object.__setattr__(self, "monomials", monos)

    @property
    def degree(self) -> int:
        return max((len(m) for m in self.monomials), default=0)

    def evaluate(self, x: int) -> int:
        val = 0
        for m in self.monomials:
            if all((x >> v) & 1 for v in m):
                val ^= 1
        return val

    def truth_table(self) -> np.ndarray:
        idx = np.arange(1 << self.n)
        out = np.zeros(1 << self.n, dtype=np.uint8)
        for m in self.monomials:
            term = np.ones_like(out)
            for v in m:
                term &= ((idx >> v) & 1).astype(np.uint8)
            out ^= term
        return out

    def without_constant(self) -> "BooleanPolynomial":
        return BooleanPolynomial(self.n, tuple(m for m in self.monomials if m), self.k)

    def equal_up_to_constant(self, other: "BooleanPolynomial") -> bool:
        return self.without_constant().monomials == other.without_constant().monomials

    def phase_vector(self) -> np.ndarray:
        signs = 1.0 - 2.0 * self.truth_table()
        return signs.astype(np.complex128) / math.sqrt(1 << self.n)

    def phase_state(self) -> QuantumState:
        return QuantumState.from_vector(self.phase_vector())

    def preparation_circuit(self) -> CircuitDescription:
        """H on every qubit, then one Z / CZ / multi-controlled Z per monomial."""
        circ = CircuitDescription(self.n)
        for q in range(self.n):
            circ.h(q)
        for m in self.monomials:
            if not m:
                circ.unitary(-np.eye(2), (0,))
            elif len(m) == 1:
                circ.z(m[0])
            elif len(m) == 2:
                circ.cz(m[0], m[1])
            else:
                circ.mcz(m)
        return circ

    def index_in(self, basis: Sequence[tuple[int, ...]]) -> int:
        pos = {m: j for j, m in enumerate(basis)}
        return sum(1 << pos[m] for m in self.monomials)

    @classmethod
    def from_index(cls, n: int, k: int, index: int) -> "BooleanPolynomial":
        basis = monomial_basis(n, k)
        return cls(n, tuple(m for j, m in enumerate(basis) if (index >> j) & 1), k)

    @classmethod
    def random(cls, n: int, k: int, rng: np.random.Generator) -> "BooleanPolynomial":
        basis = monomial_basis(n, k)
        bits = rng.integers(0, 2, size=len(basis))
        return cls(n, tuple(m for m, b in zip(basis, bits) if b), k)

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "k": self.k, "monomials": [list(m) for m in self.monomials]})

    @classmethod
    def from_json(cls, text: str) -> "BooleanPolynomial":
        obj = json.loads(text)
        return cls(obj["n"], tuple(tuple(m) for m in obj["monomials"]), obj.get("k"))


@dataclass(frozen=True)
class PhaseSample:
    direction: int
    z: int  # outcomes of the Z-measured qubits (bit `direction` zeroed)
    derivative: int  # X outcome on qubit `direction`


def _measure_direction(vec: np.ndarray, i: int, rng: np.random.Generator) -> PhaseSample:
    work = vec.copy()
    kernels.apply_matrix(work, _H, np.array([i], dtype=np.int64), 0, 0)
    probs = np.abs(work) ** 2
    k = int(np.searchsorted(np.cumsum(probs), rng.random() * probs.sum(), side="right"))
    k = min(k, probs.shape[0] - 1)
    return PhaseSample(i, k & ~(1 << i), (k >> i) & 1)


def collect_phase_samples(copies: Sequence[QuantumState], n: int,
                          rng: np.random.Generator) -> list[PhaseSample]:
    """Round-robin directions: copy ``j`` measures X on qubit ``j mod n``."""
    return [_measure_direction(c.vector, j % n, rng) for j, c in enumerate(copies)]


def _design(samples: Sequence[PhaseSample], unknowns: Sequence[tuple[int, ...]]):
    a = np.zeros((len(samples), len(unknowns)), dtype=np.uint8)
    y = np.zeros(len(samples), dtype=np.uint8)
    for r, smp in enumerate(samples):
        y[r] = smp.derivative
        for c, m in enumerate(unknowns):
            if smp.direction in m and all((smp.z >> v) & 1 for v in m if v != smp.direction):
                a[r, c] = 1
    return a, y


def solve_phase_samples(samples: Sequence[PhaseSample], n: int, k: int, method: str = "linear",
                        strict: bool = True) -> BooleanPolynomial:
    """Polynomial (constant term 0) consistent with the derivative samples.

    ``linear`` uses Gaussian elimination on the joint system; ``ml`` scores
    every candidate by its number of violated samples.  The constant term
    only contributes a global phase and is never identified.
    """
    unknowns = [m for m in monomial_basis(n, k) if m]
    a, y = _design(samples, unknowns)
    if method == "ml":
        if len(unknowns) + 1 > ML_MONOMIAL_LIMIT:
            raise ValueError("exhaustive likelihood search is limited to 12 monomials")
        cands = ((np.arange(1 << len(unknowns))[:, None] >> np.arange(len(unknowns))) & 1)
        pred = (a.astype(np.int64) @ cands.T.astype(np.int64)) & 1
        misses = (pred != y[:, None]).sum(axis=0)
        best = np.flatnonzero(misses == misses.min())
        if best.size > 1 and strict:
            raise UnderdeterminedError(f"{best.size} candidates fit the samples equally well")
        coeffs = cands[best[0]]
    elif method == "linear":
        rk = _gf2.rank(a) if a.size else 0
        if rk < len(unknowns):
            if not strict and len(unknowns) + 1 <= ML_MONOMIAL_LIMIT:
                return solve_phase_samples(samples, n, k, "ml", strict=False)
            raise UnderdeterminedError(
                f"derivative system has rank {rk}, needs {len(unknowns)}")
        coeffs = _gf2.solve(a, y)
        if coeffs is None:
            raise UnderdeterminedError("derivative samples are inconsistent")
    else:
        raise ValueError(f"unknown method {method!r}")
    return BooleanPolynomial(n, tuple(m for m, c in zip(unknowns, coeffs) if c), k)


def default_phase_budget(n: int) -> int:
    return 200 * n


def phase_state_learn(copies, n: int, k: int, seed: int, budget: int | None = None,
                      method: str = "linear", strict: bool = True) -> BooleanPolynomial:
    """Learn ``f`` from copies of ``2^{-n/2} sum_x (-1)^{f(x)} |x>``."""
    budget = default_phase_budget(n) if budget is None else int(budget)
    rng = np.random.default_rng(seed)
    samples = collect_phase_samples(_take(copies, budget), n, rng)
    return solve_phase_samples(samples, n, k, method, strict)


# ---------------------------------------------------------------------------
# class materialisation


def class_enumerate(descriptor: StateClassDescriptor) -> list[QuantumState]:
    v, p = descriptor.variant, descriptor.params
    if v == "explicit":
        return list(descriptor.members)
    if v == "phase":
        n, k = p["n"], p["k"]
        size_bits = phase_monomial_count(n, k)
        if (1 << size_bits) > MAX_ENUMERATED:
            raise ClassTooLargeError(f"phase class has 2^{size_bits} members")
        return [apply_circuit(QuantumState.zero(n),
                              BooleanPolynomial.from_index(n, k, idx).preparation_circuit())
                for idx in range(1 << size_bits)]
    if v == "stabilizer":
        n = p["n"]
        from .stabsim import count_stabilizer_states

        if count_stabilizer_states(n) > MAX_ENUMERATED:
            raise ClassTooLargeError(f"{n}-qubit stabilizer class is too large")
        return [QuantumState.from_vector(vec) for vec in enumerate_stabilizer_states(n)]
    raise ClassTooLargeError(f"{v} classes are not materialised")


# ---------------------------------------------------------------------------
# the learner contract


class Learner(ABC):
    """Maps ``s`` copies of an unknown class member to a predicted index.

    Indices are zero-based, matching the binary content of the memory
    register ``M``.
    """

    s: int
    m: int
    n: int
    epsilon: float = 0.0
    delta: float = 0.0

    @abstractmethod
    def predict(self, copies: Sequence[QuantumState], seed: int) -> int:
        ...

    @abstractmethod
    def preparation(self, index: int) -> CircuitDescription:
        ...

    def learn(self, copies, seed: int) -> CircuitDescription:
        return self.preparation(self.predict(_take(copies, self.s), seed))

    @property
    def memory_width(self) -> int:
        return max(0, math.ceil(math.log2(self.m))) if self.m > 1 else 0


class ExplicitClassLearner(Learner):
    def __init__(self, states: Sequence[QuantumState], s: int):
        states = list(states)
        if not states:
            raise ValueError("empty hypothesis class")
        self.states = states
        self.m = len(states)
        self.n = states[0].n_qubits
        self.s = int(s)
        self._prep = [prepare_state_circuit(st) for st in states]

    def preparation(self, index: int) -> CircuitDescription:
        return self._prep[index]


class ShadowSelectionLearner(ExplicitClassLearner):
    def __init__(self, states: Sequence[QuantumState], s: int, ensemble: str = "clifford",
                 epsilon: float = 0.0, delta: float = 0.0):
        super().__init__(states, s)
        self.ensemble = ensemble
        self.epsilon = epsilon
        self.delta = delta
        self.observables = pairwise_observables(self.states)

    def predict(self, copies, seed: int) -> int:
        return shadow_hypothesis_select(copies, self.states, self.s, seed, self.ensemble,
                                        self.observables) - 1


class PhaseStateLearner(Learner):
    def __init__(self, n: int, k: int, s: int | None = None, strict: bool = False):
        self.n, self.k = n, k
        self.s = default_phase_budget(n) if s is None else int(s)
        self.basis = monomial_basis(n, k)
        self.m = 1 << len(self.basis)
        self.strict = strict
        self.last_error: str | None = None

    def predict(self, copies, seed: int) -> int:
        self.last_error = None
        try:
            poly = phase_state_learn(copies, self.n, self.k, seed, self.s, strict=self.strict)
        except UnderdeterminedError as exc:
            self.last_error = str(exc)
            raise
        return poly.index_in(self.basis)

    def preparation(self, index: int) -> CircuitDescription:
        return BooleanPolynomial.from_index(self.n, self.k, index).preparation_circuit()


class CircuitLearner(ExplicitClassLearner):
    """A learner given as a measurement circuit plus a classical decoder.

    The circuit acts on ``s`` copies laid out in one register ``S``
    (optionally followed by a zero-initialised work register ``W``).  The
    decoder maps the dict of classical bits to a zero-based prediction.
    """

    def __init__(self, states: Sequence[QuantumState], s: int, circuit: CircuitDescription,
                 decoder: Callable[[dict], int], cbits: Sequence):
        super().__init__(states, s)
        if circuit.layout.size("S") != s * self.n:
            raise DimensionMismatchError("circuit register S must hold s copies")
        self.circuit = circuit
        self.decoder = decoder
        self.cbits = list(cbits)

    def predict(self, copies, seed: int) -> int:
        from .qcore import product

        copies = _take(copies, self.s)
        joint = product(*copies, layout=QubitLayout.of(("S", self.s * self.n)))
        if self.circuit.layout.names != ("S",):
            extra = QuantumState.zero(QubitLayout(self.circuit.layout.registers[1:]))
            joint = product(joint, extra)
        record: dict = {}
        apply_circuit(joint, self.circuit, seed=seed, record=record)
        return int(self.decoder(record))


def basis_learner(states: Sequence[QuantumState] | None = None) -> CircuitLearner:
    """One-copy computational-basis learner for ``{|0>, |1>}``."""
    if states is None:
        states = [QuantumState.basis(1, 0), QuantumState.basis(1, 1)]
    circ = CircuitDescription(QubitLayout.of(("S", 1))).measure(0, "b0")
    return CircuitLearner(states, 1, circ, lambda bits: bits["b0"], ["b0"])


def coin_learner(states: Sequence[QuantumState]) -> CircuitLearner:
    """Ignores the copy and guesses with one fair coin (``m = 2``)."""
    if len(states) != 2:
        raise ValueError("the coin learner guesses between two hypotheses")
    circ = CircuitDescription(QubitLayout.of(("S", states[0].n_qubits))).coin("c0")
    return CircuitLearner(states, 1, circ, lambda bits: bits["c0"], ["c0"])


def xz_shadow_learner(states: Sequence[QuantumState], s: int) -> CircuitLearner:
    """X/Z shadow tournament on ``s`` single-qubit copies, as a circuit.

    Copy ``j`` uses coin ``a{j}`` to pick the basis (H before measuring when
    heads) and records ``b{j}``.  Snapshot estimators are unbiased for real
    single-qubit classes.
    """
    states = list(states)
    if states[0].n_qubits != 1:
        raise ValueError("the X/Z shadow learner works on single-qubit classes")
    circ = CircuitDescription(QubitLayout.of(("S", s)))
    cbits = []
    for j in range(s):
        circ.coin(f"a{j}")
        circ.h(j, cbits=[(f"a{j}", 1)])
        circ.measure(j, f"b{j}")
        cbits += [f"a{j}", f"b{j}"]
    observables = pairwise_observables(states)
    m = len(states)

    def decode(bits: dict) -> int:
        phis = np.array([
            (_H if bits[f"a{j}"] else np.eye(2))[bits[f"b{j}"]].conj() for j in range(s)])
        return select_from_shadow(ShadowBatch(phis, "xz"), observables, m)

    return CircuitLearner(states, s, circ, decode, cbits)


class SquareRootMeasurementLearner(ExplicitClassLearner):
    """Collective square-root measurement on ``s`` copies of a class member.

    Outcome ``k`` has amplitude ``(G^{-1/2} a)_k`` where ``G`` is the Gram
    matrix of the ``s``-copy class states and ``a_j`` the overlap of member
    ``j`` with the product of the supplied copies.  Everything stays inside
    the ``m``-dimensional span, so ``s * n`` may exceed the dense cap.  The
    leftover probability (input outside the span) is a reject outcome that
    guesses index 0.
    """

    def __init__(self, states: Sequence[QuantumState], s: int):
        super().__init__(states, s)
        self._vecs = np.array([st.vector for st in self.states])
        gram = (self._vecs.conj() @ self._vecs.T) ** s
        evals, evecs = np.linalg.eigh(0.5 * (gram + gram.conj().T))
        if evals.min() <= 1e-12:
            raise ValueError("s-copy class states are linearly dependent")
        self._inv_sqrt = (evecs / np.sqrt(evals)) @ evecs.conj().T

    def outcome_probabilities(self, copies: Sequence[QuantumState]) -> np.ndarray:
        amps = np.ones(self.m, dtype=complex)
        for c in copies:
            amps *= self._vecs.conj() @ c.vector
        probs = np.abs(self._inv_sqrt @ amps) ** 2
        return np.append(probs, max(0.0, 1.0 - probs.sum()))

    def predict(self, copies, seed: int) -> int:
        probs = self.outcome_probabilities(_take(copies, self.s))
        rng = np.random.default_rng(seed)
        k = int(np.searchsorted(np.cumsum(probs), rng.random() * probs.sum(), side="right"))
        return k if k < self.m else 0
