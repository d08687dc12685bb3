"""Dense state-vector / density-matrix engine with named registers.

Conventions
-----------
Qubits are numbered globally, register-major: the first register occupies
qubits ``0 .. c0-1``, the next one ``c0 .. c0+c1-1`` and so on.  Flat
amplitude indices are little-endian, so qubit ``q`` is bit ``q`` of the index
and the value held by a register is read little-endian from its qubits.  A
product of states ``a ⊗ b`` in this package always puts ``a`` on the lower
qubits (numerically ``np.kron(b, a)``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels

MAX_PURE_QUBITS = 16
MAX_DENSITY_QUBITS = 12
DEFAULT_RANK_TOL = 1e-10
DEFAULT_TOL = 1e-9


class DimensionMismatchError(ValueError):
    pass


class CapExceededError(ValueError):
    pass


class UndefinedClassicalBitError(ValueError):
    pass


class UnknownRegisterError(KeyError):
    pass


# ---------------------------------------------------------------------------
# layout


@dataclass(frozen=True)
class QubitLayout:
    registers: tuple[tuple[str, int], ...]

    def __post_init__(self):
        regs = tuple((str(name), int(count)) for name, count in self.registers)
        names = [r[0] for r in regs]
        if len(set(names)) != len(names):
            raise ValueError(f"register names must be unique, got {names}")
        if any(c < 0 for _, c in regs):
            raise ValueError("register sizes must be non-negative")
        object.__setattr__(self, "registers", regs)

    @classmethod
    def of(cls, *registers: tuple[str, int]) -> "QubitLayout":
        return cls(tuple(registers))

    @classmethod
    def flat(cls, n: int, name: str = "q") -> "QubitLayout":
        return cls(((name, n),))

    @property
    def total_qubits(self) -> int:
        return sum(c for _, c in self.registers)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.registers)

    def size(self, name: str) -> int:
        for reg, count in self.registers:
            if reg == name:
                return count
        raise UnknownRegisterError(name)

    def offset(self, name: str) -> int:
        off = 0
        for reg, count in self.registers:
            if reg == name:
                return off
            off += count
        raise UnknownRegisterError(name)

    def qubits(self, name: str) -> list[int]:
        off = self.offset(name)
        return list(range(off, off + self.size(name)))

    def register_of(self, qubit: int) -> tuple[str, int]:
        off = 0
        for reg, count in self.registers:
            if off <= qubit < off + count:
                return reg, qubit - off
            off += count
        raise IndexError(f"qubit {qubit} outside layout of {self.total_qubits}")

    def concat(self, other: "QubitLayout") -> "QubitLayout":
        return QubitLayout(self.registers + other.registers)

    def sub(self, names: Iterable[str]) -> "QubitLayout":
        wanted = set(names)
        for name in wanted:
            self.size(name)
        return QubitLayout(tuple(r for r in self.registers if r[0] in wanted))

    def to_list(self) -> list[list]:
        return [[name, count] for name, count in self.registers]


def _as_layout(layout, n_qubits: int) -> QubitLayout:
    if layout is None:
        return QubitLayout.flat(n_qubits)
    if isinstance(layout, QubitLayout):
        return layout
    return QubitLayout(tuple(tuple(r) for r in layout))


def _n_qubits_of_dim(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or (1 << n) != dim:
        raise DimensionMismatchError(f"dimension {dim} is not a power of two")
    return n


# ---------------------------------------------------------------------------
# states


class QuantumState:
    """Pure vector, dense density matrix, or a weighted ensemble of pure vectors.

    The ensemble form represents ``sum_i w_i |v_i><v_i|`` without materialising
    the matrix; it is what makes low-rank mixtures of many-qubit copies
    tractable (spectra come from the Gram matrix).
    """

    __slots__ = ("layout", "kind", "_vec", "_rho", "_vecs", "_weights", "tolerance")

    def __init__(self, layout: QubitLayout, kind: str, *, vec=None, rho=None,
                 vecs=None, weights=None, tolerance: float = DEFAULT_TOL):
        self.layout = layout
        self.kind = kind
        self._vec = vec
        self._rho = rho
        self._vecs = vecs
        self._weights = weights
        self.tolerance = tolerance

    # construction --------------------------------------------------------
    @classmethod
    def from_vector(cls, vec, layout=None, tolerance: float = DEFAULT_TOL,
                    normalize: bool = False) -> "QuantumState":
        vec = np.array(vec, dtype=np.complex128).reshape(-1)
        n = _n_qubits_of_dim(vec.shape[0])
        if n > MAX_PURE_QUBITS:
            raise CapExceededError(f"{n} qubits exceeds the dense cap of {MAX_PURE_QUBITS}")
        layout = _as_layout(layout, n)
        if layout.total_qubits != n:
            raise DimensionMismatchError(
                f"layout has {layout.total_qubits} qubits, vector has {n}")
        norm = np.linalg.norm(vec)
        if normalize:
            if norm == 0:
                raise ValueError("cannot normalise the zero vector")
            vec = vec / norm
        elif abs(norm - 1.0) > tolerance:
            raise ValueError(f"state vector norm {norm} differs from 1")
        return cls(layout, "pure", vec=vec, tolerance=tolerance)

    @classmethod
    def from_density(cls, rho, layout=None, tolerance: float = DEFAULT_TOL) -> "QuantumState":
        rho = np.array(rho, dtype=np.complex128)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise DimensionMismatchError("density matrix must be square")
        n = _n_qubits_of_dim(rho.shape[0])
        if n > MAX_DENSITY_QUBITS:
            raise CapExceededError(
                f"{n}-qubit density matrix exceeds the cap of {MAX_DENSITY_QUBITS}")
        layout = _as_layout(layout, n)
        if layout.total_qubits != n:
            raise DimensionMismatchError(
                f"layout has {layout.total_qubits} qubits, matrix has {n}")
        if np.max(np.abs(rho - rho.conj().T), initial=0.0) > tolerance:
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > tolerance:
            raise ValueError(f"density matrix trace {tr} differs from 1")
        evals = np.linalg.eigvalsh(rho)
        if evals[0] < -tolerance:
            raise ValueError(f"density matrix has negative eigenvalue {evals[0]}")
        return cls(layout, "density", rho=rho, tolerance=tolerance)

    @classmethod
    def ensemble(cls, vectors, weights, layout=None,
                 tolerance: float = DEFAULT_TOL) -> "QuantumState":
        vecs = np.array(vectors, dtype=np.complex128)
        if vecs.ndim == 1:
            vecs = vecs[None, :]
        weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        if weights.shape[0] != vecs.shape[0]:
            raise ValueError("one weight per ensemble member is required")
        if np.any(weights < -tolerance) or abs(weights.sum() - 1.0) > tolerance:
            raise ValueError("ensemble weights must be a probability vector")
        norms = np.linalg.norm(vecs, axis=1)
        if np.any(np.abs(norms - 1.0) > tolerance):
            raise ValueError("ensemble members must be normalised")
        n = _n_qubits_of_dim(vecs.shape[1])
        if n > MAX_PURE_QUBITS:
            raise CapExceededError(f"{n} qubits exceeds the dense cap of {MAX_PURE_QUBITS}")
        layout = _as_layout(layout, n)
        if layout.total_qubits != n:
            raise DimensionMismatchError("layout does not match ensemble dimension")
        return cls(layout, "ensemble", vecs=vecs, weights=weights, tolerance=tolerance)

    @classmethod
    def zero(cls, layout) -> "QuantumState":
        layout = _as_layout(layout, 0) if not isinstance(layout, int) else QubitLayout.flat(layout)
        n = layout.total_qubits
        if n > MAX_PURE_QUBITS:
            raise CapExceededError(f"{n} qubits exceeds the dense cap of {MAX_PURE_QUBITS}")
        vec = np.zeros(1 << n, dtype=np.complex128)
        vec[0] = 1.0
        return cls(layout, "pure", vec=vec)

    @classmethod
    def basis(cls, layout, values: dict[str, int] | int) -> "QuantumState":
        layout = QubitLayout.flat(layout) if isinstance(layout, int) else layout
        if isinstance(values, dict):
            index = 0
            for name, value in values.items():
                size = layout.size(name)
                if not 0 <= value < (1 << size):
                    raise ValueError(f"value {value} does not fit register {name}")
                index |= int(value) << layout.offset(name)
        else:
            index = int(values)
        n = layout.total_qubits
        if n > MAX_PURE_QUBITS:
            raise CapExceededError(f"{n} qubits exceeds the dense cap of {MAX_PURE_QUBITS}")
        vec = np.zeros(1 << n, dtype=np.complex128)
        vec[index] = 1.0
        return cls(layout, "pure", vec=vec)

    @classmethod
    def maximally_mixed(cls, layout) -> "QuantumState":
        layout = QubitLayout.flat(layout) if isinstance(layout, int) else layout
        d = 1 << layout.total_qubits
        return cls.from_density(np.eye(d) / d, layout)

    # access --------------------------------------------------------------
    @property
    def n_qubits(self) -> int:
        return self.layout.total_qubits

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    @property
    def is_pure(self) -> bool:
        return self.kind == "pure"

    @property
    def vector(self) -> np.ndarray:
        if self.kind != "pure":
            raise ValueError("state is not held as a pure vector")
        return self._vec

    def density(self) -> np.ndarray:
        if self.kind == "density":
            return self._rho
        if self.n_qubits > MAX_DENSITY_QUBITS:
            raise CapExceededError(
                f"{self.n_qubits}-qubit density matrix exceeds the cap of {MAX_DENSITY_QUBITS}")
        if self.kind == "pure":
            return np.outer(self._vec, self._vec.conj())
        return (self._vecs.T * self._weights) @ self._vecs.conj()

    def low_rank(self) -> tuple[np.ndarray, np.ndarray] | None:
        """``(vectors, weights)`` if the state has an explicit low-rank form."""
        if self.kind == "pure":
            return self._vec[None, :], np.ones(1)
        if self.kind == "ensemble":
            return self._vecs, self._weights
        return None

    def as_density_state(self) -> "QuantumState":
        if self.kind == "density":
            return self
        return QuantumState(self.layout, "density", rho=self.density(), tolerance=self.tolerance)

    def relabel(self, layout: QubitLayout) -> "QuantumState":
        if layout.total_qubits != self.n_qubits:
            raise DimensionMismatchError("relabel must keep the qubit count")
        return QuantumState(layout, self.kind, vec=self._vec, rho=self._rho,
                            vecs=self._vecs, weights=self._weights, tolerance=self.tolerance)

    def eigenvalues(self) -> np.ndarray:
        """Nonzero-part spectrum, descending (padded with zeros for dense forms)."""
        if self.kind == "density":
            return np.linalg.eigvalsh(self._rho)[::-1]
        vecs, weights = self.low_rank()
        sw = np.sqrt(np.clip(weights, 0.0, None))
        gram = (vecs.conj() @ vecs.T) * np.outer(sw, sw)
        return np.linalg.eigvalsh(gram)[::-1]

    def probabilities(self) -> np.ndarray:
        if self.kind == "pure":
            return np.abs(self._vec) ** 2
        if self.kind == "density":
            return np.clip(np.diag(self._rho).real, 0.0, None)
        return self._weights @ (np.abs(self._vecs) ** 2)

    def __repr__(self) -> str:
        return f"QuantumState({self.kind}, {self.layout.to_list()})"

    # serialisation -------------------------------------------------------
    def to_json(self) -> str:
        if self.kind != "pure":
            raise ValueError("only pure states export as amplitude lists")
        amps = [[float(a.real), float(a.imag)] for a in self._vec]
        return json.dumps({"registers": self.layout.to_list(), "amplitudes": amps})

    @classmethod
    def from_json(cls, text: str) -> "QuantumState":
        obj = json.loads(text)
        amps = np.array([complex(re, im) for re, im in obj["amplitudes"]])
        return cls.from_vector(amps, QubitLayout(tuple(tuple(r) for r in obj["registers"])))


def product(*states: QuantumState, layout: QubitLayout | None = None) -> QuantumState:
    """Tensor product; the first factor lands on the lowest qubits.

    Without ``layout`` the factor layouts are concatenated (names must differ).
    """
    if not states:
        raise ValueError("need at least one factor")
    if layout is None:
        layout = states[0].layout
        for st in states[1:]:
            layout = layout.concat(st.layout)
    elif layout.total_qubits != sum(st.n_qubits for st in states):
        raise DimensionMismatchError("layout does not match the factors")
    if all(st.kind == "pure" for st in states):
        if layout.total_qubits > MAX_PURE_QUBITS:
            raise CapExceededError("product exceeds the dense cap")
        vec = states[0].vector
        for st in states[1:]:
            vec = np.kron(st.vector, vec)
        return QuantumState(layout, "pure", vec=vec)
    if layout.total_qubits > MAX_DENSITY_QUBITS:
        raise CapExceededError("mixed product exceeds the density-matrix cap")
    rho = states[0].density()
    for st in states[1:]:
        rho = np.kron(st.density(), rho)
    return QuantumState(layout, "density", rho=rho)


def copies(state: QuantumState, count: int, name: str = "S") -> QuantumState:
    """``count`` copies of a pure single-register state as one register."""
    n = state.n_qubits * count
    if n > MAX_PURE_QUBITS:
        raise CapExceededError(f"{count} copies need {n} qubits (cap {MAX_PURE_QUBITS})")
    vec = state.vector
    out = vec
    for _ in range(count - 1):
        out = np.kron(vec, out)
    return QuantumState(QubitLayout.of((name, n)), "pure", vec=out)


# ---------------------------------------------------------------------------
# gates and circuits

_SQ2 = 1.0 / math.sqrt(2.0)
GATE_MATRICES: dict[str, np.ndarray] = {
    "h": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=np.complex128),
    "x": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
    "s": np.array([[1, 0], [0, 1j]], dtype=np.complex128),
    "sdg": np.array([[1, 0], [0, -1j]], dtype=np.complex128),
    "t": np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=np.complex128),
    "tdg": np.array([[1, 0], [0, np.exp(-1j * np.pi / 4)]], dtype=np.complex128),
    "swap": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]],
                     dtype=np.complex128),
}
# named controlled gates reduce to a base gate plus controls
_CONTROLLED_BASE = {"cnot": "x", "cx": "x", "mcx": "x", "cz": "z", "mcz": "z"}
_INVERSE_NAME = {"s": "sdg", "sdg": "s", "t": "tdg", "tdg": "t"}
GATE_NAMES = frozenset(GATE_MATRICES) | frozenset(_CONTROLLED_BASE) | {"u"}


@dataclass(frozen=True)
class Gate:
    name: str
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    control_values: tuple[int, ...] = ()
    cbits: tuple[tuple, ...] = ()  # ((bit_id, required_value), ...)
    matrix: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        name = self.name.lower()
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(self, "controls", tuple(int(c) for c in self.controls))
        cv = tuple(int(v) for v in self.control_values) or (1,) * len(self.controls)
        object.__setattr__(self, "control_values", cv)
        object.__setattr__(self, "cbits", tuple((b, int(v)) for b, v in self.cbits))
        if name not in GATE_NAMES:
            raise ValueError(f"unknown gate {name!r}")
        if len(cv) != len(self.controls):
            raise ValueError("control_values must match controls")
        if name in ("cnot", "cx", "cz") and len(self.controls) != 1:
            raise ValueError(f"{name} takes exactly one control")
        if name == "u":
            if self.matrix is None:
                raise ValueError("gate 'u' needs a matrix")
            mat = np.asarray(self.matrix, dtype=np.complex128)
            d = 1 << len(self.targets)
            if mat.shape != (d, d):
                raise ValueError(f"matrix shape {mat.shape} does not fit {len(self.targets)} targets")
            if not np.allclose(mat.conj().T @ mat, np.eye(d), atol=1e-9):
                raise ValueError("gate matrix is not unitary")
            object.__setattr__(self, "matrix", mat)
        else:
            arity = 2 if name == "swap" else 1
            if len(self.targets) != arity:
                raise ValueError(f"{name} acts on {arity} target(s)")
        wires = self.targets + self.controls
        if len(set(wires)) != len(wires):
            raise ValueError("targets and controls must be distinct wires")

    def base_matrix(self) -> np.ndarray:
        if self.name == "u":
            return self.matrix
        return GATE_MATRICES[_CONTROLLED_BASE.get(self.name, self.name)]

    @property
    def wires(self) -> tuple[int, ...]:
        return self.targets + self.controls

    def inverse(self) -> "Gate":
        if self.cbits:
            raise ValueError("classically controlled gates have no circuit inverse")
        if self.name == "u":
            return Gate("u", self.targets, self.controls, self.control_values,
                        matrix=self.matrix.conj().T)
        return Gate(_INVERSE_NAME.get(self.name, self.name), self.targets,
                    self.controls, self.control_values)

    def with_controls(self, wires: Sequence[int], values: Sequence[int]) -> "Gate":
        return Gate(self.name if self.name not in ("cnot", "cx", "cz") else
                    _CONTROLLED_BASE[self.name], self.targets,
                    self.controls + tuple(wires), self.control_values + tuple(values),
                    self.cbits, self.matrix)

    def remap(self, mapping) -> "Gate":
        return Gate(self.name, tuple(mapping[t] for t in self.targets),
                    tuple(mapping[c] for c in self.controls), self.control_values,
                    self.cbits, self.matrix)

    def to_dict(self) -> dict:
        out: dict = {"op": "gate", "name": self.name, "targets": list(self.targets)}
        if self.controls:
            out["controls"] = list(self.controls)
            if any(v != 1 for v in self.control_values):
                out["control_values"] = list(self.control_values)
        if self.cbits:
            out["cbits"] = [[b, v] for b, v in self.cbits]
        if self.name == "u":
            out["matrix"] = [[float(a.real), float(a.imag)] for a in self.matrix.reshape(-1)]
        return out


@dataclass(frozen=True)
class Measure:
    target: int
    cbit: object

    def to_dict(self) -> dict:
        return {"op": "measure", "target": self.target, "cbit": self.cbit}


@dataclass(frozen=True)
class Coin:
    cbit: object

    def to_dict(self) -> dict:
        return {"op": "coin", "cbit": self.cbit}


Instruction = Gate | Measure | Coin


def _instruction_from_dict(obj: dict) -> Instruction:
    op = obj.get("op", "gate")
    if op == "measure":
        return Measure(int(obj["target"]), obj["cbit"])
    if op == "coin":
        return Coin(obj["cbit"])
    if op != "gate":
        raise ValueError(f"unknown instruction op {op!r}")
    matrix = None
    if "matrix" in obj:
        flat = np.array([complex(re, im) for re, im in obj["matrix"]])
        d = int(round(math.sqrt(flat.size)))
        matrix = flat.reshape(d, d)
    return Gate(obj["name"], tuple(obj["targets"]), tuple(obj.get("controls", ())),
                tuple(obj.get("control_values", ())),
                tuple(tuple(c) for c in obj.get("cbits", ())), matrix)


class CircuitDescription:
    """Ordered instruction list over a :class:`QubitLayout`.

    The builder methods return ``self`` so small circuits can be chained.
    """

    def __init__(self, layout, instructions: Iterable[Instruction] = ()):
        self.layout = QubitLayout.flat(layout) if isinstance(layout, int) else layout
        self.instructions: list[Instruction] = []
        for ins in instructions:
            self.append(ins)

    # building ------------------------------------------------------------
    def append(self, ins: Instruction) -> "CircuitDescription":
        n = self.layout.total_qubits
        wires = ins.wires if isinstance(ins, Gate) else (
            (ins.target,) if isinstance(ins, Measure) else ())
        for w in wires:
            if not 0 <= w < n:
                raise IndexError(f"wire {w} out of range for {n} qubits")
        self.instructions.append(ins)
        return self

    def gate(self, name, targets, controls=(), control_values=(), cbits=(), matrix=None):
        if isinstance(targets, int):
            targets = (targets,)
        if isinstance(controls, int):
            controls = (controls,)
        return self.append(Gate(name, tuple(targets), tuple(controls),
                                tuple(control_values), tuple(cbits), matrix))

    def h(self, q, **kw):
        return self.gate("h", q, **kw)

    def x(self, q, **kw):
        return self.gate("x", q, **kw)

    def z(self, q, **kw):
        return self.gate("z", q, **kw)

    def s(self, q, **kw):
        return self.gate("s", q, **kw)

    def cnot(self, control, target, **kw):
        return self.gate("cnot", target, controls=(control,), **kw)

    def cz(self, a, b, **kw):
        return self.gate("cz", b, controls=(a,), **kw)

    def mcz(self, qubits: Sequence[int], **kw):
        qubits = list(qubits)
        return self.gate("mcz", qubits[-1], controls=tuple(qubits[:-1]), **kw)

    def unitary(self, matrix, targets, **kw):
        return self.gate("u", targets, matrix=np.asarray(matrix), **kw)

    def measure(self, target: int, cbit) -> "CircuitDescription":
        return self.append(Measure(int(target), cbit))

    def coin(self, cbit) -> "CircuitDescription":
        return self.append(Coin(cbit))

    def extend(self, other: "CircuitDescription", mapping=None) -> "CircuitDescription":
        for ins in other.instructions:
            if mapping is not None:
                if isinstance(ins, Gate):
                    ins = ins.remap(mapping)
                elif isinstance(ins, Measure):
                    ins = Measure(mapping[ins.target], ins.cbit)
            self.append(ins)
        return self

    # queries ---------------------------------------------------------------
    @property
    def is_unitary(self) -> bool:
        return all(isinstance(i, Gate) and not i.cbits for i in self.instructions)

    def __len__(self) -> int:
        return len(self.instructions)

    def validate(self) -> None:
        defined: set = set()
        for ins in self.instructions:
            if isinstance(ins, Gate):
                for bit, _ in ins.cbits:
                    if bit not in defined:
                        raise UndefinedClassicalBitError(f"classical bit {bit!r} used before definition")
            else:
                defined.add(ins.cbit)

    def inverse(self) -> "CircuitDescription":
        if not self.is_unitary:
            raise ValueError("only unitary-only circuits can be inverted")
        return CircuitDescription(self.layout, [g.inverse() for g in reversed(self.instructions)])

    def controlled(self, wires: Sequence[int], values: Sequence[int],
                   layout: QubitLayout | None = None, mapping=None) -> "CircuitDescription":
        """Every gate gains the extra quantum controls ``wires == values``."""
        out = CircuitDescription(layout or self.layout)
        for ins in self.instructions:
            if not isinstance(ins, Gate) or ins.cbits:
                raise ValueError("only unitary-only circuits can be controlled")
            g = ins.remap(mapping) if mapping is not None else ins
            out.append(g.with_controls(wires, values))
        return out

    def to_dict(self) -> dict:
        return {"n": self.layout.total_qubits, "registers": self.layout.to_list(),
                "instructions": [i.to_dict() for i in self.instructions]}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, obj: dict) -> "CircuitDescription":
        layout = QubitLayout(tuple(tuple(r) for r in obj["registers"]))
        if layout.total_qubits != int(obj["n"]):
            raise DimensionMismatchError("'n' disagrees with the register list")
        circ = cls(layout, [_instruction_from_dict(i) for i in obj["instructions"]])
        circ.validate()
        return circ

    @classmethod
    def from_json(cls, text: str) -> "CircuitDescription":
        return cls.from_dict(json.loads(text))

    def __repr__(self) -> str:
        return f"CircuitDescription({self.layout.to_list()}, {len(self)} instructions)"


# ---------------------------------------------------------------------------
# simulation


def _stream(seed: int, index: int) -> np.random.Generator:
    # counter-based stream keyed by (seed, instruction index)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


def _masks(g: Gate, shift: int = 0) -> tuple[np.ndarray, int, int]:
    targets = np.array([t + shift for t in g.targets], dtype=np.int64)
    cmask = cval = 0
    for c, v in zip(g.controls, g.control_values):
        cmask |= 1 << (c + shift)
        if v:
            cval |= 1 << (c + shift)
    return targets, cmask, cval


def _apply_gate_vec(vec: np.ndarray, g: Gate) -> None:
    targets, cmask, cval = _masks(g)
    kernels.apply_matrix(vec, g.base_matrix(), targets, cmask, cval)


def _apply_gate_rho(rho: np.ndarray, g: Gate, n: int) -> np.ndarray:
    flat = rho.reshape(-1).copy()  # index = row * D + col: rows on the high bits
    targets, cmask, cval = _masks(g, shift=n)
    kernels.apply_matrix(flat, g.base_matrix(), targets, cmask, cval)
    targets, cmask, cval = _masks(g)
    kernels.apply_matrix(flat, g.base_matrix().conj(), targets, cmask, cval)
    return flat.reshape(rho.shape)


def _bit_mask(dim: int, qubit: int) -> np.ndarray:
    return ((np.arange(dim) >> qubit) & 1).astype(bool)


def apply_circuit(state: QuantumState, circuit: CircuitDescription,
                  seed: int | None = None, record: dict | None = None) -> QuantumState:
    """Evolve ``state`` through ``circuit``; returns a new state.

    Measurements and coins draw from a stream keyed by ``(seed, instruction
    index)``.  Pass a dict as ``record`` to receive the classical bits.
    """
    if circuit.layout.total_qubits != state.n_qubits:
        raise DimensionMismatchError(
            f"circuit acts on {circuit.layout.total_qubits} qubits, state has {state.n_qubits}")
    circuit.validate()
    stochastic = not circuit.is_unitary and any(
        not isinstance(i, Gate) for i in circuit.instructions)
    if stochastic and seed is None:
        raise ValueError("a seed is required for circuits with measurements or coins")
    n = state.n_qubits
    bits: dict = {} if record is None else record

    if state.kind == "ensemble":
        if stochastic:
            state = state.as_density_state()
        else:
            vecs = state._vecs.copy()
            for i in range(vecs.shape[0]):
                for ins in circuit.instructions:
                    _apply_gate_vec(vecs[i], ins)
            return QuantumState(state.layout, "ensemble", vecs=vecs,
                                weights=state._weights, tolerance=state.tolerance)

    if state.kind == "pure":
        vec = state.vector.copy()
        for idx, ins in enumerate(circuit.instructions):
            if isinstance(ins, Gate):
                if all(bits[b] == v for b, v in ins.cbits):
                    _apply_gate_vec(vec, ins)
            elif isinstance(ins, Coin):
                bits[ins.cbit] = int(_stream(seed, idx).random() < 0.5)
            else:
                mask = _bit_mask(vec.shape[0], ins.target)
                p1 = float(np.sum(np.abs(vec[mask]) ** 2))
                outcome = int(_stream(seed, idx).random() < p1)
                keep = mask if outcome else ~mask
                vec[~keep] = 0.0
                vec /= math.sqrt(p1 if outcome else 1.0 - p1)
                bits[ins.cbit] = outcome
        return QuantumState(state.layout, "pure", vec=vec, tolerance=state.tolerance)

    rho = state.density().copy()
    dim = rho.shape[0]
    for idx, ins in enumerate(circuit.instructions):
        if isinstance(ins, Gate):
            if all(bits[b] == v for b, v in ins.cbits):
                rho = _apply_gate_rho(rho, ins, n)
        elif isinstance(ins, Coin):
            bits[ins.cbit] = int(_stream(seed, idx).random() < 0.5)
        else:
            mask = _bit_mask(dim, ins.target)
            p1 = float(np.clip(np.diag(rho).real[mask].sum(), 0.0, 1.0))
            outcome = int(_stream(seed, idx).random() < p1)
            keep = mask if outcome else ~mask
            rho = rho * np.outer(keep, keep)
            rho /= p1 if outcome else 1.0 - p1
            bits[ins.cbit] = outcome
    return QuantumState(state.layout, "density", rho=rho, tolerance=state.tolerance)


def circuit_unitary(circuit: CircuitDescription) -> np.ndarray:
    """Full matrix of a unitary-only circuit (column ``k`` is ``U|k>``)."""
    if not circuit.is_unitary:
        raise ValueError("circuit contains measurements, coins or classical controls")
    n = circuit.layout.total_qubits
    if n > MAX_DENSITY_QUBITS:
        raise CapExceededError(f"a {n}-qubit unitary is too large to materialise")
    dim = 1 << n
    out = np.eye(dim, dtype=np.complex128)
    for k in range(dim):
        col = out[:, k].copy()
        for g in circuit.instructions:
            _apply_gate_vec(col, g)
        out[:, k] = col
    return out


def apply_pauli(vec: np.ndarray, xmask: int, zmask: int) -> np.ndarray:
    return kernels.apply_pauli(np.ascontiguousarray(vec, dtype=np.complex128), xmask, zmask)


# ---------------------------------------------------------------------------
# spectral tools and metrics


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns
    rank_tolerance: float = DEFAULT_RANK_TOL

    @property
    def rank(self) -> int:
        top = self.eigenvalues[0] if self.eigenvalues.size else 0.0
        return int(np.sum(self.eigenvalues > self.rank_tolerance * top))

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def spectral_decomposition(state: QuantumState,
                           rank_tolerance: float = DEFAULT_RANK_TOL) -> SpectralDecomposition:
    evals, evecs = np.linalg.eigh(state.density())
    order = np.argsort(evals)[::-1]
    return SpectralDecomposition(evals[order], evecs[:, order], rank_tolerance)


def numerical_rank(eigenvalues: np.ndarray, rank_tolerance: float = DEFAULT_RANK_TOL) -> int:
    if rank_tolerance <= 0:
        raise ValueError("rank tolerance must be positive")
    ev = np.asarray(eigenvalues, dtype=float)
    top = ev.max(initial=0.0)
    if top <= 0:
        return 0
    return int(np.sum(ev > rank_tolerance * top))


def max_entropy(state: QuantumState, rank_tolerance: float = DEFAULT_RANK_TOL) -> float:
    """log2 of the numerical rank (eigenvalues above ``tol * largest``)."""
    if rank_tolerance <= 0:
        raise ValueError("rank tolerance must be positive")
    return math.log2(numerical_rank(state.eigenvalues(), rank_tolerance))


def _check_same_dims(a: QuantumState, b: QuantumState) -> None:
    if a.n_qubits != b.n_qubits:
        raise DimensionMismatchError(f"{a.n_qubits}-qubit vs {b.n_qubits}-qubit state")


def _difference_eigenvalues(a: QuantumState, b: QuantumState) -> np.ndarray:
    la, lb = a.low_rank(), b.low_rank()
    if la is None or lb is None:
        return np.linalg.eigvalsh(a.density() - b.density())
    # a - b is supported on span of both ensembles; diagonalise it there
    va = la[0].T * np.sqrt(np.clip(la[1], 0.0, None))
    vb = lb[0].T * np.sqrt(np.clip(lb[1], 0.0, None))
    stacked = np.hstack([va, vb])
    u, sv, _ = np.linalg.svd(stacked, full_matrices=False)
    q = u[:, sv > 1e-14 * max(sv.max(initial=0.0), 1.0)]
    pa = q.conj().T @ va
    pb = q.conj().T @ vb
    return np.linalg.eigvalsh(pa @ pa.conj().T - pb @ pb.conj().T)


def trace_distance(a: QuantumState, b: QuantumState) -> float:
    """Half the trace norm of ``a - b`` from the eigenvalues of the difference."""
    _check_same_dims(a, b)
    d = 0.5 * float(np.sum(np.abs(_difference_eigenvalues(a, b))))
    return min(max(d, 0.0), 1.0)


def fidelity(a: QuantumState, b: QuantumState) -> float:
    """Overlap fidelity; requires at least one pure argument."""
    _check_same_dims(a, b)
    if a.kind == "pure" and b.kind == "pure":
        return float(abs(np.vdot(a.vector, b.vector)) ** 2)
    if b.kind == "pure":
        a, b = b, a
    if a.kind != "pure":
        raise ValueError("fidelity here needs at least one pure state")
    lr = b.low_rank()
    if lr is not None:
        vecs, w = lr
        return float(np.sum(w * np.abs(vecs.conj() @ a.vector) ** 2))
    return float(np.real(np.vdot(a.vector, b.density() @ a.vector)))


def _split_matrix(vec: np.ndarray, keep: Sequence[int], n: int) -> np.ndarray:
    """Reshape a vector to ``M[kept_index, rest_index]`` (little-endian groups)."""
    rest = [q for q in range(n) if q not in set(keep)]
    tensor = vec.reshape((2,) * n)  # axis a is qubit n-1-a
    order = [n - 1 - q for q in reversed(list(keep))] + [n - 1 - q for q in reversed(rest)]
    return tensor.transpose(order).reshape(1 << len(keep), 1 << len(rest))


def partial_trace(state: QuantumState, keep: Sequence[str]) -> QuantumState:
    """Reduced density matrix of the named registers (kept in layout order)."""
    keep = list(keep)
    for name in keep:
        state.layout.size(name)
    sub = state.layout.sub(keep)
    qubits = [q for name in sub.names for q in state.layout.qubits(name)]
    if len(qubits) > MAX_DENSITY_QUBITS:
        raise CapExceededError("reduced state exceeds the density-matrix cap")
    n = state.n_qubits
    lr = state.low_rank()
    if lr is not None:
        rho = np.zeros((1 << len(qubits),) * 2, dtype=np.complex128)
        for vec, w in zip(*lr):
            m = _split_matrix(vec, qubits, n)
            rho += w * (m @ m.conj().T)
    else:
        rest = [q for q in range(n) if q not in set(qubits)]
        t = state.density().reshape((2,) * (2 * n))
        # row axes 0..n-1, column axes n..2n-1; axis a <-> qubit n-1-a
        letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
        row = [letters[i] for i in range(n)]
        col = [letters[n + i] for i in range(n)]
        for q in rest:
            col[n - 1 - q] = row[n - 1 - q]
        out_row = [row[n - 1 - q] for q in reversed(qubits)]
        out_col = [col[n - 1 - q] for q in reversed(qubits)]
        spec = "".join(row) + "".join(col) + "->" + "".join(out_row) + "".join(out_col)
        rho = np.einsum(spec, t).reshape((1 << len(qubits),) * 2)
    return QuantumState(sub, "density", rho=rho, tolerance=state.tolerance)


def register_zero_probability(state: QuantumState, names: Sequence[str]) -> float:
    """Probability that every qubit of the named registers reads 0."""
    mask = 0
    for name in names:
        for q in state.layout.qubits(name):
            mask |= 1 << q
    probs = state.probabilities()
    idx = np.arange(probs.shape[0])
    return float(probs[(idx & mask) == 0].sum())


def haar_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_state(n: int, rng: np.random.Generator, layout=None) -> QuantumState:
    return QuantumState.from_vector(haar_vector(1 << n, rng), layout)


# ---------------------------------------------------------------------------
# helpers used by the protocol layers


def preparation_unitary(vec: np.ndarray) -> np.ndarray:
    """A unitary whose first column is ``vec`` (completed by QR)."""
    vec = np.asarray(vec, dtype=np.complex128).reshape(-1)
    d = vec.shape[0]
    mat = np.eye(d, dtype=np.complex128)
    mat[:, 0] = vec
    q, r = np.linalg.qr(mat)
    # QR fixes column 0 up to a phase; undo it so U|0> is exactly vec
    q[:, 0] *= r[0, 0] / abs(r[0, 0])
    return q


def prepare_state_circuit(state: QuantumState | np.ndarray, layout=None) -> CircuitDescription:
    """One-gate circuit mapping ``|0...0>`` to ``state``."""
    vec = state.vector if isinstance(state, QuantumState) else np.asarray(state)
    n = _n_qubits_of_dim(vec.shape[0])
    circ = CircuitDescription(layout if layout is not None else QubitLayout.flat(n))
    return circ.unitary(preparation_unitary(vec), tuple(range(n)))


def register_mapping(source: QubitLayout, target: QubitLayout,
                     rename: dict[str, str] | None = None) -> dict[int, int]:
    """Qubit map sending each register of ``source`` onto the same-named one in ``target``."""
    rename = rename or {}
    mapping: dict[int, int] = {}
    for name, count in source.registers:
        dest = rename.get(name, name)
        try:
            size = target.size(dest)
        except UnknownRegisterError:
            raise DimensionMismatchError(f"register {dest!r} missing from target layout")
        if size != count:
            raise DimensionMismatchError(
                f"register {dest!r} has {size} qubits, expected {count}")
        off_s, off_t = source.offset(name), target.offset(dest)
        for k in range(count):
            mapping[off_s + k] = off_t + k
    return mapping


def embed_circuit(circuit: CircuitDescription, target: QubitLayout,
                  rename: dict[str, str] | None = None) -> CircuitDescription:
    mapping = register_mapping(circuit.layout, target, rename)
    return CircuitDescription(target).extend(circuit, mapping)


def shift_circuit(circuit: CircuitDescription, target: QubitLayout, offset: int) -> CircuitDescription:
    mapping = {q: q + offset for q in range(circuit.layout.total_qubits)}
    return CircuitDescription(target).extend(circuit, mapping)


class ProductState:
    """Tensor product of pure single-copy states, kept factorised.

    ``N`` copies of an ``n``-qubit state need ``N`` vectors of length ``2^n``
    here, so instances beyond the dense cap stay cheap.
    """

    def __init__(self, factors: Sequence[QuantumState]):
        if not factors:
            raise ValueError("a product needs at least one factor")
        for f in factors:
            if f.kind != "pure":
                raise ValueError("product factors must be pure")
        self.factors = list(factors)

    @classmethod
    def copies(cls, state: QuantumState, count: int) -> "ProductState":
        if count < 1:
            raise ValueError("need at least one copy")
        return cls([state] * count)

    @property
    def count(self) -> int:
        return len(self.factors)

    @property
    def n_qubits(self) -> int:
        return sum(f.n_qubits for f in self.factors)

    def to_state(self, name: str = "S") -> QuantumState:
        return product(*self.factors, layout=QubitLayout.of((name, self.n_qubits)))

    def apply_each(self, circuits: Sequence[CircuitDescription]) -> "ProductState":
        return ProductState([apply_circuit(f, c) for f, c in zip(self.factors, circuits)])

    def zero_fidelity(self) -> float:
        """Fidelity with the all-zero state."""
        out = 1.0
        for f in self.factors:
            out *= float(abs(f.vector[0]) ** 2)
        return out

    def distance_to_zero(self) -> float:
        # 1 - prod(1 - eps_j) from the small leakages, which stays accurate near 0
        log_f = 0.0
        for f in self.factors:
            leak = float(np.sum(np.abs(f.vector[1:]) ** 2))
            if leak >= 1.0:
                return 1.0
            log_f += math.log1p(-leak)
        return math.sqrt(max(0.0, -math.expm1(log_f)))
