"""Stabilizer tableaux, uniform random Cliffords and the Bell-sampling learner.

A :class:`Tableau` records a Clifford ``C`` through the images of the
single-qubit Paulis: row ``i`` (``i < n``) is the destabilizer ``C X_i C^†``
and row ``n + i`` the stabilizer ``C Z_i C^†``.  Rows use the usual ``Y``
convention (``x = z = 1`` on a qubit means ``Y``) with a sign bit.  X and Z
bits are packed into ``uint64`` words, 64 qubits per word.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from . import _gf2
from .qcore import (
    CircuitDescription,
    DimensionMismatchError,
    QuantumState,
    QubitLayout,
    apply_circuit,
    apply_pauli,
    product,
)

MAX_CLIFFORD_QUBITS = 16
SIGN_VOTES = 25
BUDGET_PER_QUBIT = 64


class IncompleteLearningError(RuntimeError):
    """Raised when sampled Paulis never reach rank ``n`` within the budget."""

    def __init__(self, message: str, partial_generators: list["PauliString"]):
        super().__init__(message)
        self.partial_generators = partial_generators


# ---------------------------------------------------------------------------
# Pauli strings


def _g(x1: int, z1: int, x2: int, z2: int) -> int:
    # exponent of i picked up by the single-qubit product P1 P2
    if x1 == 0 and z1 == 0:
        return 0
    if x1 == 1 and z1 == 1:
        return z2 - x2
    if x1 == 1:
        return z2 * (2 * x2 - 1)
    return x2 * (1 - 2 * z2)


@dataclass(frozen=True)
class PauliString:
    """``i**phase`` times a tensor product of I, X, Y, Z."""

    x: tuple[int, ...]
    z: tuple[int, ...]
    phase: int = 0

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(int(b) & 1 for b in self.x))
        object.__setattr__(self, "z", tuple(int(b) & 1 for b in self.z))
        object.__setattr__(self, "phase", int(self.phase) % 4)
        if len(self.x) != len(self.z):
            raise ValueError("x and z must have the same length")

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        phase = 0
        for prefix, p in (("+i", 1), ("-i", 3), ("i", 1), ("+", 0), ("-", 2)):
            if label.startswith(prefix):
                phase, label = p, label[len(prefix):]
                break
        # label characters are written qubit 0 first
        x = [1 if c in "XY" else 0 for c in label]
        z = [1 if c in "ZY" else 0 for c in label]
        if any(c not in "IXYZ" for c in label):
            raise ValueError(f"bad Pauli label {label!r}")
        return cls(tuple(x), tuple(z), phase)

    @classmethod
    def from_bits(cls, vec, sign: int = 0) -> "PauliString":
        vec = np.asarray(vec, dtype=np.uint8)
        n = vec.shape[0] // 2
        return cls(tuple(vec[:n]), tuple(vec[n:]), 2 * (int(sign) & 1))

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def is_hermitian(self) -> bool:
        return self.phase % 2 == 0

    @property
    def sign(self) -> int:
        if not self.is_hermitian:
            raise ValueError("non-Hermitian Pauli has no real sign")
        return 1 if self.phase == 0 else -1

    @property
    def bits(self) -> np.ndarray:
        return np.array(self.x + self.z, dtype=np.uint8)

    @property
    def masks(self) -> tuple[int, int]:
        xm = sum(b << q for q, b in enumerate(self.x))
        zm = sum(b << q for q, b in enumerate(self.z))
        return xm, zm

    def label(self) -> str:
        chars = "".join("IXZY"[xb + 2 * zb] for xb, zb in zip(self.x, self.z))
        return ["+", "+i", "-", "-i"][self.phase] + chars

    def commutes(self, other: "PauliString") -> bool:
        return symplectic_product(self.bits, other.bits) == 0

    def __mul__(self, other: "PauliString") -> "PauliString":
        if self.n != other.n:
            raise DimensionMismatchError("Pauli strings of different length")
        ph = self.phase + other.phase
        for a, b, c, d in zip(self.x, self.z, other.x, other.z):
            ph += _g(a, b, c, d)
        return PauliString(tuple(a ^ c for a, c in zip(self.x, other.x)),
                           tuple(b ^ d for b, d in zip(self.z, other.z)), ph)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        xm, zm = self.masks
        return apply_pauli(vec, xm, zm) * (1j ** self.phase)

    def expectation(self, vec: np.ndarray) -> float:
        return float(np.real(np.vdot(vec, self.apply(vec))))


def symplectic_product(u: np.ndarray, v: np.ndarray) -> int:
    n = u.shape[0] // 2
    return int((np.dot(u[:n], v[n:]) + np.dot(u[n:], v[:n])) & 1)


# ---------------------------------------------------------------------------
# packed tableau


def _words(n: int) -> int:
    return max(1, (n + 63) // 64)


class Tableau:
    def __init__(self, n: int, x: np.ndarray, z: np.ndarray, r: np.ndarray):
        self.n = n
        self.x = x
        self.z = z
        self.r = r

    # construction --------------------------------------------------------
    @classmethod
    def identity(cls, n: int) -> "Tableau":
        w = _words(n)
        x = np.zeros((2 * n, w), dtype=np.uint64)
        z = np.zeros((2 * n, w), dtype=np.uint64)
        for q in range(n):
            x[q, q >> 6] |= np.uint64(1) << np.uint64(q & 63)
            z[n + q, q >> 6] |= np.uint64(1) << np.uint64(q & 63)
        return cls(n, x, z, np.zeros(2 * n, dtype=np.uint8))

    @classmethod
    def from_bits(cls, xbits: np.ndarray, zbits: np.ndarray, r) -> "Tableau":
        xbits = np.asarray(xbits, dtype=np.uint8)
        zbits = np.asarray(zbits, dtype=np.uint8)
        rows, n = xbits.shape
        if rows != 2 * n or zbits.shape != xbits.shape:
            raise DimensionMismatchError("tableau bit matrices must be 2n x n")
        return cls(n, _pack(xbits), _pack(zbits), np.asarray(r, dtype=np.uint8).copy() & 1)

    @classmethod
    def from_circuit(cls, circuit: CircuitDescription) -> "Tableau":
        tab = cls.identity(circuit.layout.total_qubits)
        tab.apply_circuit(circuit)
        return tab

    def copy(self) -> "Tableau":
        return Tableau(self.n, self.x.copy(), self.z.copy(), self.r.copy())

    # bit access ------------------------------------------------------------
    def _col(self, arr: np.ndarray, q: int) -> np.ndarray:
        return ((arr[:, q >> 6] >> np.uint64(q & 63)) & np.uint64(1)).astype(np.uint8)

    def _xor_col(self, arr: np.ndarray, q: int, vals: np.ndarray) -> None:
        arr[:, q >> 6] ^= vals.astype(np.uint64) << np.uint64(q & 63)

    def xbits(self) -> np.ndarray:
        return _unpack(self.x, self.n)

    def zbits(self) -> np.ndarray:
        return _unpack(self.z, self.n)

    def row(self, i: int) -> PauliString:
        xb, zb = self.xbits()[i], self.zbits()[i]
        return PauliString(tuple(xb), tuple(zb), 2 * int(self.r[i]))

    def stabilizers(self) -> list[PauliString]:
        return [self.row(self.n + i) for i in range(self.n)]

    def destabilizers(self) -> list[PauliString]:
        return [self.row(i) for i in range(self.n)]

    # gates ---------------------------------------------------------------
    def h(self, a: int) -> "Tableau":
        xa, za = self._col(self.x, a), self._col(self.z, a)
        self.r ^= xa & za
        self._xor_col(self.x, a, xa ^ za)
        self._xor_col(self.z, a, xa ^ za)
        return self

    def s(self, a: int) -> "Tableau":
        xa, za = self._col(self.x, a), self._col(self.z, a)
        self.r ^= xa & za
        self._xor_col(self.z, a, xa)
        return self

    def cnot(self, a: int, b: int) -> "Tableau":
        if a == b:
            raise ValueError("CNOT control and target must differ")
        xa, za = self._col(self.x, a), self._col(self.z, a)
        xb, zb = self._col(self.x, b), self._col(self.z, b)
        self.r ^= xa & zb & (xb ^ za ^ 1)
        self._xor_col(self.x, b, xa)
        self._xor_col(self.z, a, zb)
        return self

    def sdg(self, a: int) -> "Tableau":
        return self.s(a).s(a).s(a)

    def pauli_z(self, a: int) -> "Tableau":
        self.r ^= self._col(self.x, a)
        return self

    def pauli_x(self, a: int) -> "Tableau":
        self.r ^= self._col(self.z, a)
        return self

    def pauli_y(self, a: int) -> "Tableau":
        self.r ^= self._col(self.x, a) ^ self._col(self.z, a)
        return self

    def apply_circuit(self, circuit: CircuitDescription) -> "Tableau":
        if circuit.layout.total_qubits != self.n:
            raise DimensionMismatchError("circuit and tableau sizes differ")
        for g in circuit.instructions:
            if not hasattr(g, "name") or g.cbits:
                raise ValueError("tableau simulation takes unitary Clifford circuits only")
            name = g.name
            if name in ("cnot", "cx") or (name in ("x", "mcx") and len(g.controls) == 1):
                self._controlled(g, self.cnot)
            elif name in ("cz", "mcz") or (name == "z" and len(g.controls) == 1):
                self._controlled(g, lambda c, t: self.h(t).cnot(c, t).h(t))
            elif g.controls:
                raise ValueError(f"gate {name} with controls is not Clifford here")
            elif name == "swap":
                a, b = g.targets
                self.cnot(a, b).cnot(b, a).cnot(a, b)
            else:
                op = {"h": self.h, "s": self.s, "sdg": self.sdg, "x": self.pauli_x,
                      "y": self.pauli_y, "z": self.pauli_z}.get(name)
                if op is None:
                    raise ValueError(f"gate {name} is not supported by the tableau simulator")
                op(g.targets[0])
        return self

    def _controlled(self, g, op) -> None:
        if len(g.controls) != 1:
            raise ValueError("only singly controlled X/Z are Clifford")
        c, t = g.controls[0], g.targets[0]
        flip = g.control_values[0] == 0
        if flip:
            self.pauli_x(c)
        op(c, t)
        if flip:
            self.pauli_x(c)

    # checks ----------------------------------------------------------------
    def symplectic_matrix(self) -> np.ndarray:
        return np.hstack([self.xbits(), self.zbits()])

    def is_valid(self) -> bool:
        m = self.symplectic_matrix().astype(np.int64)
        n = self.n
        omega = np.zeros((2 * n, 2 * n), dtype=np.int64)
        omega[:n, n:] = np.eye(n, dtype=np.int64)
        omega[n:, :n] = np.eye(n, dtype=np.int64)
        return bool(np.array_equal((m @ omega @ m.T) & 1, omega))

    def __eq__(self, other) -> bool:
        return (isinstance(other, Tableau) and self.n == other.n
                and np.array_equal(self.x, other.x) and np.array_equal(self.z, other.z)
                and np.array_equal(self.r, other.r))

    # dense views -----------------------------------------------------------
    def to_statevector(self) -> np.ndarray:
        """Stabilizer state ``C|0...0>`` by projecting onto the +1 eigenspaces."""
        if self.n > 16:
            raise ValueError("dense view is capped at 16 qubits")
        dim = 1 << self.n
        rng = np.random.default_rng(12345)
        vec = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        for p in self.stabilizers():
            vec = 0.5 * (vec + p.apply(vec))
        vec /= np.linalg.norm(vec)
        k = int(np.argmax(np.abs(vec) > 1e-9))
        return vec * (abs(vec[k]) / vec[k])

    def to_unitary(self) -> np.ndarray:
        """Dense Clifford up to a global phase (columns ``U|k> = D^k U|0>``)."""
        if self.n > 12:
            raise ValueError("dense unitary is capped at 12 qubits")
        dim = 1 << self.n
        destab = self.destabilizers()
        u = np.empty((dim, dim), dtype=np.complex128)
        u[:, 0] = self.to_statevector()
        for k in range(1, dim):
            low = (k & -k).bit_length() - 1
            u[:, k] = destab[low].apply(u[:, k ^ (1 << low)])
        return u

    # serialisation ---------------------------------------------------------
    def to_dict(self) -> dict:
        return {"n": self.n, "x": self.xbits().tolist(), "z": self.zbits().tolist(),
                "r": [int(b) for b in self.r]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Tableau":
        obj = json.loads(text)
        tab = cls.from_bits(np.array(obj["x"]).reshape(-1, obj["n"]),
                            np.array(obj["z"]).reshape(-1, obj["n"]), obj["r"])
        return tab

    def __repr__(self) -> str:
        return f"Tableau(n={self.n})"


def _pack(bits: np.ndarray) -> np.ndarray:
    rows, n = bits.shape
    out = np.zeros((rows, _words(n)), dtype=np.uint64)
    for q in range(n):
        out[:, q >> 6] |= bits[:, q].astype(np.uint64) << np.uint64(q & 63)
    return out


def _unpack(words: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros((words.shape[0], n), dtype=np.uint8)
    for q in range(n):
        out[:, q] = ((words[:, q >> 6] >> np.uint64(q & 63)) & np.uint64(1)).astype(np.uint8)
    return out


# ---------------------------------------------------------------------------
# uniform random Clifford


def _symp(u: np.ndarray, v: np.ndarray, n: int) -> int:
    return int((np.dot(u[:n], v[n:]) + np.dot(u[n:], v[:n])) & 1)


def random_symplectic(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform element of Sp(2n, 2) as rows (destabilizers first).

    Pairs are drawn one at a time from the symplectic complement of the pairs
    already chosen, which is exactly uniform.
    """
    basis = [np.eye(2 * n, dtype=np.uint8)[i] for i in range(2 * n)]
    destab, stab = [], []
    for _ in range(n):
        dim = len(basis)
        mat = np.array(basis, dtype=np.uint8)
        while True:
            c = rng.integers(0, 2, size=dim, dtype=np.uint8)
            if c.any():
                break
        v = (c @ mat) & 1
        while True:
            c = rng.integers(0, 2, size=dim, dtype=np.uint8)
            w = (c @ mat) & 1
            if _symp(v, w, n):
                break
        destab.append(v.astype(np.uint8))
        stab.append(w.astype(np.uint8))
        projected = []
        for u in basis:
            u2 = u.copy()
            if _symp(u, w, n):
                u2 ^= v
            if _symp(u, v, n):
                u2 ^= w
            projected.append(u2)
        reduced, pivots = _gf2.row_reduce(np.array(projected))
        basis = [reduced[i] for i in range(len(pivots))]
    return np.array(destab + stab, dtype=np.uint8)


def random_clifford_tableau(n: int, rng: np.random.Generator) -> Tableau:
    if not 1 <= n <= MAX_CLIFFORD_QUBITS:
        raise ValueError(f"n must lie in 1..{MAX_CLIFFORD_QUBITS}, got {n}")
    sym = random_symplectic(n, rng)
    signs = rng.integers(0, 2, size=2 * n, dtype=np.uint8)
    return Tableau.from_bits(sym[:, :n], sym[:, n:], signs)


def _synthesis_gates(tableau: Tableau) -> list[tuple]:
    """Gates ``G`` (in order) with ``G_k ... G_1 C`` equal to the identity."""
    tab = tableau.copy()
    n = tab.n
    ops: list[tuple] = []

    def do(*op):
        ops.append(op)
        if op[0] == "h":
            tab.h(op[1])
        elif op[0] == "s":
            tab.s(op[1])
        else:
            tab.cnot(op[1], op[2])

    for i in range(n):
        # destabilizer i -> X_i
        xs, zs = tab.xbits()[i], tab.zbits()[i]
        cand = [j for j in range(i, n) if xs[j]]
        if not cand:
            cand = [j for j in range(i, n) if zs[j]]
            do("h", cand[0])
        j = cand[0]
        if j != i:
            do("cnot", i, j)
            do("cnot", j, i)
            do("cnot", i, j)
        for j in range(i + 1, n):
            if tab.xbits()[i][j]:
                do("cnot", i, j)
        zs = tab.zbits()[i]
        if any(zs[i + 1:]):
            if not zs[i]:
                do("s", i)
            for j in range(i + 1, n):
                if tab.zbits()[i][j]:
                    do("cnot", j, i)
        if tab.zbits()[i][i]:
            do("s", i)
        # stabilizer i -> Z_i, keeping X_i fixed
        row = n + i
        for j in range(i + 1, n):
            xj, zj = tab.xbits()[row][j], tab.zbits()[row][j]
            if xj and zj:
                do("s", j)
                do("h", j)
            elif xj:
                do("h", j)
            if tab.zbits()[row][j]:
                do("cnot", j, i)
        if tab.xbits()[row][i]:
            do("h", i)
            do("s", i)
            do("h", i)
    for i in range(n):
        if tab.r[i]:
            do("s", i)
            do("s", i)
        if tab.r[n + i]:
            do("h", i)
            do("s", i)
            do("s", i)
            do("h", i)
    if tab != Tableau.identity(n):  # pragma: no cover - guards the reduction
        raise RuntimeError("tableau reduction did not reach the identity")
    return ops


def synthesize(tableau: Tableau, layout: QubitLayout | None = None) -> CircuitDescription:
    """H/S/CNOT circuit whose tableau equals ``tableau``."""
    circ = CircuitDescription(layout or QubitLayout.flat(tableau.n))
    for op in reversed(_synthesis_gates(tableau)):
        if op[0] == "h":
            circ.h(op[1])
        elif op[0] == "s":
            for _ in range(3):
                circ.s(op[1])
        else:
            circ.cnot(op[1], op[2])
    return circ


def random_clifford(n: int, seed: int) -> CircuitDescription:
    """Uniformly random n-qubit Clifford as an H/S/CNOT circuit."""
    rng = np.random.default_rng(seed)
    return synthesize(random_clifford_tableau(n, rng))


# ---------------------------------------------------------------------------
# dense enumeration for small n


def _canonical_key(arr: np.ndarray) -> bytes:
    flat = arr.reshape(-1)
    k = int(np.argmax(np.abs(flat) > 1e-9))
    norm = flat * (abs(flat[k]) / flat[k])
    return (np.round(norm, 7) + 0.0).tobytes()


def _dense_generators(n: int) -> list[np.ndarray]:
    gens = []
    for q in range(n):
        for name in ("h", "s"):
            gens.append(_gate_unitary(n, lambda c, q=q, name=name: c.gate(name, q)))
    for a in range(n):
        for b in range(n):
            if a != b:
                gens.append(_gate_unitary(n, lambda c, a=a, b=b: c.cnot(a, b)))
    return gens


def _gate_unitary(n: int, build: Callable) -> np.ndarray:
    from .qcore import circuit_unitary

    circ = CircuitDescription(n)
    build(circ)
    return circuit_unitary(circ)


@lru_cache(maxsize=None)
def clifford_table(n: int) -> np.ndarray:
    """All n-qubit Cliffords modulo phase as dense unitaries (n <= 2)."""
    if n > 2:
        raise ValueError("dense Clifford enumeration is limited to n <= 2")
    gens = _dense_generators(n)
    start = np.eye(1 << n, dtype=np.complex128)
    seen = {_canonical_key(start): start}
    frontier = [start]
    while frontier:
        nxt = []
        for u in frontier:
            for g in gens:
                v = g @ u
                key = _canonical_key(v)
                if key not in seen:
                    seen[key] = v
                    nxt.append(v)
        frontier = nxt
    return np.array(list(seen.values()))


@lru_cache(maxsize=None)
def enumerate_stabilizer_states(n: int) -> tuple[np.ndarray, ...]:
    """All n-qubit stabilizer states (modulo phase) by breadth-first search."""
    if n > 3:
        raise ValueError("dense stabilizer-state enumeration is limited to n <= 3")
    gens = _dense_generators(n)
    start = np.zeros(1 << n, dtype=np.complex128)
    start[0] = 1.0
    seen = {_canonical_key(start): start}
    frontier = [start]
    while frontier:
        nxt = []
        for v in frontier:
            for g in gens:
                w = g @ v
                key = _canonical_key(w)
                if key not in seen:
                    seen[key] = w
                    nxt.append(w)
        frontier = nxt
    return tuple(seen[k] for k in sorted(seen))


def count_stabilizer_states(n: int) -> int:
    """Exact number of n-qubit stabilizer states, ``2^n prod_k (2^k + 1)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    total = 1 << n
    for k in range(1, n + 1):
        total *= (1 << k) + 1
    return total


def random_stabilizer_state(n: int, rng: np.random.Generator) -> QuantumState:
    return QuantumState.from_vector(random_clifford_tableau(n, rng).to_statevector())


# ---------------------------------------------------------------------------
# Bell-sampling learner


def _bell_circuit(n: int) -> CircuitDescription:
    circ = CircuitDescription(QubitLayout.of(("A", n), ("B", n)))
    for q in range(n):
        circ.cnot(q, n + q)
        circ.h(q)
    return circ


def bell_sample(state_a: QuantumState, state_b: QuantumState,
                rng: np.random.Generator) -> np.ndarray:
    """Bell-basis measurement of two n-qubit copies as a Pauli bit vector.

    Returns ``(x | z)`` with the z bits read from the first copy and the x bits
    from the second.
    """
    n = state_a.n_qubits
    pair = product(state_a.relabel(QubitLayout.of(("A", n))),
                   state_b.relabel(QubitLayout.of(("B", n))))
    out = apply_circuit(pair, _bell_circuit(n))
    probs = out.probabilities()
    k = int(rng.choice(probs.shape[0], p=probs / probs.sum()))
    zbits = [(k >> q) & 1 for q in range(n)]
    xbits = [(k >> (n + q)) & 1 for q in range(n)]
    return np.array(xbits + zbits, dtype=np.uint8)


def measure_pauli(state: QuantumState, pauli: PauliString, rng: np.random.Generator) -> int:
    """Projective measurement of a Hermitian Pauli; returns +1 or -1."""
    if state.kind == "pure":
        ev = pauli.expectation(state.vector)
    else:
        rho = state.density()
        cols = np.stack([pauli.apply(rho[:, k].copy()) for k in range(rho.shape[0])], axis=1)
        ev = float(np.real(np.trace(cols)))
    p_plus = min(max(0.5 * (1.0 + ev), 0.0), 1.0)
    return 1 if rng.random() < p_plus else -1


def complete_tableau(stabilizers: list[PauliString]) -> Tableau:
    """Tableau with the given commuting, independent stabilizers.

    Destabilizers come from a symplectic Gram-Schmidt pass.
    """
    n = len(stabilizers)
    s = np.array([p.bits for p in stabilizers], dtype=np.uint8)
    if _gf2.rank(s) != n:
        raise ValueError("stabilizers are not independent")
    for i in range(n):
        for j in range(i + 1, n):
            if _symp(s[i], s[j], n):
                raise ValueError("stabilizers do not commute")
    # <d, s_j> = d_x . s_jz + d_z . s_jx
    a = np.hstack([s[:, n:], s[:, :n]])
    destab = []
    for i in range(n):
        e = np.zeros(n, dtype=np.uint8)
        e[i] = 1
        d = _gf2.solve(a, e)
        for j, prev in enumerate(destab):
            if _symp(d, prev, n):
                d = d ^ s[j]
        destab.append(d)
    rows = np.array(destab + list(s), dtype=np.uint8)
    signs = [0] * n + [0 if p.sign == 1 else 1 for p in stabilizers]
    return Tableau.from_bits(rows[:, :n], rows[:, n:], signs)


def bell_sampling_learn(supplier: Callable[[], QuantumState], n: int,
                        budget: int | None = None, seed: int = 0,
                        votes: int = SIGN_VOTES) -> CircuitDescription:
    """Learn an unknown stabilizer state from copies drawn from ``supplier``.

    Bell samples on pairs of copies lie in a fixed coset of the stabilizer
    group, so sums of two samples lie in the group itself.  Once the sums
    span ``n`` dimensions, each generator's sign is fixed by majority vote
    over ``votes`` fresh single-copy measurements.
    """
    budget = BUDGET_PER_QUBIT * n if budget is None else int(budget)
    rng = np.random.default_rng(seed)
    sign_cost = votes * n
    used = 0
    basis = _gf2.IncrementalBasis(2 * n)
    first = None
    while len(basis) < n and used + 2 + sign_cost <= budget:
        sample = bell_sample(supplier(), supplier(), rng)
        used += 2
        if first is None:
            first = sample
            continue
        basis.add(sample ^ first)
    if len(basis) < n:
        partial = [PauliString.from_bits(v) for v in basis.originals]
        raise IncompleteLearningError(
            f"found {len(basis)} of {n} generators within a budget of {budget} copies", partial)
    gens = []
    for vec in basis.originals:
        p = PauliString.from_bits(vec)
        tally = sum(measure_pauli(supplier(), p, rng) for _ in range(votes))
        gens.append(PauliString.from_bits(vec, 0 if tally > 0 else 1))
    return synthesize(complete_tableau(gens))
