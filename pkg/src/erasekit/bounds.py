"""Counting formulas behind the work costs of the erasure protocols.

All counts are computed with Python big integers; only the final ``log2``
is floating point.  Classes whose size is known only asymptotically return a
:class:`WorkBound` bracket whose constants are fixed conventions, listed in
:data:`BRACKET_CONSTANTS`.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .qcore import QuantumState, numerical_rank, DEFAULT_RANK_TOL
from .stabsim import count_stabilizer_states

VARIANTS = ("explicit", "shallow", "stabilizer", "doped", "phase", "mps_bound")
SAMPLE_BUDGET_CONSTANT = 48
MPS_DEFAULT_EPS = 0.1

BRACKET_CONSTANTS = {
    # shallow circuits on a brickwork of |G|-valued gates
    "shallow": "lower = n*d*log2|G|/4, upper = n*d*(log2|G|/2 + 1)",
    # t T-gates mixed into Clifford layers
    "doped": "lower = (t+1)*n^2/2, upper = (t+1)*(2n^2 + 3n) + t*log2(n)",
    # covering-net bound with both O-constants equal to 1
    "mps_bound": "lower = 2^S*log2(1/(2 eps)), upper = n*4^S*log2(n*4^S/eps)",
}


class UnsupportedVariantError(ValueError):
    pass


@dataclass(frozen=True)
class StateClassDescriptor:
    variant: str
    params: dict = field(default_factory=dict)
    members: tuple | None = None  # explicit states or member circuits

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise UnsupportedVariantError(f"unknown class variant {self.variant!r}")
        for key, val in self.params.items():
            if key in ("eps",):
                if not 0 < val <= 1:
                    raise ValueError("eps must lie in (0, 1]")
            elif key in ("t", "k", "S"):
                if val < 0:
                    raise ValueError(f"{key} must be non-negative")
            elif val < 1:
                raise ValueError(f"{key} must be positive")
        if self.variant == "explicit":
            if not self.members:
                raise ValueError("explicit classes must be nonempty")
        if self.variant == "phase" and self.params["k"] > self.params["n"]:
            raise ValueError("degree k cannot exceed n")

    @classmethod
    def explicit(cls, states: Sequence[QuantumState]) -> "StateClassDescriptor":
        return cls("explicit", {}, tuple(states))

    @classmethod
    def phase(cls, n: int, k: int) -> "StateClassDescriptor":
        return cls("phase", {"n": n, "k": k})

    @classmethod
    def stabilizer(cls, n: int) -> "StateClassDescriptor":
        return cls("stabilizer", {"n": n})

    @classmethod
    def shallow(cls, n: int, d: int, gate_set_size: int) -> "StateClassDescriptor":
        return cls("shallow", {"n": n, "d": d, "G": gate_set_size})

    @classmethod
    def doped(cls, n: int, t: int) -> "StateClassDescriptor":
        return cls("doped", {"n": n, "t": t})

    @classmethod
    def mps_bound(cls, n: int, S: float, eps: float = MPS_DEFAULT_EPS) -> "StateClassDescriptor":
        return cls("mps_bound", {"n": n, "S": S, "eps": eps})

    @property
    def n(self) -> int:
        if self.variant == "explicit":
            return self.members[0].n_qubits
        return int(self.params["n"])

    def label(self) -> str:
        if self.variant == "explicit":
            return f"explicit(m={len(self.members)})"
        inner = ",".join(f"{k}={v}" for k, v in self.params.items())
        return f"{self.variant}({inner})"


@dataclass(frozen=True)
class WorkBound:
    lower_bits: float
    upper_bits: float
    exact: bool
    source: str
    count: int | None = None

    def __post_init__(self):
        if self.lower_bits > self.upper_bits + 1e-12:
            raise ValueError("lower bound exceeds upper bound")

    @property
    def bits(self) -> float:
        if not self.exact:
            raise ValueError(f"{self.source} is only known as a bracket")
        return self.lower_bits


def _exact(count: int, source: str) -> WorkBound:
    bits = math.log2(count)
    return WorkBound(bits, bits, True, source, count)


def phase_monomial_count(n: int, k: int) -> int:
    return sum(math.comb(n, j) for j in range(min(k, n) + 1))


def class_size(descriptor: StateClassDescriptor) -> int:
    """Exact class size where one is defined."""
    v = descriptor.variant
    if v == "explicit":
        return len(descriptor.members)
    if v == "phase":
        return 1 << phase_monomial_count(descriptor.params["n"], descriptor.params["k"])
    if v == "stabilizer":
        return count_stabilizer_states(descriptor.params["n"])
    raise UnsupportedVariantError(f"{v} classes have no exact size here")


def class_log_size(descriptor: StateClassDescriptor) -> WorkBound:
    v, p = descriptor.variant, descriptor.params
    if v == "explicit":
        return _exact(len(descriptor.members), "explicit")
    if v == "phase":
        bits = phase_monomial_count(p["n"], p["k"])
        return WorkBound(float(bits), float(bits), True, "phase", 1 << bits)
    if v == "stabilizer":
        return _exact(count_stabilizer_states(p["n"]), "stabilizer")
    if v == "shallow":
        n, d, g = p["n"], p["d"], p["G"]
        lg = math.log2(g)
        return WorkBound(n * d * lg / 4.0, n * d * (lg / 2.0 + 1.0), False, "shallow")
    if v == "doped":
        n, t = p["n"], p["t"]
        lower = (t + 1) * n * n / 2.0
        upper = (t + 1) * (2.0 * n * n + 3.0 * n) + t * math.log2(n)
        return WorkBound(lower, upper, False, "doped")
    if v == "mps_bound":
        n, s, eps = p["n"], p["S"], p.get("eps", MPS_DEFAULT_EPS)
        width = n * 4.0 ** s
        upper = width * math.log2(width / eps)
        lower = min(2.0 ** s * math.log2(1.0 / (2.0 * eps)), upper)
        return WorkBound(max(lower, 0.0), upper, False, "mps_bound")
    raise UnsupportedVariantError(v)  # pragma: no cover


def haar_count(n: int, N: int) -> int:
    """Dimension of the symmetric subspace of N copies of n qubits."""
    if n < 1 or N < 1:
        raise ValueError("n and N must be at least 1")
    return math.comb(N + (1 << n) - 1, N)


def haar_cost(n: int, N: int) -> float:
    return math.log2(haar_count(n, N))


def haar_envelope(n: int, N: int) -> float:
    return n * N - N * math.log2(N)


def haar_envelope_holds(n: int, N: int) -> bool:
    """Exact check of ``C(N+2^n-1, N) >= 2^{nN} / N^N`` in integers."""
    return haar_count(n, N) * N ** N >= 1 << (n * N)


def copy_threshold(m: int, eps: float) -> int:
    """Smallest N strictly above ``2 ln(m-1) / ln(1/(1-eps^2))``."""
    if m < 2:
        raise ValueError("m must be at least 2")
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    if m == 2 or eps == 1:
        return 1
    value = 2.0 * math.log(m - 1) / math.log(1.0 / (1.0 - eps * eps))
    return math.floor(value) + 1


@dataclass(frozen=True)
class GramCertificate:
    gram: np.ndarray
    diagonally_dominant: bool
    rank: int
    max_offdiagonal_row_sum: float


def gram_certify(states: Sequence[QuantumState], N: int,
                 rank_tolerance: float = DEFAULT_RANK_TOL) -> GramCertificate:
    """Gram matrix of the N-copy states from single-copy overlaps."""
    vecs = np.array([s.vector for s in states])
    gram = (vecs.conj() @ vecs.T) ** N
    off = np.abs(gram) - np.diag(np.abs(np.diag(gram)))
    rows = off.sum(axis=1)
    evals = np.linalg.eigvalsh(0.5 * (gram + gram.conj().T))
    return GramCertificate(gram, bool(np.all(rows < 1.0)),
                           numerical_rank(evals, rank_tolerance), float(rows.max(initial=0.0)))


def sample_budget(m: int, eps: float, delta: float) -> int:
    if m < 1:
        raise ValueError("m must be at least 1")
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    bits = math.log2(max(m, 2)) + math.log2(1.0 / delta)
    return math.ceil(SAMPLE_BUDGET_CONSTANT * bits / (eps * eps))


@dataclass(frozen=True)
class HardnessGap:
    landauer_bits: WorkBound
    haar_bits: float
    lower_envelope: float


def hardness_gap(n: int, N: int, d: int, gate_set_size: int = 16) -> HardnessGap:
    if min(n, N, d) < 1:
        raise ValueError("arguments must be positive")
    return HardnessGap(class_log_size(StateClassDescriptor.shallow(n, d, gate_set_size)),
                       haar_cost(n, N), haar_envelope(n, N))


@dataclass(frozen=True)
class BoundRow:
    cls: str
    n: int
    parameter: str
    lower_bits: float
    upper_bits: float
    exact: bool

    def as_dict(self) -> dict:
        return {"class": self.cls, "n": self.n, "parameter": self.parameter,
                "lower_bits": self.lower_bits, "upper_bits": self.upper_bits,
                "exact": self.exact}


def bound_row(descriptor: StateClassDescriptor, parameter: str = "") -> BoundRow:
    wb = class_log_size(descriptor)
    return BoundRow(descriptor.variant, descriptor.n, parameter, wb.lower_bits,
                    wb.upper_bits, wb.exact)


def rows_to_csv(rows: Sequence[BoundRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["class", "n", "parameter", "lower_bits", "upper_bits", "exact"])
    for r in rows:
        writer.writerow([r.cls, r.n, r.parameter, repr(r.lower_bits), repr(r.upper_bits),
                         str(r.exact).lower()])
    return buf.getvalue()
