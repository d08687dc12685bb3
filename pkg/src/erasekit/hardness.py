"""Distinguishing a keyed toy family from Haar-random states by erasing them.

The family is a stand-in for a pseudorandom state ensemble: ``2^lam`` seeded
random degree-2 phase states.  It has no cryptographic property whatsoever.
The distinguisher runs the family's cheap erasure protocol and outputs 0
only when the result passes a one-shot projective check against ``|0...0>``
and the booked work stays below the Haar cost.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import haar_cost
from .learners import BooleanPolynomial, SquareRootMeasurementLearner, monomial_basis
from .qcore import MAX_PURE_QUBITS, CapExceededError, ProductState, QuantumState, haar_vector
from .thermo import ErasureReport, learning_to_erase

THRESHOLD_SLACK = 1e-6
MIN_TRIALS = 30


class ToyFamily:
    def __init__(self, n: int = 3, lam: int = 4, seed: int = 0, degree: int = 2):
        self.n, self.lam, self.seed, self.degree = n, lam, seed, degree
        basis = [m for m in monomial_basis(n, degree) if m]
        if (1 << lam) > (1 << len(basis)):
            raise ValueError(f"only {1 << len(basis)} distinct degree-{degree} phase states exist")
        rng = np.random.default_rng([seed, n, lam, degree])
        # distinct polynomials without constant term give distinct states
        codes = rng.choice(1 << len(basis), size=1 << lam, replace=False)
        self.polynomials = [
            BooleanPolynomial(n, tuple(m for j, m in enumerate(basis) if (int(c) >> j) & 1), degree)
            for c in codes]
        self.states = [p.phase_state() for p in self.polynomials]

    @property
    def size(self) -> int:
        return 1 << self.lam

    def member(self, key: int) -> QuantumState:
        return self.states[key]

    def learner(self, N: int) -> SquareRootMeasurementLearner:
        return SquareRootMeasurementLearner(self.states, N)


def haar_sample(n: int, N: int, seed: int) -> ProductState:
    """``N`` copies of one Haar-random n-qubit state (kept factorised)."""
    if n > MAX_PURE_QUBITS:
        raise CapExceededError(f"a single {n}-qubit copy exceeds the dense cap")
    rng = np.random.default_rng(seed)
    return ProductState.copies(QuantumState.from_vector(haar_vector(1 << n, rng)), N)


class FamilyEraser:
    """The family's learning-to-erase protocol as a reusable handle."""

    def __init__(self, family: ToyFamily, N: int):
        self.family = family
        self.N = N
        self.learner = family.learner(N)

    def __call__(self, copies: ProductState, seed: int) -> ErasureReport:
        return learning_to_erase(copies, self.learner, mode="stochastic", seed=seed)


@dataclass(frozen=True)
class DistinguishOutcome:
    bit: int
    projective_pass: bool
    work_pass: bool
    fidelity: float
    work_bits: float
    reason: str = ""


def distinguish(copies: ProductState, eraser, work_threshold: float, seed: int) -> DistinguishOutcome:
    """0 iff the erased state passes one Born sample of |0><0| and the work is cheap."""
    rng = np.random.default_rng([seed, 1])
    try:
        report = eraser(copies, seed)
    except Exception as exc:
        return DistinguishOutcome(1, False, False, 0.0, math.nan, f"erasure error: {exc}")
    fid = report.final_state.zero_fidelity()
    projective = bool(rng.random() < fid)
    work_ok = bool(report.work_bits < work_threshold)
    return DistinguishOutcome(0 if projective and work_ok else 1, projective, work_ok,
                              fid, float(report.work_bits))


@dataclass
class DistinguisherVerdict:
    n: int
    N: int
    lam: int
    trials: int
    threshold_bits: float
    family_bits: list[int] = field(default_factory=list)
    haar_bits: list[int] = field(default_factory=list)

    @property
    def p_family(self) -> float:
        return float(np.mean(self.family_bits))

    @property
    def p_haar(self) -> float:
        return float(np.mean(self.haar_bits))

    @property
    def advantage(self) -> float:
        return self.p_haar - self.p_family

    @property
    def ci95(self) -> tuple[float, float]:
        # normal interval for a difference of two binomial proportions
        pf, ph = self.p_family, self.p_haar
        half = 1.96 * math.sqrt(pf * (1 - pf) / len(self.family_bits)
                                + ph * (1 - ph) / len(self.haar_bits))
        return max(-1.0, self.advantage - half), min(1.0, self.advantage + half)

    def to_dict(self) -> dict:
        lo, hi = self.ci95
        return {"n": self.n, "N": self.N, "lambda": self.lam, "trials": self.trials,
                "p_family": self.p_family, "p_haar": self.p_haar,
                "advantage": self.advantage, "ci95": [lo, hi],
                "threshold_bits": self.threshold_bits}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def default_threshold(n: int, N: int) -> float:
    return haar_cost(n, N) - THRESHOLD_SLACK


def advantage_experiment(family: ToyFamily, N: int, trials: int, seed: int,
                         work_threshold: float | None = None,
                         haar_arm: str = "haar") -> DistinguisherVerdict:
    """Run both arms; ``haar_arm='family'`` feeds family states to both."""
    if trials < MIN_TRIALS:
        raise ValueError(f"need at least {MIN_TRIALS} trials per arm")
    n = family.n
    threshold = default_threshold(n, N) if work_threshold is None else work_threshold
    eraser = FamilyEraser(family, N)
    verdict = DistinguisherVerdict(n, N, family.lam, trials, threshold)
    for t in range(trials):
        key = int(np.random.default_rng([seed, 0, t]).integers(family.size))
        fam_input = ProductState.copies(family.member(key), N)
        verdict.family_bits.append(distinguish(fam_input, eraser, threshold, seed * 1_000_003 + 2 * t).bit)
    for t in range(trials):
        if haar_arm == "haar":
            other = haar_sample(n, N, int(np.random.default_rng([seed, 1, t]).integers(2**63)))
        elif haar_arm == "family":
            key = int(np.random.default_rng([seed, 1, t]).integers(family.size))
            other = ProductState.copies(family.member(key), N)
        else:
            raise ValueError(f"unknown arm {haar_arm!r}")
        verdict.haar_bits.append(distinguish(other, eraser, threshold, seed * 1_000_003 + 2 * t + 1).bit)
    return verdict
