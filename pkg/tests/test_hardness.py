import json
import math

import numpy as np
import pytest

from erasekit.bounds import haar_cost
from erasekit.hardness import (
    FamilyEraser,
    ToyFamily,
    advantage_experiment,
    default_threshold,
    distinguish,
    haar_sample,
)
from erasekit.qcore import CapExceededError, ProductState, QuantumState

PAULI = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.array([[1, 0], [0, -1]])]


@pytest.fixture(scope="module")
def family():
    return ToyFamily(n=3, lam=4, seed=0)


def test_family_is_deterministic_and_distinct(family):
    again = ToyFamily(n=3, lam=4, seed=0)
    assert [p.monomials for p in again.polynomials] == [p.monomials for p in family.polynomials]
    vecs = np.array([s.vector for s in family.states])
    overlaps = np.abs(vecs.conj() @ vecs.T) - np.eye(family.size)
    assert overlaps.max() < 1 - 1e-9
    assert family.size == 16


def test_family_rejects_oversized_key_space():
    with pytest.raises(ValueError):
        ToyFamily(n=2, lam=4)


def test_haar_bloch_vector_averages_out():
    bloch = np.zeros(3)
    draws = 10**4
    for seed in range(draws):
        rho = haar_sample(1, 1, seed).factors[0].density()
        bloch += [np.trace(rho @ p).real for p in PAULI]
    assert np.linalg.norm(bloch / draws) <= 0.05


def test_haar_copies_share_marginals():
    prod = haar_sample(2, 4, 9)
    assert all(np.allclose(f.vector, prod.factors[0].vector) for f in prod.factors)


@pytest.mark.parametrize("n", [1, 3])
def test_haar_average_fidelity(n):
    draws = 4000
    target = QuantumState.basis(n, 1).vector
    fids = np.array([abs(np.vdot(target, haar_sample(n, 1, s).factors[0].vector)) ** 2
                     for s in range(draws)])
    d = 2**n
    sigma = math.sqrt((2 / (d * (d + 1)) - 1 / d**2) / draws)
    assert abs(fids.mean() - 1 / d) <= 3 * sigma


def test_haar_sample_cap():
    with pytest.raises(CapExceededError):
        haar_sample(17, 1, 0)


def test_family_inputs_pass(family):
    N = 6
    eraser = FamilyEraser(family, N)
    threshold = haar_cost(3, N)
    zeros = sum(distinguish(ProductState.copies(family.member(t % 16), N), eraser, threshold,
                            seed=t).bit == 0 for t in range(100))
    assert zeros >= 90


def test_haar_inputs_fail(family):
    N = 6
    eraser = FamilyEraser(family, N)
    threshold = haar_cost(3, N)
    ones = sum(distinguish(haar_sample(3, N, 500 + t), eraser, threshold, seed=t).bit == 1
               for t in range(100))
    assert ones >= 90


def test_zero_threshold_always_rejects(family):
    eraser = FamilyEraser(family, 6)
    for t in range(20):
        out = distinguish(ProductState.copies(family.member(t % 16), 6), eraser, 0.0, seed=t)
        assert out.bit == 1 and not out.work_pass


def test_erasure_error_gives_verdict_one(family):
    def broken(copies, seed):
        raise RuntimeError("bath unavailable")

    out = distinguish(ProductState.copies(family.member(0), 6), broken, 10.0, seed=0)
    assert out.bit == 1
    assert "bath unavailable" in out.reason


def test_advantage_experiment_default(family):
    verdict = advantage_experiment(family, N=6, trials=100, seed=1)
    assert verdict.advantage >= 0.8
    assert verdict.p_family <= 0.05
    lo, hi = verdict.ci95
    assert -1 <= lo <= verdict.advantage <= hi <= 1
    assert verdict.threshold_bits == pytest.approx(default_threshold(3, 6))


def test_identical_arms_have_no_advantage(family):
    verdict = advantage_experiment(family, N=6, trials=60, seed=2, haar_arm="family")
    lo, hi = verdict.ci95
    assert abs(verdict.advantage) <= max(0.1, hi - lo)
    assert verdict.p_family == pytest.approx(verdict.p_haar, abs=0.1)


def test_advantage_grows_with_copies(family):
    adv = [advantage_experiment(family, N=N, trials=60, seed=3).advantage for N in (2, 4, 8)]
    # trend check with one binomial standard error of slack at 60 trials
    slack = 1 / math.sqrt(60)
    assert adv[0] <= adv[1] + slack and adv[1] <= adv[2] + slack
    assert adv[2] >= adv[0]


def test_haar_arm_work_is_family_cost(family):
    N = 6
    eraser = FamilyEraser(family, N)
    for t in range(40):
        out = distinguish(haar_sample(3, N, 900 + t), eraser, default_threshold(3, N), seed=t)
        assert out.work_bits == family.lam
        if out.projective_pass:
            # Born luck alone; the booked cost is still the family's lam bits
            assert out.bit == 0


def test_minimum_trials(family):
    with pytest.raises(ValueError):
        advantage_experiment(family, N=6, trials=10, seed=0)


def test_verdict_json_keys(family):
    verdict = advantage_experiment(family, N=4, trials=30, seed=4)
    data = json.loads(verdict.to_json())
    assert set(data) == {"n", "N", "lambda", "trials", "p_family", "p_haar", "advantage",
                         "ci95", "threshold_bits"}
    assert data["lambda"] == 4 and data["trials"] == 30


def test_experiment_is_deterministic(family):
    a = advantage_experiment(family, N=4, trials=30, seed=5).to_json()
    b = advantage_experiment(family, N=4, trials=30, seed=5).to_json()
    assert a == b
