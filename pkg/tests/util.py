"""Shared generators for the test suite."""

import numpy as np

from erasekit.qcore import CircuitDescription, QuantumState, haar_vector


def random_unitary(dim, rng):
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_circuit(layout, depth, rng, clifford_only=False):
    circ = CircuitDescription(layout)
    n = circ.layout.total_qubits
    names = ["h", "s", "cnot", "cz", "x", "z"] if clifford_only else \
        ["h", "s", "t", "cnot", "cz", "u1", "u2", "y", "mcz"]
    for _ in range(depth):
        name = names[rng.integers(len(names))]
        if name in ("cnot", "cz", "u2", "mcz") and n < 2:
            name = "h"
        if name in ("h", "s", "t", "x", "y", "z"):
            circ.gate(name, int(rng.integers(n)))
        elif name == "u1":
            circ.unitary(random_unitary(2, rng), [int(rng.integers(n))])
        elif name == "u2":
            a, b = rng.choice(n, size=2, replace=False)
            circ.unitary(random_unitary(4, rng), [int(a), int(b)])
        elif name == "mcz":
            k = int(rng.integers(2, min(n, 3) + 1))
            circ.mcz([int(q) for q in rng.choice(n, size=k, replace=False)])
        else:
            a, b = rng.choice(n, size=2, replace=False)
            getattr(circ, name)(int(a), int(b))
    return circ


def random_pure(n, rng, layout=None):
    return QuantumState.from_vector(haar_vector(1 << n, rng), layout)


def random_mixed(n, rank, rng):
    vecs = np.array([haar_vector(1 << n, rng) for _ in range(rank)])
    w = rng.dirichlet(np.ones(rank))
    rho = (vecs.T * w) @ vecs.conj()
    return QuantumState.from_density(rho)
