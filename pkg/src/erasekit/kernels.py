"""Hot inner loops of the dense simulator.

Every kernel exists twice: a numba-compiled loop (``*_numba``) and a
vectorised numpy version (``*_numpy``).  The unsuffixed name is bound to the
backend chosen in :mod:`erasekit._accel`.

Amplitude indices are little-endian: bit ``q`` of a flat index is qubit ``q``.
A ``k``-qubit matrix acts on ``targets`` with ``targets[0]`` as the least
significant bit of the local index.
"""

from __future__ import annotations

import numpy as np

from ._accel import USE_NUMBA, maybe_njit


def _local_offsets(targets: np.ndarray) -> np.ndarray:
    k = targets.shape[0]
    offsets = np.zeros(1 << k, dtype=np.int64)
    for j in range(1 << k):
        off = 0
        for b in range(k):
            if (j >> b) & 1:
                off |= 1 << targets[b]
        offsets[j] = off
    return offsets


# ---------------------------------------------------------------------------
# k-qubit (controlled) matrix application, in place


def _apply_matrix_loop(vec, mat, targets, ctrl_mask, ctrl_val):
    k = targets.shape[0]
    dim = 1 << k
    tmask = 0
    for b in range(k):
        tmask |= 1 << targets[b]
    offsets = np.zeros(dim, dtype=np.int64)
    for j in range(dim):
        off = 0
        for b in range(k):
            if (j >> b) & 1:
                off |= 1 << targets[b]
        offsets[j] = off
    buf = np.empty(dim, dtype=np.complex128)
    n = vec.shape[0]
    for base in range(n):
        if base & tmask:
            continue
        if (base & ctrl_mask) != ctrl_val:
            continue
        for j in range(dim):
            buf[j] = vec[base + offsets[j]]
        for i in range(dim):
            acc = 0j
            for j in range(dim):
                acc += mat[i, j] * buf[j]
            vec[base + offsets[i]] = acc
    return vec


def apply_matrix_numpy(vec, mat, targets, ctrl_mask=0, ctrl_val=0):
    targets = np.asarray(targets, dtype=np.int64)
    tmask = int(np.bitwise_or.reduce(np.left_shift(1, targets))) if targets.size else 0
    idx = np.arange(vec.shape[0], dtype=np.int64)
    keep = ((idx & tmask) == 0) & ((idx & ctrl_mask) == ctrl_val)
    bases = idx[keep]
    gather = bases[:, None] + _local_offsets(targets)[None, :]
    vec[gather] = vec[gather] @ np.asarray(mat).T
    return vec


_apply_matrix_jit = maybe_njit(_apply_matrix_loop)


def apply_matrix_numba(vec, mat, targets, ctrl_mask=0, ctrl_val=0):
    return _apply_matrix_jit(
        vec,
        np.ascontiguousarray(mat, dtype=np.complex128),
        np.asarray(targets, dtype=np.int64),
        np.int64(ctrl_mask),
        np.int64(ctrl_val),
    )


# ---------------------------------------------------------------------------
# Pauli string application: P|k> = i^{|x&z|} (-1)^{|k&z|} |k ^ x>


def _apply_pauli_loop(vec, xmask, zmask, out):
    ny = 0
    t = xmask & zmask
    while t:
        ny += t & 1
        t >>= 1
    r = ny % 4
    if r == 0:
        ph = 1.0 + 0j
    elif r == 1:
        ph = 1j
    elif r == 2:
        ph = -1.0 + 0j
    else:
        ph = -1j
    for k in range(vec.shape[0]):
        par = 0
        t = k & zmask
        while t:
            par ^= t & 1
            t >>= 1
        amp = vec[k] * ph
        if par:
            amp = -amp
        out[k ^ xmask] = amp
    return out


def apply_pauli_numpy(vec, xmask, zmask):
    idx = np.arange(vec.shape[0], dtype=np.int64)
    ny = int(np.bitwise_count(np.int64(xmask & zmask)))
    sign = 1 - 2 * (np.bitwise_count(idx & zmask).astype(np.int64) & 1)
    out = np.empty_like(vec)
    out[idx ^ xmask] = vec * sign * (1j**ny)
    return out


_apply_pauli_jit = maybe_njit(_apply_pauli_loop)


def apply_pauli_numba(vec, xmask, zmask):
    out = np.empty_like(vec)
    return _apply_pauli_jit(vec, np.int64(xmask), np.int64(zmask), out)


# ---------------------------------------------------------------------------
# Finite-bath swap-chain work sum (energy units). Level schedule (i-1)/sqrt(E).


def _bath_work_loop(size, beta):
    scale = 1.0 / np.sqrt(size)
    total = 0.0
    for i in range(2, size + 1):
        prev = (i - 2) * scale
        e = np.exp(-beta * prev)
        total += scale * e / (1.0 + e)
    last = (size - 1) * scale
    e = np.exp(-beta * last)
    total -= last * e / (1.0 + e)
    return total


def bath_work_numpy(size, beta):
    scale = 1.0 / np.sqrt(size)
    prev = np.arange(size - 1, dtype=np.float64) * scale
    e = np.exp(-beta * prev)
    total = scale * np.sum(e / (1.0 + e))
    last = (size - 1) * scale
    e_last = np.exp(-beta * last)
    return float(total - last * e_last / (1.0 + e_last))


_bath_work_jit = maybe_njit(_bath_work_loop)


def bath_work_numba(size, beta):
    return float(_bath_work_jit(np.int64(size), np.float64(beta)))


if USE_NUMBA:
    apply_matrix = apply_matrix_numba
    apply_pauli = apply_pauli_numba
    bath_work = bath_work_numba
else:
    apply_matrix = apply_matrix_numpy
    apply_pauli = apply_pauli_numpy
    bath_work = bath_work_numpy

__all__ = [
    "apply_matrix",
    "apply_matrix_numba",
    "apply_matrix_numpy",
    "apply_pauli",
    "apply_pauli_numba",
    "apply_pauli_numpy",
    "bath_work",
    "bath_work_numba",
    "bath_work_numpy",
]
