"""Small dense linear algebra over GF(2) on 0/1 ``uint8`` arrays."""

from __future__ import annotations

import numpy as np


def row_reduce(mat: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form and pivot columns."""
    m = (np.array(mat, dtype=np.uint8) & 1).copy()
    rows, cols = m.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hits = np.nonzero(m[r:, c])[0]
        if hits.size == 0:
            continue
        p = r + hits[0]
        if p != r:
            m[[r, p]] = m[[p, r]]
        others = np.nonzero(m[:, c])[0]
        others = others[others != r]
        m[others] ^= m[r]
        pivots.append(c)
        r += 1
    return m, pivots


def rank(mat: np.ndarray) -> int:
    if np.asarray(mat).size == 0:
        return 0
    return len(row_reduce(mat)[1])


def solve(a: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """One solution of ``a @ x = b`` (mod 2), or ``None`` if inconsistent."""
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8).reshape(-1, 1)
    aug, pivots = row_reduce(np.hstack([a, b]))
    cols = a.shape[1]
    if cols in pivots:
        return None
    x = np.zeros(cols, dtype=np.uint8)
    for r, c in enumerate(pivots):
        x[c] = aug[r, -1]
    return x


def nullity(a: np.ndarray) -> int:
    return np.asarray(a).shape[1] - rank(a)


class IncrementalBasis:
    """Keeps an echelon basis so membership tests are cheap as rows arrive."""

    def __init__(self, width: int):
        self.width = width
        self._rows: list[np.ndarray] = []
        self._pivots: list[int] = []
        self.originals: list[np.ndarray] = []

    def _reduce(self, vec: np.ndarray) -> np.ndarray:
        v = vec.copy()
        for row, piv in zip(self._rows, self._pivots):
            if v[piv]:
                v ^= row
        return v

    def add(self, vec) -> bool:
        v = np.asarray(vec, dtype=np.uint8) & 1
        red = self._reduce(v)
        nz = np.nonzero(red)[0]
        if nz.size == 0:
            return False
        self._rows.append(red)
        self._pivots.append(int(nz[0]))
        self.originals.append(v.copy())
        return True

    def __len__(self) -> int:
        return len(self._rows)
