import numpy as np
import pytest
from hypothesis import given, strategies as st

from erasekit import kernels
from erasekit._accel import NUMBA_IMPORTABLE

BACKENDS = ["numpy"] + (["numba"] if NUMBA_IMPORTABLE else [])


def _kernel(name, backend):
    return getattr(kernels, f"{name}_{backend}")


def _dense_reference(vec, mat, targets, ctrl_mask, ctrl_val):
    """Full 2^n unitary built index by index (independent of both kernels)."""
    dim = vec.shape[0]
    full = np.zeros((dim, dim), dtype=complex)
    tmask = sum(1 << t for t in targets)
    for col in range(dim):
        if (col & ctrl_mask) != ctrl_val:
            full[col, col] = 1.0
            continue
        j = sum(((col >> t) & 1) << b for b, t in enumerate(targets))
        for i in range(mat.shape[0]):
            row = col & ~tmask
            for b, t in enumerate(targets):
                row |= ((i >> b) & 1) << t
            full[row, col] += mat[i, j]
    return full @ vec


@pytest.mark.parametrize("backend", BACKENDS)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 6), k=st.integers(1, 2))
def test_apply_matrix_matches_dense(backend, seed, n, k):
    rng = np.random.default_rng(seed)
    targets = rng.choice(n, size=k, replace=False)
    others = [q for q in range(n) if q not in targets]
    ctrl = int(rng.choice(others)) if others and rng.random() < 0.5 else None
    ctrl_mask = 0 if ctrl is None else 1 << ctrl
    ctrl_val = ctrl_mask if ctrl is not None and rng.random() < 0.5 else 0
    vec = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    mat = rng.normal(size=(1 << k, 1 << k)) + 1j * rng.normal(size=(1 << k, 1 << k))
    want = _dense_reference(vec, mat, list(targets), ctrl_mask, ctrl_val)
    got = _kernel("apply_matrix", backend)(vec.copy(), mat, targets, ctrl_mask, ctrl_val)
    np.testing.assert_allclose(got, want, atol=1e-10)


@pytest.mark.parametrize("backend", BACKENDS)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6))
def test_apply_pauli_matches_kron(backend, seed, n):
    rng = np.random.default_rng(seed)
    x, z = (int(v) for v in rng.integers(0, 1 << n, size=2))
    paulis = {(0, 0): np.eye(2), (1, 0): np.array([[0, 1], [1, 0]]),
              (0, 1): np.diag([1, -1]), (1, 1): np.array([[0, -1j], [1j, 0]])}
    full = np.eye(1)
    for q in range(n):
        full = np.kron(paulis[((x >> q) & 1, (z >> q) & 1)], full)
    vec = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    np.testing.assert_allclose(_kernel("apply_pauli", backend)(vec, x, z), full @ vec, atol=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("size", [2, 17, 1000])
def test_bath_work_matches_direct_sum(backend, size):
    beta = 0.7
    levels = np.arange(size) / np.sqrt(size)
    pops = np.exp(-beta * levels) / (1 + np.exp(-beta * levels))
    want = np.sum(np.diff(levels) * pops[:-1]) - levels[-1] * pops[-1]
    assert _kernel("bath_work", backend)(size, beta) == pytest.approx(want, rel=1e-12)


def test_backends_agree_bitwise_on_bath():
    if not NUMBA_IMPORTABLE:
        pytest.skip("numba unavailable")
    a = kernels.bath_work_numpy(10**5, 1.0)
    b = kernels.bath_work_numba(10**5, 1.0)
    assert a == pytest.approx(b, rel=1e-12)


def test_env_flag_selects_numpy(tmp_path):
    import subprocess
    import sys

    code = "from erasekit import kernels, BACKEND; print(BACKEND, kernels.apply_matrix.__name__)"
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                         env={"ERASEKIT_DISABLE_NUMBA": "1", "PATH": "/usr/bin:/bin"})
    assert out.stdout.split() == ["numpy", "apply_matrix_numpy"]
