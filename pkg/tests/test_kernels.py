import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptmc import _pykernels, kernels

try:
    from adaptmc import _ckernels
except ImportError:
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")


@needs_ext
@settings(max_examples=50, deadline=None)
@given(st.integers(1, 60), st.integers(1, 200), st.integers(0, 2**32 - 1))
def test_rescale_accumulate_parity(d, m, seed):
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, d, size=m).astype(np.int64)
    vals = rng.standard_normal(m)
    a = _ckernels.rescale_accumulate(idx, vals, d, d / m)
    b = _pykernels.rescale_accumulate(idx, vals, d, d / m)
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-13)


@needs_ext
@settings(max_examples=50, deadline=None)
@given(st.integers(1, 40), st.integers(0, 8), st.integers(0, 2**32 - 1))
def test_project_residual_parity(m, k, seed):
    k = min(k, m)
    rng = np.random.default_rng(seed)
    Q = np.ascontiguousarray(np.linalg.qr(rng.standard_normal((m, k)))[0]) if k else np.zeros((m, 0))
    x = rng.standard_normal(m)
    ca, ea = _ckernels.project_residual(Q, x)
    cb, eb = _pykernels.project_residual(Q, x)
    np.testing.assert_allclose(ca, cb, atol=1e-12)
    assert abs(ea - eb) <= 1e-12 * max(1.0, x @ x)


@needs_ext
@settings(max_examples=50, deadline=None)
@given(st.integers(2, 50), st.integers(0, 6), st.integers(0, 2**32 - 1))
def test_orthogonalize_parity(d, k, seed):
    k = min(k, d - 1)
    rng = np.random.default_rng(seed)
    U = np.ascontiguousarray(np.linalg.qr(rng.standard_normal((d, k)))[0]) if k else np.zeros((d, 0))
    x = rng.standard_normal(d)
    qa, na = _ckernels.orthogonalize(U, x)
    qb, nb = _pykernels.orthogonalize(U, x)
    np.testing.assert_allclose(qa, qb, atol=1e-12)
    assert abs(na - nb) <= 1e-12 * np.linalg.norm(x)


@needs_ext
def test_mark_seen_parity():
    rng = np.random.default_rng(3)
    for _ in range(20):
        d = int(rng.integers(1, 50))
        rows = rng.integers(0, d, size=int(rng.integers(0, 80))).astype(np.int64)
        s1 = (rng.random(d) < 0.3).astype(np.uint8)
        s2 = s1.copy()
        assert _ckernels.mark_seen(s1, rows) == _pykernels.mark_seen(s2, rows)
        np.testing.assert_array_equal(s1, s2)


def test_orthogonalize_removes_span():
    rng = np.random.default_rng(0)
    U = np.ascontiguousarray(np.linalg.qr(rng.standard_normal((30, 4)))[0])
    q, nrm = kernels.orthogonalize(U, rng.standard_normal(30))
    assert np.abs(U.T @ q).max() < 1e-13
    assert nrm == pytest.approx(np.linalg.norm(q))


def test_backend_env_switch():
    code = "import adaptmc.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, ADAPTMC_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"
    env.pop("ADAPTMC_PURE_PYTHON")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == ("cython" if _ckernels is not None else "python")
