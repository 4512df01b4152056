import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptmc.instances import (
    AdjustedSpecWarning,
    InstanceSpec,
    column_coherence,
    enumerate_hard_family,
    hard_family_member,
    make_low_rank,
    make_lower_bound_instance,
    subspace_coherence,
)
from adaptmc.sampling import InvalidArgument
from adaptmc.subspace import OrthoBasis


def test_constant_direction():
    inst = make_low_rank(InstanceSpec(20, 30, 1, 1.0), np.random.default_rng(0))
    assert inst.realized_mu0 == pytest.approx(1.0)
    col = inst.matrix[:, 0]
    np.testing.assert_allclose(np.abs(col), np.abs(col[0]))


def test_spike_direction():
    inst = make_low_rank(InstanceSpec(20, 30, 1, 20.0), np.random.default_rng(0))
    assert inst.realized_mu0 == pytest.approx(20.0)
    assert np.count_nonzero(inst.matrix.any(axis=1)) == 1


def test_standard_instance_rank_and_coherence():
    inst = make_low_rank(InstanceSpec(500, 500, 10, 1.0), np.random.default_rng(1))
    U, s, _ = np.linalg.svd(inst.matrix)
    assert s[10] / s[0] <= 1e-10
    assert inst.true_rank == 10
    assert subspace_coherence(U[:, :10]) == pytest.approx(1.0, abs=1e-9)
    assert inst.realized_mu0 == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("mode", ["incoherent-gaussian", "coherent-basis", "sign"])
@pytest.mark.parametrize("mu0", [1.0, 2.0, 5.0])
def test_rank_and_coherence_bounds(mode, mu0):
    inst = make_low_rank(InstanceSpec(120, 120, 4, mu0, row_mode=mode), np.random.default_rng(2))
    s = np.linalg.svd(inst.matrix, compute_uv=False)
    assert s[4] <= 1e-10 * s[0]
    assert inst.realized_mu0 == pytest.approx(mu0)
    assert 1 - 1e-12 <= inst.realized_mu0 <= 120 / 4 + 1e-12


def test_sign_rows_give_flat_columns():
    inst = make_low_rank(InstanceSpec(100, 150, 5, 1.0, row_mode="sign"), np.random.default_rng(3))
    assert inst.realized_column_mu == pytest.approx(1.0)


def test_column_norm_modes():
    rng = np.random.default_rng(4)
    u = make_low_rank(InstanceSpec(50, 400, 2, 1.0, column_norm_mode="uniform-0.9-1.1"), rng)
    norms = np.linalg.norm(u.matrix, axis=0)
    assert norms.min() >= 0.9 and norms.max() <= 1.1
    ln = make_low_rank(InstanceSpec(50, 4000, 2, 1.0, column_norm_mode="log-normal"), rng)
    logs = np.log(np.linalg.norm(ln.matrix, axis=0))
    assert abs(logs.mean()) < 0.1 and abs(logs.std() - 1.0) < 0.1


def test_noise_variance():
    d, n, sigma = 100, 200, 3.0
    inst = make_low_rank(InstanceSpec(d, n, 4, 1.0, noise_sigma=sigma), np.random.default_rng(5))
    R = inst.matrix - inst.low_rank_part
    assert R.var() == pytest.approx(sigma**2 / (d * n), rel=0.05)
    assert inst.true_rank == 4


def test_non_integral_blocks_warn():
    with pytest.warns(AdjustedSpecWarning):
        inst = make_low_rank(InstanceSpec(100, 100, 3, 1.0), np.random.default_rng(0))
    assert inst.meta["block_sizes"] == [33, 33, 34]
    assert inst.realized_mu0 == pytest.approx(100 / 3 / 33)


@pytest.mark.parametrize("kw", [
    dict(d=10, n=5, r=1), dict(d=10, n=10, r=2, mu0_target=6.0),
    dict(d=10, n=10, r=2, mu0_target=0.5), dict(d=10, n=10, r=1, row_mode="x"),
    dict(d=10, n=10, r=1, column_norm_mode="x"), dict(d=10, n=10, r=1, noise_sigma=-1.0),
])
def test_spec_validation(kw):
    with pytest.raises(InvalidArgument):
        InstanceSpec(**kw)


def test_reproducible_from_seed():
    spec = InstanceSpec(40, 60, 2, 2.0, noise_sigma=0.1, seed=9)
    np.testing.assert_array_equal(make_low_rank(spec).matrix, make_low_rank(spec).matrix)


def test_subspace_coherence_examples():
    e1 = np.zeros((10, 1))
    e1[0] = 1.0
    assert subspace_coherence(e1) == pytest.approx(10.0)
    assert subspace_coherence(np.full((10, 1), 1 / np.sqrt(10))) == pytest.approx(1.0)
    U = np.linalg.qr(np.random.default_rng(0).standard_normal((200, 5)))[0]
    brute = max(200 / 5 * float(U[i] @ U[i]) for i in range(200))
    assert subspace_coherence(OrthoBasis(U)) == pytest.approx(brute, rel=1e-12)
    with pytest.raises(InvalidArgument):
        subspace_coherence(np.zeros((5, 0)))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 30), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_subspace_coherence_range(d, k, seed):
    k = min(k, d)
    U = np.linalg.qr(np.random.default_rng(seed).standard_normal((d, k)))[0]
    mu = subspace_coherence(U)
    assert 1 - 1e-9 <= mu <= d / k + 1e-9


def test_column_coherence_examples():
    assert column_coherence(np.ones((8, 1))) == pytest.approx(1.0)
    e = np.zeros((8, 1))
    e[3] = -2.0
    assert column_coherence(e) == pytest.approx(8.0)
    X = np.random.default_rng(1).standard_normal((8, 5))
    brute = max(8 * np.max(np.abs(c)) ** 2 / (c @ c) for c in X.T)
    assert column_coherence(X) == pytest.approx(brute)


def test_column_coherence_zero_columns():
    X = np.zeros((4, 3))
    with pytest.raises(InvalidArgument):
        column_coherence(X)
    X[:, 1] = 1.0
    with pytest.warns(RuntimeWarning):
        assert column_coherence(X) == pytest.approx(1.0)


def test_lower_bound_single_spike():
    inst = make_lower_bound_instance(12, 15, 1, 3.0, np.random.default_rng(0))
    nz = np.flatnonzero(inst.matrix.any(axis=0))
    assert nz.tolist() == [inst.meta["hidden_column"]]
    assert np.count_nonzero(inst.matrix) == 4


def test_lower_bound_structure_and_coherence():
    rng = np.random.default_rng(1)
    d, n, r, l = 100, 200, 5, 4
    mu0 = d / (r * l)
    for _ in range(100):
        inst = make_lower_bound_instance(d, n, r, mu0, rng)
        assert inst.realized_mu0 <= mu0 + 1e-9
        assert inst.true_rank == r
        hc = inst.meta["hidden_column"]
        assert r - 1 <= hc < n
        assert np.all(inst.meta["hidden_support"] >= (r - 1) * l)
        for j in range(r - 1):
            np.testing.assert_allclose(inst.matrix[j * l:(j + 1) * l, j], 1 / np.sqrt(l))


def test_lower_bound_members_differ_only_in_hidden_column():
    a = hard_family_member(20, 10, 3, 20 / 6, [0, 1], [1.0, -1.0], 5)
    b = hard_family_member(20, 10, 3, 20 / 6, [4, 7], [-1.0, -1.0], 5)
    keep = np.arange(10) != 5
    np.testing.assert_array_equal(a[:, keep], b[:, keep])
    assert not np.array_equal(a[:, 5], b[:, 5])


def test_lower_bound_layout_checks():
    with pytest.raises(InvalidArgument):
        make_lower_bound_instance(10, 20, 3, 1.0, 0)  # l = 10/3
    with pytest.raises(InvalidArgument):
        make_lower_bound_instance(10, 2, 3, 10 / 3, 0)  # n <= r - 1


def test_hard_family_indistinguishable_when_support_missed():
    d, n, r, mu0 = 4, 3, 2, 2.0  # l = 1, three free coordinates
    family = list(enumerate_hard_family(d, n, r, mu0))
    assert len(family) == (n - r + 1) * 3 * 2
    rng = np.random.default_rng(0)
    for X in family:
        hidden = np.argwhere(X[r - 1:, r - 1:] != 0) + (r - 1)
        for _ in range(20):
            mask = rng.random((d, n)) < 0.6
            if all(mask[i, j] for i, j in hidden):
                continue
            agree = sum(np.array_equal(Y[mask], X[mask]) for Y in family)
            assert agree >= 2


def test_hard_family_count():
    family = list(itertools.islice(enumerate_hard_family(6, 4, 2, 1.5), 1000))
    # l = 2, free = 4: (n - r + 1) columns * C(4, 2) supports * 4 sign patterns
    assert len(family) == 3 * 6 * 4
