import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fpslab.lattice import Cube, DyadicIndex, GridFunction, cells_of
from fpslab.sparse import (
    THRESHOLD,
    SparseFamily,
    SparseMember,
    _oscillation_field,
    fractional_maximal,
    fractional_sparse,
    full_witness_family,
    oscillation_sparse,
    quotient_on,
    sparse_bound_ratio,
    sparse_operator,
    sparsity_check,
    verify_fractional_domination,
    verify_oscillation_domination,
)
from fpslab.weights import ConfigError, ExponentConfig, power_weight


def rough(seed, d=1, n=64):
    rng = np.random.default_rng(seed)
    vals = np.cumsum(rng.normal(size=(n,) * d), axis=0) + 3 * (rng.uniform(size=(n,) * d) < 0.05)
    return GridFunction(Cube.unit(d), n, vals)


def test_sparse_operator_example():
    Q = Cube.unit(1)
    one = GridFunction.constant(1.0, Q, 8)
    S = full_witness_family([DyadicIndex.root(1), DyadicIndex(1, (0,))], 8, 1)
    out = sparse_operator(S, one, 2, 0.0).samples
    assert np.allclose(out[:4], math.sqrt(2))
    assert np.allclose(out[4:], 1.0)
    with pytest.raises(ConfigError):
        sparse_operator(S, one, 0, 0.0)


def test_fractional_maximal_example():
    Q = Cube.unit(1)
    ind = GridFunction.from_callable(lambda x: (x < 0.5).astype(float), Q, 16)
    M = fractional_maximal(ind).samples
    assert np.allclose(M[:8], 1.0)
    assert np.allclose(M[8:], 0.5)
    Mb = fractional_maximal(ind, beta=0.5).samples
    assert np.allclose(Mb[8:], 0.5)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([1, 2]))
def test_oscillation_family_is_sparse_and_maximal(seed, d):
    n = 64 if d == 1 else 16
    f = rough(seed, d, n)
    S = oscillation_sparse(f)
    ok, ratio = sparsity_check(S)
    assert ok and ratio >= 0.5
    members = set(S.indices())
    assert DyadicIndex.root(d) in members
    for R in S.indices():
        if R.generation == 0:
            continue
        # the stopping parent is the nearest member strictly above R
        P = R.parent()
        while P not in members:
            P = P.parent()
        field = _oscillation_field(f, P)
        base = field.mean()
        off = P.cell_slices(n)

        def local_mean(idx):
            sl = idx.cell_slices(n)
            return field[tuple(slice(a.start - b.start, a.stop - b.start) for a, b in zip(sl, off))].mean()

        assert local_mean(R) > THRESHOLD * base
        A = R.parent()
        while A != P:
            assert not local_mean(A) > THRESHOLD * base
            A = A.parent()


def test_constant_function_gives_root_only():
    f = GridFunction.constant(2.0, Cube.unit(2), 16)
    S = oscillation_sparse(f)
    assert S.indices() == [DyadicIndex.root(2)]
    rep = verify_oscillation_domination(f, None, S)
    assert rep.max_required_constant == 1.0  # 0/0 counts as 1


@pytest.mark.parametrize("d", [1, 2])
def test_oscillation_domination_constant(d):
    for seed in range(4):
        f = rough(seed, d, 64 if d == 1 else 16)
        rep = verify_oscillation_domination(f, None, oscillation_sparse(f))
        assert math.isfinite(rep.max_required_constant)
        assert rep.max_required_constant <= 2 ** d * THRESHOLD + 1


def test_fractional_family_and_domination():
    cfg = ExponentConfig(d=1, p=2, q=2, r=1, s=0.5)
    f = rough(5, 1, 32)
    S = fractional_sparse(f, None, cfg)
    ok, _ = sparsity_check(S)
    assert ok
    for m in S.members:
        assert {"osc", "quot"} <= set(m.stats)
        assert m.stats["quot"] == pytest.approx(float(quotient_on(f, m.index, cfg).mean()))
    rep = verify_fractional_domination(f, None, cfg, S)
    assert 0 < rep.max_required_constant < math.inf
    # stats are optional: recomputing them gives the same report
    bare = SparseFamily.from_json(S.to_json())
    again = verify_fractional_domination(f, None, cfg, bare)
    assert again.max_required_constant == pytest.approx(rep.max_required_constant, rel=1e-12)


def test_json_round_trip():
    f = rough(2, 2, 16)
    S = oscillation_sparse(f)
    T = SparseFamily.from_json(S.to_json())
    assert T.indices() == S.indices()
    for a, b in zip(S.members, T.members):
        assert np.array_equal(a.witness, b.witness)
    doc = S.to_json()
    for item, m in zip(doc["members"], S.members):
        covered = sum(b - a for a, b in item["witness_cell_ranges"])
        assert covered == m.size


def test_sparsity_check_detects_violations():
    n = 8
    root = DyadicIndex.root(1)
    S = full_witness_family([root, DyadicIndex(1, (0,))], n, 1)
    ok, _ = sparsity_check(S)
    assert not ok  # overlapping witnesses
    small = cells_of(root, n).copy()
    small[3:] = False
    ok, ratio = sparsity_check(SparseFamily([SparseMember(root, small)], n, 1))
    assert not ok and ratio == pytest.approx(3 / 8)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_maximal_and_operator_monotone(seed):
    rng = np.random.default_rng(seed)
    Q = Cube.unit(1)
    f = GridFunction(Q, 32, rng.normal(size=32))
    g = f.with_samples(np.abs(f.samples) + rng.uniform(0, 1, size=32))
    Mf = fractional_maximal(f).samples
    assert np.all(Mf >= abs(f.samples.mean()) - 1e-12)
    assert np.all(Mf >= np.abs(f.samples) - 1e-12)
    assert np.all(fractional_maximal(g).samples >= Mf - 1e-12)
    S = oscillation_sparse(rough(seed, 1, 32))
    for r, beta in ((1, 0.0), (2, 0.25)):
        assert np.all(sparse_operator(S, g, r, beta).samples >= sparse_operator(S, f, r, beta).samples - 1e-12)


def test_sparse_bound_ratio_modes():
    Q = Cube.unit(1)
    n = 64
    f = rough(1, 1, n)
    S = oscillation_sparse(f)
    one = GridFunction.constant(1.0, Q, n)
    w = power_weight(Q, n, (0.3,), -0.3)
    cfg = ExponentConfig(p=2, q=2, r=1)
    for omega, sigma in ((one, one), (w, one)):
        strong = sparse_bound_ratio(S, f, omega, sigma, cfg, "strong")
        weak = sparse_bound_ratio(S, f, omega, sigma, cfg, "weak")
        assert 0 < strong < math.inf and 0 < weak < math.inf
    with pytest.raises(ConfigError):
        sparse_bound_ratio(S, f, one, one, ExponentConfig(p=1, q=1, r=1), "strong")
    with pytest.raises(ValueError):
        sparse_bound_ratio(S, f, one, one, cfg, "middling")
