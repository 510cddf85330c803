import math

import numpy as np
import pytest

from vskte.kernels import (
    GramBlock,
    KernelSpec,
    gram,
    gram_matrix,
    kernel_eval,
    precision_to_lengthscale,
    resolve_lengthscale,
)


def test_kernel_eval_same_point_is_one():
    spec = KernelSpec.fixed(0.7)
    for x in ([0.0], [1.0, -2.0, 3.0], np.random.default_rng(0).normal(size=8)):
        assert kernel_eval(spec, x, x) == pytest.approx(1.0, abs=0.0)


def test_kernel_eval_unit_distance():
    spec = KernelSpec.fixed(1.0)
    assert kernel_eval(spec, [0.0], [1.0]) == pytest.approx(math.exp(-0.5), rel=1e-12)


def test_kernel_eval_345_triangle():
    spec = KernelSpec.fixed(5.0)
    got = kernel_eval(spec, [0.0, 0.0], [3.0, 4.0])
    assert got == pytest.approx(math.exp(-25.0 / 50.0), rel=1e-12)


def test_kernel_eval_symmetric():
    spec = KernelSpec.fixed(2.0)
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=4), rng.normal(size=4)
    assert kernel_eval(spec, a, b) == kernel_eval(spec, b, a)


def test_kernel_eval_dimension_mismatch():
    with pytest.raises(ValueError):
        kernel_eval(KernelSpec.fixed(1.0), [0.0], [0.0, 1.0])


def test_kernel_eval_needs_resolved_spec():
    with pytest.raises(ValueError):
        kernel_eval(KernelSpec.median(), [0.0], [1.0])


def test_gram_single_point():
    block = gram(KernelSpec.fixed(1.3), [[2.0]], [[2.0]])
    assert block.values.shape == (1, 1)
    assert block.values[0, 0] == 1.0


def test_gram_transpose_symmetry():
    rng = np.random.default_rng(2)
    a = rng.normal(size=(5, 3))
    b = rng.normal(size=(7, 3))
    spec = KernelSpec.fixed(0.9)
    g_ab = gram(spec, a, b).values
    g_ba = gram(spec, b, a).values
    np.testing.assert_array_equal(g_ab, g_ba.T)


def test_gram_matches_entrywise_eval():
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(3, 1))
    spec = KernelSpec.fixed(1.0)
    block = gram(spec, pts, pts).values
    oracle = np.array([[kernel_eval(spec, x, y) for y in pts] for x in pts])
    np.testing.assert_allclose(block, oracle, atol=1e-12)


def test_gram_rejects_empty():
    with pytest.raises(ValueError):
        gram(KernelSpec.fixed(1.0), np.zeros((0, 2)), np.zeros((3, 2)))


def test_gram_block_shape_validation():
    with pytest.raises(ValueError):
        GramBlock(row_ids=(0,), col_ids=(0, 1), values=np.eye(2))


@pytest.mark.parametrize("n", [2, 20, 200])
def test_gram_symmetric_psd(n):
    rng = np.random.default_rng(n)
    pts = rng.normal(size=(n, 4))
    g = gram_matrix(1.1, pts, pts)
    np.testing.assert_array_equal(g, g.T)
    assert np.linalg.eigvalsh(g).min() >= -1e-8
    assert g.max() <= 1.0
    assert g.min() > 0.0


def test_kernel_decreases_with_distance():
    spec = KernelSpec.fixed(1.7)
    base = np.zeros(3)
    vals = [kernel_eval(spec, base, r * np.ones(3)) for r in np.linspace(0, 4, 15)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_median_lengthscale_enumerated():
    # points {0,1,2}: pairwise distances {1,1,2}, median 1
    got = resolve_lengthscale(KernelSpec.median(), [[0.0], [1.0], [2.0]])
    assert got == pytest.approx(1.0, abs=0.0)


def test_half_median_lengthscale():
    got = resolve_lengthscale(KernelSpec.half_median(), [[0.0], [2.0]], role="outcome")
    assert got == pytest.approx(1.0, abs=0.0)


def test_fixed_lengthscale_passthrough():
    got = resolve_lengthscale(KernelSpec.fixed(2.0), [[0.0], [5.0]])
    assert got == 2.0


def test_median_needs_two_points():
    with pytest.raises(ValueError):
        resolve_lengthscale(KernelSpec.median(), [[1.0]])


def test_median_permutation_invariant():
    rng = np.random.default_rng(5)
    pts = rng.normal(size=(17, 3))
    perm = rng.permutation(17)
    a = resolve_lengthscale(KernelSpec.median(), pts)
    b = resolve_lengthscale(KernelSpec.median(), pts[perm])
    assert a == b


def test_identical_points_fall_back_to_one():
    pts = np.ones((6, 2))
    assert resolve_lengthscale(KernelSpec.median(), pts) == 1.0


def test_precision_conversion():
    # exp(-2r^2) == exp(-r^2 / (2 * 0.5^2))
    assert precision_to_lengthscale(2.0) == pytest.approx(0.5, rel=1e-12)
    with pytest.raises(ValueError):
        precision_to_lengthscale(0.0)


def test_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec(rule="fixed")  # missing lengthscale
    with pytest.raises(ValueError):
        KernelSpec(rule="median", lengthscale=1.0)
    with pytest.raises(ValueError):
        KernelSpec(family="laplace")
    with pytest.raises(ValueError):
        resolve_lengthscale(KernelSpec.median(), [[0.0], [1.0]], role="label")
