import numpy as np
import pytest

from robustkern.kernels import (
    KernelSpec,
    RkhsFunction,
    coeff_box,
    combine,
    cross_gram,
    gram_matrix,
    kernel_eval,
    merge_points,
    project_feasible,
    rkhs_ball,
    rkhs_distance,
    rkhs_inner,
    rkhs_norm,
)

RNG = np.random.default_rng(7)

ALL_SPECS = [
    KernelSpec("linear"),
    KernelSpec("polynomial", gamma=0.7, coef0=1.0, degree=3),
    KernelSpec("polynomial", gamma=1.0, coef0=0.0, degree=2),
    KernelSpec("gaussian", gamma=0.5),
    KernelSpec("laplacian", gamma=1.2),
    KernelSpec("inverse_multiquadric", c=1.5, alpha=0.8),
]


def test_kernel_spot_values():
    x1 = np.array([1.0, 2.0])
    x2 = np.array([0.5, -1.0])
    dot = 1.0 * 0.5 + 2.0 * (-1.0)
    sq = (0.5) ** 2 + (3.0) ** 2
    assert kernel_eval(KernelSpec("linear"), x1, x2) == pytest.approx(dot)
    spec = KernelSpec("polynomial", gamma=0.7, coef0=1.0, degree=3)
    assert kernel_eval(spec, x1, x2) == pytest.approx((0.7 * dot + 1.0) ** 3)
    assert kernel_eval(KernelSpec("gaussian", gamma=0.5), x1, x2) == pytest.approx(np.exp(-0.5 * sq))
    assert kernel_eval(KernelSpec("laplacian", gamma=1.2), x1, x2) == pytest.approx(
        np.exp(-1.2 * np.sqrt(sq))
    )
    spec = KernelSpec("inverse_multiquadric", c=1.5, alpha=0.8)
    assert kernel_eval(spec, x1, x2) == pytest.approx((1.5**2 + sq) ** -0.8)


@pytest.mark.parametrize("spec", ALL_SPECS)
def test_gram_symmetric_psd(spec):
    pts = RNG.normal(size=(12, 3))
    g = gram_matrix(spec, pts)
    assert np.allclose(g, g.T)
    eigs = np.linalg.eigvalsh(g)
    assert eigs.min() > -1e-9 * max(1.0, eigs.max())


@pytest.mark.parametrize("spec", ALL_SPECS)
def test_reproducing_property(spec):
    # f(x) must equal the inner product of f with the kernel section at x
    pts = RNG.normal(size=(6, 2))
    f = RkhsFunction(spec, pts, RNG.normal(size=6))
    for _ in range(5):
        x = RNG.normal(size=2)
        section = RkhsFunction(spec, x.reshape(1, -1), np.array([1.0]))
        assert f(x) == pytest.approx(rkhs_inner(f, section), abs=1e-10)


def test_norm_matches_gram_quadratic_form():
    spec = KernelSpec("gaussian", gamma=1.0)
    pts = RNG.normal(size=(5, 1))
    a = RNG.normal(size=5)
    f = RkhsFunction(spec, pts, a)
    g = gram_matrix(spec, pts)
    assert rkhs_norm(f) == pytest.approx(np.sqrt(a @ g @ a))


def test_combine_and_distance():
    spec = KernelSpec("gaussian", gamma=1.0)
    pts_a = RNG.normal(size=(4, 1))
    pts_b = np.vstack([pts_a[:2], RNG.normal(size=(3, 1))])
    f = RkhsFunction(spec, pts_a, RNG.normal(size=4))
    g = RkhsFunction(spec, pts_b, RNG.normal(size=5))
    h = combine(f, g, 2.0, -1.0)
    for _ in range(5):
        x = RNG.normal(size=1)
        assert h(x) == pytest.approx(2.0 * f(x) - g(x), abs=1e-10)
    assert rkhs_distance(f, f) == pytest.approx(0.0, abs=1e-8)
    assert rkhs_distance(f, g) == pytest.approx(rkhs_distance(g, f))


def test_merge_points_dedups():
    a = np.array([[0.0], [1.0], [1.0 + 1e-15]])
    b = np.array([[1.0], [2.0]])
    union, ia, ib = merge_points(a, b)
    assert union.shape[0] == 3
    assert ia[1] == ia[2]
    assert ib[0] == ia[1]


def test_projection_box_and_ball():
    spec = KernelSpec("linear")
    pts = np.eye(3)
    g = gram_matrix(spec, pts)
    box = coeff_box(np.full(3, -1.0), np.full(3, 1.0))
    out = project_feasible(np.array([2.0, -3.0, 0.5]), box, g)
    assert np.allclose(out, [1.0, -1.0, 0.5])
    ball = rkhs_ball(1.0)
    a = np.array([3.0, 4.0, 0.0])
    out = project_feasible(a, ball, g)
    assert np.sqrt(out @ g @ out) == pytest.approx(1.0)
    # interior point untouched
    a = np.array([0.1, 0.1, 0.1])
    assert np.allclose(project_feasible(a, ball, g), a)


def test_kernel_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec("cubic")
    with pytest.raises(ValueError):
        KernelSpec("gaussian", gamma=-1.0)
    with pytest.raises(ValueError):
        KernelSpec("polynomial", degree=0)


def test_cross_gram_dim_mismatch():
    spec = KernelSpec("linear")
    with pytest.raises(ValueError):
        cross_gram(spec, np.zeros((2, 2)), np.zeros((2, 3)))
