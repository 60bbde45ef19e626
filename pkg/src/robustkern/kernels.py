"""Mercer kernels, Gram matrices, RKHS function arithmetic and projections.

Functions in a reproducing kernel Hilbert space are represented in the span
of kernel sections, f = sum_j alpha_j k(u_j, .), so every inner product,
norm and distance reduces to quadratic forms in Gram matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

KERNEL_KINDS = ("linear", "polynomial", "gaussian", "laplacian", "inverse_multiquadric")

#: Relative diagonal jitter used when factorizing near-singular Gram matrices.
GRAM_JITTER = 1e-10

#: Points closer than this (in Euclidean norm) are merged when building union bases.
DEDUP_TOL = 1e-12


@dataclass(frozen=True)
class KernelSpec:
    """A Mercer kernel family with validated parameters.

    kind : one of `KERNEL_KINDS`
    gamma : scale for polynomial / gaussian / laplacian (> 0)
    degree : polynomial degree (integer >= 1)
    coef0 : polynomial offset (>= 0); 0 gives the offset-free form (x1.x2)^d
    c : inverse multiquadric offset (> 0)
    alpha : inverse multiquadric exponent (> 0)
    """

    kind: str
    gamma: float = 1.0
    degree: int = 2
    coef0: float = 0.0
    c: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if int(self.degree) != self.degree or self.degree < 1:
            raise ValueError("degree must be an integer >= 1")
        if self.coef0 < 0:
            raise ValueError("coef0 must be nonnegative")
        if self.c <= 0:
            raise ValueError("c must be positive")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")


def _as_points(x) -> np.ndarray:
    """Coerce input to a (m, d) float array of points."""
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(1, -1)
    elif a.ndim != 2:
        raise ValueError("points must be scalars, vectors or (m, d) arrays")
    return a


def cross_gram(spec: KernelSpec, pts1, pts2) -> np.ndarray:
    """Kernel matrix k(pts1[i], pts2[j]) for two point sets."""
    a = _as_points(pts1)
    b = _as_points(pts2)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if spec.kind == "linear":
        return a @ b.T
    if spec.kind == "polynomial":
        return (spec.gamma * (a @ b.T) + spec.coef0) ** spec.degree
    sq = (
        np.sum(a * a, axis=1)[:, None]
        - 2.0 * (a @ b.T)
        + np.sum(b * b, axis=1)[None, :]
    )
    np.maximum(sq, 0.0, out=sq)
    if spec.kind == "gaussian":
        return np.exp(-spec.gamma * sq)
    if spec.kind == "laplacian":
        return np.exp(-spec.gamma * np.sqrt(sq))
    # inverse multiquadric
    return (spec.c**2 + sq) ** (-spec.alpha)


def kernel_eval(spec: KernelSpec, x1, x2) -> float:
    """Evaluate k(x1, x2) for two points."""
    return float(cross_gram(spec, x1, x2)[0, 0])


def gram_matrix(spec: KernelSpec, points) -> np.ndarray:
    """Symmetric Gram matrix of a point set; PSD up to numerical jitter."""
    pts = _as_points(points)
    if pts.shape[0] == 0:
        raise ValueError("point list must be nonempty")
    g = cross_gram(spec, pts, pts)
    return 0.5 * (g + g.T)


def solve_gram(g: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve g @ x = b, adding diagonal jitter if the Gram matrix is rank-deficient."""
    try:
        return np.linalg.solve(g, b)
    except np.linalg.LinAlgError:
        pass
    m = g.shape[0]
    jitter = GRAM_JITTER * np.trace(g) / m
    return np.linalg.solve(g + jitter * np.eye(m), b)


@dataclass(frozen=True)
class RkhsFunction:
    """f = sum_j coeffs[j] * k(basis[j], .) in the RKHS of `kernel`."""

    kernel: KernelSpec
    basis: np.ndarray = field(repr=False)
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "basis", _as_points(self.basis))
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float).ravel())
        if self.basis.shape[0] != self.coeffs.shape[0]:
            raise ValueError("basis and coeffs must have equal length")
        if self.basis.shape[0] == 0:
            raise ValueError("basis must be nonempty")

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def __call__(self, x):
        return rkhs_eval(self, x)


def rkhs_eval(f: RkhsFunction, x):
    """Evaluate f at one point (returns float) or at (m, d) points (returns array)."""
    pts = _as_points(x)
    vals = cross_gram(f.kernel, pts, f.basis) @ f.coeffs
    if np.asarray(x).ndim <= 1:
        return float(vals[0])
    return vals


def rkhs_inner(f: RkhsFunction, g: RkhsFunction) -> float:
    """Inner product <f, g> via the cross Gram of the two basis sets."""
    if f.kernel != g.kernel:
        raise ValueError("functions live in different RKHSs (kernel mismatch)")
    return float(f.coeffs @ cross_gram(f.kernel, f.basis, g.basis) @ g.coeffs)


def rkhs_norm(f: RkhsFunction) -> float:
    return float(np.sqrt(max(rkhs_inner(f, f), 0.0)))


def merge_points(pts_a: np.ndarray, pts_b: np.ndarray, tol: float = DEDUP_TOL):
    """Union of two point sets with near-duplicates merged.

    Returns (union_points, index_a, index_b) mapping each original point to
    its row in the union.
    """
    pts_a = _as_points(pts_a)
    pts_b = _as_points(pts_b)
    union = [pts_a[i] for i in range(pts_a.shape[0])]
    idx_a = np.arange(pts_a.shape[0])
    # merge duplicates already inside a
    kept: list[np.ndarray] = []
    remap = np.zeros(len(union), dtype=int)
    for i, p in enumerate(union):
        for j, q in enumerate(kept):
            if np.linalg.norm(p - q) <= tol:
                remap[i] = j
                break
        else:
            kept.append(p)
            remap[i] = len(kept) - 1
    idx_a = remap[idx_a]
    idx_b = np.zeros(pts_b.shape[0], dtype=int)
    for i in range(pts_b.shape[0]):
        p = pts_b[i]
        for j, q in enumerate(kept):
            if np.linalg.norm(p - q) <= tol:
                idx_b[i] = j
                break
        else:
            kept.append(p)
            idx_b[i] = len(kept) - 1
    return np.vstack(kept), idx_a, idx_b


def combine(f: RkhsFunction, g: RkhsFunction, cf: float = 1.0, cg: float = 1.0) -> RkhsFunction:
    """cf * f + cg * g over the deduplicated union basis."""
    if f.kernel != g.kernel:
        raise ValueError("functions live in different RKHSs (kernel mismatch)")
    union, idx_a, idx_b = merge_points(f.basis, g.basis)
    coeffs = np.zeros(union.shape[0])
    np.add.at(coeffs, idx_a, cf * f.coeffs)
    np.add.at(coeffs, idx_b, cg * g.coeffs)
    return RkhsFunction(f.kernel, union, coeffs)


def rkhs_distance(f: RkhsFunction, g: RkhsFunction) -> float:
    """RKHS norm of f - g, computed over the union basis."""
    diff = combine(f, g, 1.0, -1.0)
    return rkhs_norm(diff)


@dataclass(frozen=True)
class FeasibleSet:
    """Feasible region for the coefficient vector of a representer-form function.

    kind "unconstrained": whole space.
    kind "coeff_box": componentwise bounds lower <= alpha <= upper.
    kind "rkhs_ball": RKHS-norm ball ||f||_k <= radius.
    """

    kind: str = "unconstrained"
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    radius: float | None = None

    def __post_init__(self):
        if self.kind not in ("unconstrained", "coeff_box", "rkhs_ball"):
            raise ValueError(f"unknown feasible set kind {self.kind!r}")
        if self.kind == "coeff_box":
            lo = np.asarray(self.lower, dtype=float)
            hi = np.asarray(self.upper, dtype=float)
            if np.any(lo > hi):
                raise ValueError("box bounds must satisfy lower <= upper")
            object.__setattr__(self, "lower", lo)
            object.__setattr__(self, "upper", hi)
        if self.kind == "rkhs_ball":
            if self.radius is None or self.radius <= 0:
                raise ValueError("ball radius must be positive")


UNCONSTRAINED = FeasibleSet("unconstrained")


def coeff_box(lower, upper) -> FeasibleSet:
    return FeasibleSet("coeff_box", lower=np.asarray(lower, float), upper=np.asarray(upper, float))


def rkhs_ball(radius: float) -> FeasibleSet:
    return FeasibleSet("rkhs_ball", radius=float(radius))


def project_feasible(coeffs: np.ndarray, fset: FeasibleSet, gram: np.ndarray) -> np.ndarray:
    """Project a coefficient vector onto the feasible set.

    Box constraints clamp componentwise; the RKHS ball scales radially by
    min(1, radius / ||f||_k); the unconstrained set is the identity.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if fset.kind == "unconstrained":
        return coeffs.copy()
    if fset.kind == "coeff_box":
        lo = np.broadcast_to(fset.lower, coeffs.shape)
        hi = np.broadcast_to(fset.upper, coeffs.shape)
        return np.clip(coeffs, lo, hi)
    norm = np.sqrt(max(float(coeffs @ gram @ coeffs), 0.0))
    if norm <= fset.radius:
        return coeffs.copy()
    return coeffs * (fset.radius / norm)
