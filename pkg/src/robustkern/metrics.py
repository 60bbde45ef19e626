"""Empirical measures and probability metrics on discrete support.

The 1-D Kantorovich distance is computed exactly as the area between
empirical CDFs; the general discrete case is solved as a transport linear
program. Fortet-Mourier distances of order p > 1 are reported as a
bracketing (lower, upper) pair because the growth-weighted cost violates
the triangle inequality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path

from .errors import CapacityError

#: Default cap on the combined number of atoms in a transport LP.
OT_ATOM_CAP = 2000

WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Weighted atoms; weights are nonnegative and sum to one."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms.reshape(-1, 1)
        w = np.asarray(self.weights, dtype=float).ravel()
        if atoms.shape[0] == 0:
            raise ValueError("measure must have at least one atom")
        if atoms.shape[0] != w.shape[0]:
            raise ValueError("atoms and weights must have equal length")
        if np.any(w < -WEIGHT_TOL):
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1 (got {w.sum()})")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", np.maximum(w, 0.0))

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    @classmethod
    def uniform(cls, atoms) -> "EmpiricalMeasure":
        atoms = np.asarray(atoms, dtype=float)
        n = atoms.shape[0]
        return cls(atoms, np.full(n, 1.0 / n))

    def cdf(self, t: float) -> float:
        """CDF of a 1-D measure at t."""
        if self.dim != 1:
            raise ValueError("cdf is defined for 1-D measures only")
        return float(np.sum(self.weights[self.atoms[:, 0] <= t]))


def law_of_estimator(values, weights=None) -> EmpiricalMeasure:
    """Empirical law of a list of estimator values, merging tied atoms."""
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise ValueError("values must be nonempty")
    if weights is None:
        weights = np.full(values.size, 1.0 / values.size)
    else:
        weights = np.asarray(weights, dtype=float).ravel()
    order = np.argsort(values, kind="stable")
    values, weights = values[order], weights[order]
    uniq, inverse = np.unique(values, return_inverse=True)
    merged = np.zeros(uniq.size)
    np.add.at(merged, inverse, weights)
    return EmpiricalMeasure(uniq.reshape(-1, 1), merged)


@dataclass(frozen=True)
class MetricResult:
    """A computed distance value, its kind, and an optional transport plan."""

    value: float
    kind: str  # kantorovich_1d | kantorovich_ot | fm_upper | fm_lower
    plan: np.ndarray | None = None


def kantorovich_1d(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> float:
    """Exact 1-Wasserstein distance between 1-D discrete measures.

    Computed as the integral of |F_mu - F_nu| over the real line.
    """
    if mu.dim != 1 or nu.dim != 1:
        raise ValueError("kantorovich_1d requires 1-D atoms")
    pos = np.concatenate([mu.atoms[:, 0], nu.atoms[:, 0]])
    sgn = np.concatenate([mu.weights, -nu.weights])
    order = np.argsort(pos, kind="stable")
    pos, sgn = pos[order], sgn[order]
    cdf_diff = np.cumsum(sgn)[:-1]
    gaps = np.diff(pos)
    return float(np.sum(np.abs(cdf_diff) * gaps))


def _transport_lp(cost: np.ndarray, w_mu: np.ndarray, w_nu: np.ndarray):
    """Solve the discrete transport LP; returns (value, plan)."""
    m, n = cost.shape
    rows, cols, data = [], [], []
    for i in range(m):
        rows.extend([i] * n)
        cols.extend(range(i * n, (i + 1) * n))
        data.extend([1.0] * n)
    for j in range(n):
        rows.extend([m + j] * m)
        cols.extend(range(j, m * n, n))
        data.extend([1.0] * m)
    a_eq = coo_matrix((data, (rows, cols)), shape=(m + n, m * n))
    b_eq = np.concatenate([w_mu, w_nu])
    res = linprog(cost.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"transport LP failed: {res.message}")
    plan = res.x.reshape(m, n)
    return float(res.fun), plan


def _check_cap(mu: EmpiricalMeasure, nu: EmpiricalMeasure, cap: int):
    total = mu.atoms.shape[0] + nu.atoms.shape[0]
    if total > cap:
        raise CapacityError(f"{total} atoms exceed the transport cap of {cap}")


def kantorovich_ot(mu: EmpiricalMeasure, nu: EmpiricalMeasure, cap: int = OT_ATOM_CAP) -> MetricResult:
    """Exact discrete optimal transport with Euclidean cost ||z - z'||."""
    if mu.dim != nu.dim:
        raise ValueError("incompatible atom dimensions")
    _check_cap(mu, nu, cap)
    diff = mu.atoms[:, None, :] - nu.atoms[None, :, :]
    cost = np.linalg.norm(diff, axis=2)
    value, plan = _transport_lp(cost, mu.weights, nu.weights)
    return MetricResult(value, "kantorovich_ot", plan)


def _growth_cost(za: np.ndarray, zb: np.ndarray, p: float) -> np.ndarray:
    """c_p(z, z') = max{1, ||z||, ||z'||}^(p-1) * ||z - z'||."""
    na = np.linalg.norm(za, axis=1)
    nb = np.linalg.norm(zb, axis=1)
    scale = np.maximum.outer(np.maximum(na, 1.0), np.maximum(nb, 1.0)) ** (p - 1.0)
    dist = np.linalg.norm(za[:, None, :] - zb[None, :, :], axis=2)
    return scale * dist


def fm_bounds(mu: EmpiricalMeasure, nu: EmpiricalMeasure, p: float, cap: int = OT_ATOM_CAP):
    """Lower and upper bounds for the order-p Fortet-Mourier distance.

    The upper bound is optimal transport under the growth-weighted cost c_p.
    The lower bound replaces c_p by its shortest-path (chain) closure over
    the union of atoms, which restores the triangle inequality. For p = 1
    the cost is already a metric and both bounds coincide with the
    Kantorovich distance.

    Returns a (lower, upper) pair of MetricResult.
    """
    if p < 1:
        raise ValueError("order p must be >= 1")
    if mu.dim != nu.dim:
        raise ValueError("incompatible atom dimensions")
    _check_cap(mu, nu, cap)
    cost = _growth_cost(mu.atoms, nu.atoms, p)
    upper_val, upper_plan = _transport_lp(cost, mu.weights, nu.weights)
    if p == 1.0:
        return (
            MetricResult(upper_val, "fm_lower", upper_plan),
            MetricResult(upper_val, "fm_upper", upper_plan),
        )
    nodes = np.vstack([mu.atoms, nu.atoms])
    full = _growth_cost(nodes, nodes, p)
    closed = shortest_path(full, method="FW", directed=False)
    m = mu.atoms.shape[0]
    closed_cost = closed[:m, m:]
    lower_val, lower_plan = _transport_lp(closed_cost, mu.weights, nu.weights)
    return (
        MetricResult(lower_val, "fm_lower", lower_plan),
        MetricResult(upper_val, "fm_upper", upper_plan),
    )


def plan_to_csv(result: MetricResult, path, mass_tol: float = 1e-15) -> None:
    """Write a transport plan as CSV rows (source_index, target_index, mass)."""
    if result.plan is None:
        raise ValueError("metric result carries no transport plan")
    with open(path, "w") as fh:
        fh.write("source_index,target_index,mass\n")
        m, n = result.plan.shape
        for i in range(m):
            for j in range(n):
                mass = result.plan[i, j]
                if mass > mass_tol:
                    fh.write(f"{i},{j},{mass:.17g}\n")
