"""Distribution models and samplers for the perturbation experiments.

Covers the normal-input regression base model, the tail-flattening
perturbation of the input law (probability mass above the p-quantile is
spread uniformly with density beta over a finite interval), and Dirac
contamination mixtures, both as a stochastic switching sampler and as a
deterministic-weight empirical measure.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtr, ndtri
from scipy.stats import norm

from .metrics import EmpiricalMeasure
from .solver import Dataset

RESPONSES = ("square", "square_plus_noise", "cube")

#: Variance of the additive response noise (square_plus_noise).
NOISE_VAR = 0.01


@dataclass(frozen=True)
class BaseModel:
    """x ~ Normal(mu, sigma^2); y computed from x by the response rule."""

    mu: float = 0.0
    sigma: float = 1.0
    response: str = "square"

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.response not in RESPONSES:
            raise ValueError(f"unknown response rule {self.response!r}")

    def input_cdf(self, x):
        return ndtr((np.asarray(x, dtype=float) - self.mu) / self.sigma)

    def input_inverse_cdf(self, u):
        return self.mu + self.sigma * ndtri(np.asarray(u, dtype=float))


def apply_response(model: BaseModel, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if model.response == "square":
        return x**2
    if model.response == "square_plus_noise":
        return x**2 + rng.normal(0.0, np.sqrt(NOISE_VAR), size=x.shape)
    return x**3


@dataclass(frozen=True)
class TailPerturbation:
    """Flatten the input law above its p-quantile x0 to density beta on [x0, x1]."""

    p: float = 0.9
    beta: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")
        if self.beta <= 0:
            raise ValueError("beta must be positive")

    def x0(self, model: BaseModel) -> float:
        return float(model.input_inverse_cdf(self.p))

    def x1(self, model: BaseModel) -> float:
        return self.x0(model) + (1.0 - self.p) / self.beta


def perturbed_input_cdf(model: BaseModel, pert: TailPerturbation, x):
    """CDF of the tail-perturbed input law; piecewise in (x0, x1)."""
    x = np.asarray(x, dtype=float)
    x0, x1 = pert.x0(model), pert.x1(model)
    out = np.where(
        x <= x0,
        model.input_cdf(x),
        np.where(x <= x1, pert.p + pert.beta * (x - x0), 1.0),
    )
    if out.ndim == 0:
        return float(out)
    return out


def perturbed_input_inverse_cdf(model: BaseModel, pert: TailPerturbation, u):
    u = np.asarray(u, dtype=float)
    x0 = pert.x0(model)
    out = np.where(u <= pert.p, model.input_inverse_cdf(np.minimum(u, pert.p)), x0 + (u - pert.p) / pert.beta)
    if out.ndim == 0:
        return float(out)
    return out


def input_kantorovich(model: BaseModel, pert: TailPerturbation, tol: float = 1e-8) -> float:
    """d_K between the base and tail-perturbed input laws by quadrature.

    The CDFs agree below x0; above x1 the gap is the normal upper tail,
    integrated in closed form.
    """
    x0, x1 = pert.x0(model), pert.x1(model)

    def gap(x):
        return abs(model.input_cdf(x) - perturbed_input_cdf(model, pert, x))

    middle, _ = quad(gap, x0, x1, epsabs=tol, epsrel=tol, limit=200)
    a = (x1 - model.mu) / model.sigma
    upper = model.sigma * (norm.pdf(a) - a * (1.0 - ndtr(a)))
    return float(middle + upper)


def sample_base(model: BaseModel, n: int, seed) -> Dataset:
    """iid draws from the base model; deterministic per seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    x = rng.normal(model.mu, model.sigma, size=n)
    y = apply_response(model, x, rng)
    return Dataset(x.reshape(-1, 1), y)


def sample_tail_perturbed(model: BaseModel, pert: TailPerturbation, n: int, seed) -> Dataset:
    """Inverse-CDF sampling of the tail-perturbed input law."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    u = rng.uniform(size=n)
    x = perturbed_input_inverse_cdf(model, pert, u)
    y = apply_response(model, x, rng)
    return Dataset(np.asarray(x).reshape(-1, 1), y)


@dataclass(frozen=True)
class MixtureModel:
    """Huber contamination (1 - t) * base + t * dirac(outlier)."""

    base: BaseModel
    outlier: tuple  # (x..., y), a point of Z
    t: float

    def __post_init__(self):
        if not 0.0 <= self.t <= 1.0:
            raise ValueError("mixture weight t must lie in [0, 1]")


def sample_mixture(model: MixtureModel, n: int, seed) -> Dataset:
    """Switching-variable sampler: each draw is the outlier with probability t."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    x = rng.normal(model.base.mu, model.base.sigma, size=n)
    y = apply_response(model.base, x, rng)
    switch = rng.uniform(size=n) < model.t
    out = np.asarray(model.outlier, dtype=float)
    ox, oy = out[:-1], out[-1]
    x = x.reshape(-1, 1)
    x[switch] = ox
    y[switch] = oy
    return Dataset(x, y)


def deterministic_mixture_measure(base_data: Dataset, z_tilde, t: float) -> EmpiricalMeasure:
    """Weighted measure (1-t)/(N-1) on the base atoms plus weight t on z_tilde."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("mixture weight t must lie in [0, 1]")
    z_tilde = np.asarray(z_tilde, dtype=float).reshape(1, -1)
    atoms = np.vstack([base_data.z, z_tilde])
    n_base = base_data.n
    weights = np.concatenate([np.full(n_base, (1.0 - t) / n_base), [t]])
    return EmpiricalMeasure(atoms, weights)


def dataset_to_csv(data: Dataset, path) -> None:
    """Write a dataset with header x_1,...,x_n,y at full double precision."""
    d = data.x.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x_{i + 1}" for i in range(d)] + ["y"])
        for i in range(data.n):
            writer.writerow([f"{v:.17g}" for v in data.x[i]] + [f"{data.y[i]:.17g}"])


def dataset_from_csv(path) -> Dataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[-1] != "y":
            raise ValueError("dataset CSV must end with a 'y' column")
        rows = [[float(v) for v in row] for row in reader if row]
    arr = np.asarray(rows, dtype=float)
    return Dataset(arr[:, :-1], arr[:, -1])
