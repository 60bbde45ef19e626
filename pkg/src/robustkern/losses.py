"""Cost functions c(z, w), their derivatives in w, and gauge functions.

All losses are convex in w. Derivative availability is tracked through the
`smoothness` property: C2 losses have second derivatives everywhere, the
Huber loss is C1 (second derivative defined off its kink), hinge and pinball
are merely C0 and expose midpoint subgradients at the kink.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import CapabilityError
from .kernels import KernelSpec

LOSS_KINDS = ("squared", "huber", "hinge", "logloss", "pinball")

#: Huber transition parameter; fixed, not user-tunable.
HUBER_DELTA = 1.0


@dataclass(frozen=True)
class LossSpec:
    """A cost function c(z, w) = L(w, y) acting on the margin/residual.

    kind : one of `LOSS_KINDS`
    nu : pinball quantile level in (0, 1); ignored by other kinds
    additive_logloss : if True (default) the log-loss is log(1 + exp(-w - y));
        if False the conventional margin form log(1 + exp(-w * y)) is used.
    """

    kind: str
    nu: float = 0.5
    additive_logloss: bool = True

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.kind == "pinball" and not 0.0 < self.nu < 1.0:
            raise ValueError("pinball level nu must lie in (0, 1)")

    @property
    def smoothness(self) -> str:
        if self.kind in ("squared", "logloss"):
            return "C2"
        if self.kind == "huber":
            return "C1"
        return "C0"

    @property
    def convex(self) -> bool:
        return True


def loss_value(spec: LossSpec, y, w):
    """L(w, y); nonnegative everywhere. Vectorizes over numpy inputs."""
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    if spec.kind == "squared":
        out = 0.5 * (w - y) ** 2
    elif spec.kind == "huber":
        r = np.abs(w - y)
        out = np.where(r <= HUBER_DELTA, 0.5 * r**2, r - 0.5 * HUBER_DELTA)
    elif spec.kind == "hinge":
        out = np.maximum(0.0, 1.0 - w * y)
    elif spec.kind == "logloss":
        t = -(w + y) if spec.additive_logloss else -(w * y)
        out = np.logaddexp(0.0, t)
    else:  # pinball
        out = np.maximum((1.0 - spec.nu) * (w - y), spec.nu * (y - w))
    if out.ndim == 0:
        return float(out)
    return out


def loss_grad(spec: LossSpec, y, w):
    """dL/dw; at nonsmooth kinks the midpoint of the subdifferential."""
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    if spec.kind == "squared":
        out = w - y
    elif spec.kind == "huber":
        out = np.clip(w - y, -HUBER_DELTA, HUBER_DELTA)
    elif spec.kind == "hinge":
        margin = 1.0 - w * y
        out = np.where(margin > 0, -y, np.where(margin < 0, 0.0, -y / 2.0))
    elif spec.kind == "logloss":
        if spec.additive_logloss:
            out = -expit(-(w + y))
        else:
            out = -y * expit(-(w * y))
    else:  # pinball
        out = np.where(w > y, 1.0 - spec.nu, np.where(w < y, -spec.nu, 0.5 - spec.nu))
    if out.ndim == 0:
        return float(out)
    return out


def is_nonsmooth_at(spec: LossSpec, y, w) -> np.ndarray:
    """True where (y, w) sits on a kink of the loss."""
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    if spec.kind == "hinge":
        return np.asarray(1.0 - w * y == 0.0)
    if spec.kind == "pinball":
        return np.asarray(w == y)
    if spec.kind == "huber":
        return np.asarray(np.abs(np.abs(w - y) - HUBER_DELTA) == 0.0)
    return np.zeros(np.broadcast(y, w).shape, dtype=bool)


def loss_hess(spec: LossSpec, y, w):
    """Second derivative d2L/dw2 where defined.

    Raises CapabilityError for hinge/pinball, and for Huber exactly at its kink.
    """
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    if spec.kind in ("hinge", "pinball"):
        raise CapabilityError(f"{spec.kind} loss has no second derivative")
    if spec.kind == "squared":
        out = np.ones(np.broadcast(y, w).shape)
    elif spec.kind == "huber":
        r = np.abs(w - y)
        if np.any(r == HUBER_DELTA):
            raise CapabilityError("huber second derivative undefined at the kink")
        out = np.where(r < HUBER_DELTA, 1.0, 0.0)
    else:  # logloss
        if spec.additive_logloss:
            s = expit(w + y)
            out = s * (1.0 - s)
        else:
            s = expit(w * y)
            out = y**2 * s * (1.0 - s)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class GaugeFunction:
    """Continuous bound psi with c(z, f(x)) <= psi(z) for all ||f||_k <= beta.

    z is a point of Z = X x R laid out as (x_1, ..., x_n, y).
    """

    kernel: KernelSpec
    beta: float

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        single = z.ndim <= 1
        z = np.atleast_2d(z)
        x, y = z[:, :-1], z[:, -1]
        xn = np.linalg.norm(x, axis=1)
        k = self.kernel
        if k.kind == "linear":
            out = 1.0 + self.beta * xn * np.abs(y)
        elif k.kind in ("gaussian", "laplacian"):
            out = np.ones_like(y)
        else:  # polynomial
            out = 1.0 + self.beta * (k.gamma * xn**2 + 1.0) ** (k.degree / 2.0) * np.abs(y)
        return float(out[0]) if single else out


def gauge_psi(kernel: KernelSpec, beta: float) -> GaugeFunction:
    """Gauge function for the given kernel and norm bound beta."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    if kernel.kind == "inverse_multiquadric":
        raise CapabilityError("no gauge function available for inverse multiquadric kernels")
    return GaugeFunction(kernel, float(beta))


def moment_check(measure, psi: GaugeFunction, gamma_exp: float) -> float:
    """Empirical psi^gamma moment sum_i w_i psi(z_i)^gamma of a discrete measure."""
    if gamma_exp < 1:
        raise ValueError("moment exponent must be >= 1")
    vals = psi(measure.atoms)
    return float(np.sum(measure.weights * np.asarray(vals) ** gamma_exp))
