"""Proximal setups for mirror descent.

A setup bundles a feasible set with a norm and a distance generating
function (d.g.f.) ``d`` that is 1-strongly convex with respect to that norm.
Three geometries are supported:

* ``euclidean_ball``  -- unit l2 ball, ``d(x) = ||x||_2^2 / 2``
* ``entropy_simplex`` -- unit simplex with the l1 norm,
  ``d(x) = ln n + sum_k x_k ln x_k``
* ``pnorm_ball``      -- unit lp ball for ``1 < p <= 2``,
  ``d(x) = ||x||_p^2 / (2 (p - 1))``

The Bregman divergence is ``V(x, y) = d(y) - d(x) - <grad d(x), y - x>``
with ``x`` the center and ``y`` the target, and the mirror step is

    Mirr_x(h p) = argmin_{u in Q} { <h p, u> + V(x, u) }.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import kl_div, xlogy

from .errors import ComputationError, DomainError, InputError

#: Tolerance used for set membership checks.
FEASIBILITY_TOL = 1e-9

#: Weight of the uniform distribution mixed into simplex starting points.
INTERIOR_MIX = 1e-12


class ProxKind(str, Enum):
    EUCLIDEAN_BALL = "euclidean_ball"
    ENTROPY_SIMPLEX = "entropy_simplex"
    PNORM_BALL = "pnorm_ball"


def a_norm_exponent(n: int) -> float:
    """Exponent ``a = 2 ln n / (2 ln n - 1)`` used for high-dimensional l1-like balls.

    Only defined as an exponent in ``(1, 2]`` when ``n >= 3``.
    """
    if n < 3:
        raise InputError(f"a-norm exponent needs n >= 3, got {n}")
    two_log = 2.0 * math.log(n)
    return two_log / (two_log - 1.0)


def _lp_norm(v: np.ndarray, p: float) -> float:
    if math.isinf(p):
        return float(np.max(np.abs(v), initial=0.0))
    scale = float(np.max(np.abs(v), initial=0.0))
    if scale == 0.0:
        return 0.0
    return scale * float(np.sum((np.abs(v) / scale) ** p) ** (1.0 / p))


@dataclass(frozen=True)
class ProxSetup:
    """A proximal geometry on a fixed feasible set.

    Parameters
    ----------
    kind : ProxKind or str
    dimension : int
        Number of coordinates ``n``.
    theta0 : float, optional
        Bound with ``d(x*) <= theta0**2``.  Defaults to
        :meth:`suggested_theta0`.
    p : float, optional
        Exponent of the primal norm, required for ``pnorm_ball``.
    """

    kind: ProxKind
    dimension: int
    theta0: float | None = None
    p: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ProxKind(self.kind))
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise InputError(f"dimension must be a positive integer, got {self.dimension}")
        object.__setattr__(self, "dimension", int(self.dimension))
        if self.kind is ProxKind.PNORM_BALL:
            if self.p is None or not (1.0 < self.p <= 2.0):
                raise InputError(f"pnorm_ball needs p in (1, 2], got {self.p}")
            object.__setattr__(self, "p", float(self.p))
        elif self.p is not None:
            raise InputError(f"p is only meaningful for pnorm_ball, got p={self.p}")
        if self.theta0 is None:
            object.__setattr__(self, "theta0", self.suggested_theta0())
        elif not (self.theta0 > 0 and math.isfinite(self.theta0)):
            raise InputError(f"theta0 must be positive and finite, got {self.theta0}")
        else:
            object.__setattr__(self, "theta0", float(self.theta0))

    # construction helpers

    @classmethod
    def euclidean(cls, dimension: int, theta0: float | None = None) -> ProxSetup:
        return cls(ProxKind.EUCLIDEAN_BALL, dimension, theta0)

    @classmethod
    def entropy(cls, dimension: int, theta0: float | None = None) -> ProxSetup:
        return cls(ProxKind.ENTROPY_SIMPLEX, dimension, theta0)

    @classmethod
    def pnorm(cls, dimension: int, p: float, theta0: float | None = None) -> ProxSetup:
        return cls(ProxKind.PNORM_BALL, dimension, theta0, p)

    @classmethod
    def a_norm(cls, dimension: int, theta0: float | None = None) -> ProxSetup:
        return cls(ProxKind.PNORM_BALL, dimension, theta0, a_norm_exponent(dimension))

    @classmethod
    def from_config(cls, config: dict) -> ProxSetup:
        unknown = set(config) - {"kind", "dimension", "theta0", "p"}
        if unknown:
            raise InputError(f"unknown prox config keys: {sorted(unknown)}")
        try:
            kind = ProxKind(config["kind"])
            dimension = config["dimension"]
        except (KeyError, ValueError) as exc:
            raise InputError(f"bad prox config {config!r}") from exc
        return cls(kind, dimension, config.get("theta0"), config.get("p"))

    def to_config(self) -> dict:
        out = {"kind": self.kind.value, "dimension": self.dimension, "theta0": self.theta0}
        if self.p is not None:
            out["p"] = self.p
        return out

    # norms

    @property
    def primal_exponent(self) -> float:
        if self.kind is ProxKind.EUCLIDEAN_BALL:
            return 2.0
        if self.kind is ProxKind.ENTROPY_SIMPLEX:
            return 1.0
        return self.p

    @property
    def dual_exponent(self) -> float:
        p = self.primal_exponent
        if p == 1.0:
            return math.inf
        return p / (p - 1.0)

    def _check(self, v, name="vector") -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dimension,):
            raise InputError(f"{name} has shape {v.shape}, expected ({self.dimension},)")
        if not np.all(np.isfinite(v)):
            raise InputError(f"{name} has non-finite entries")
        return v

    def norm(self, x) -> float:
        return _lp_norm(self._check(x), self.primal_exponent)

    def dual_norm(self, y) -> float:
        """Norm of a linear functional: ``max <y, x>`` over the primal unit ball."""
        return _lp_norm(self._check(y), self.dual_exponent)

    # feasible set

    def contains(self, x, tol: float = FEASIBILITY_TOL) -> bool:
        x = self._check(x)
        if self.kind is ProxKind.ENTROPY_SIMPLEX:
            return bool(np.all(x >= -tol) and abs(x.sum() - 1.0) <= tol)
        return self.norm(x) <= 1.0 + tol

    def _require_feasible(self, x, name="x") -> np.ndarray:
        x = self._check(x, name)
        if not self.contains(x):
            raise DomainError(f"{name} is outside the feasible set of {self.kind.value}")
        return x

    def center(self) -> np.ndarray:
        """The minimizer of ``d`` over the feasible set."""
        if self.kind is ProxKind.ENTROPY_SIMPLEX:
            return np.full(self.dimension, 1.0 / self.dimension)
        return np.zeros(self.dimension)

    def interior(self, x) -> np.ndarray:
        """Return a starting point on which every divergence is finite.

        Simplex points get a ``1e-12`` share of the uniform distribution so no
        coordinate is exactly zero.  Ball points are returned as a copy.
        """
        x = self._require_feasible(x)
        if self.kind is ProxKind.ENTROPY_SIMPLEX and np.any(x <= 0.0):
            x = np.clip(x, 0.0, None)
            x = (1.0 - INTERIOR_MIX) * x / x.sum() + INTERIOR_MIX / self.dimension
        return x.copy()

    # distance generating function

    def dgf(self, x) -> float:
        x = self._require_feasible(x)
        if self.kind is ProxKind.EUCLIDEAN_BALL:
            return 0.5 * float(x @ x)
        if self.kind is ProxKind.ENTROPY_SIMPLEX:
            x = np.clip(x, 0.0, None)
            return math.log(self.dimension) + float(np.sum(xlogy(x, x)))
        return self.norm(x) ** 2 / (2.0 * (self.p - 1.0))

    def dgf_gradient(self, x) -> np.ndarray:
        x = self._require_feasible(x)
        if self.kind is ProxKind.EUCLIDEAN_BALL:
            return x.copy()
        if self.kind is ProxKind.ENTROPY_SIMPLEX:
            if np.any(x <= 0.0):
                raise DomainError("entropy d.g.f. is not differentiable at a zero coordinate")
            return 1.0 + np.log(x)
        p = self.p
        r = self.norm(x)
        if r == 0.0:
            return np.zeros(self.dimension)
        return np.sign(x) * (np.abs(x) / r) ** (p - 1.0) * r / (p - 1.0)

    def bregman(self, x, y) -> float:
        """Divergence ``V(x, y)`` of the target ``y`` from the center ``x``."""
        x = self._require_feasible(x, "x")
        y = self._require_feasible(y, "y")
        if self.kind is ProxKind.EUCLIDEAN_BALL:
            diff = x - y
            return 0.5 * float(diff @ diff)
        if self.kind is ProxKind.ENTROPY_SIMPLEX:
            if np.any(x <= 0.0):
                raise DomainError("entropy divergence needs a strictly positive center")
            # generalized KL(y || x); equals the plain KL on the simplex
            return float(np.sum(kl_div(np.clip(y, 0.0, None), x)))
        value = self.dgf(y) - self.dgf(x) - float(self.dgf_gradient(x) @ (y - x))
        return max(value, 0.0)

    # proximal mapping

    def mirror_step(self, x, p, h: float) -> np.ndarray:
        """Compute ``argmin_{u in Q} <h p, u> + V(x, u)``."""
        if not (h > 0 and math.isfinite(h)):
            raise InputError(f"step size must be positive and finite, got {h}")
        x = self._check(x, "x")
        p = self._check(p, "p")
        if self.kind is ProxKind.EUCLIDEAN_BALL:
            z = x - h * p
            r = float(np.linalg.norm(z))
            if r > 1.0:
                z = z / r
        elif self.kind is ProxKind.ENTROPY_SIMPLEX:
            with np.errstate(divide="ignore"):
                logits = np.log(np.clip(x, 0.0, None)) - h * p
            top = np.max(logits)
            if not math.isfinite(top):
                raise ComputationError("entropy step has no positive weight left")
            w = np.exp(logits - top)
            z = w / w.sum()
        else:
            z = self._pnorm_step(self.dgf_gradient(x) - h * p)
        if not np.all(np.isfinite(z)):
            raise ComputationError("mirror step produced non-finite output")
        return z

    def _pnorm_step(self, c: np.ndarray) -> np.ndarray:
        # argmin_{||u||_p <= 1} d(u) - <c, u>.  For a fixed radius r the linear
        # term is minimized by the dual direction of c, leaving the scalar problem
        # r^2 / (2(p-1)) - r ||c||_q on [0, 1].
        p = self.p
        q = self.dual_exponent
        scale = float(np.max(np.abs(c)))
        if scale == 0.0:
            return np.zeros(self.dimension)
        c_unit = c / scale
        c_norm = _lp_norm(c_unit, q)
        direction = np.sign(c_unit) * np.abs(c_unit) ** (q - 1.0) / c_norm ** (q - 1.0)
        radius = min(1.0, (p - 1.0) * c_norm * scale)
        return radius * direction

    # constants

    def max_dgf(self) -> float:
        """``max_{x in Q} d(x)``."""
        if self.kind is ProxKind.EUCLIDEAN_BALL:
            return 0.5
        if self.kind is ProxKind.ENTROPY_SIMPLEX:
            return math.log(self.dimension)
        return 1.0 / (2.0 * (self.p - 1.0))

    def suggested_theta0(self) -> float:
        """Default ``theta0 = sqrt(max_Q d)``, valid for any point of the set.

        Euclidean ball: ``sqrt(1/2)``.  Simplex: ``sqrt(ln n)`` (``n = 1``
        falls back to 1 since the set is a single point).  p-norm ball:
        ``sqrt(1 / (2 (p - 1)))``; with the a-norm exponent this is
        ``sqrt(ln n - 1/2)``, i.e. the ``O(sqrt(ln n))`` bound with constant 1.
        """
        value = self.max_dgf()
        return math.sqrt(value) if value > 0 else 1.0
