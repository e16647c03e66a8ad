"""First-order oracles for the objective and constraint families.

Every oracle exposes ``evaluate(x) -> FirstOrderAnswer`` and
``lipschitz(setup)``, the largest dual norm any of its subgradients can
take.  Kinks resolve deterministically: ``sign(0) = 0`` for absolute values,
the zero vector at the apex of a square-root quadratic, and the smallest
index among tied pieces of a maximum.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import ContractViolation, InputError
from .prox import ProxSetup


class FirstOrderAnswer(NamedTuple):
    value: float
    subgradient: np.ndarray


def _as_vector(v, name: str) -> np.ndarray:
    v = np.array(v, dtype=float)
    if v.ndim != 1:
        raise InputError(f"{name} must be one-dimensional, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InputError(f"{name} has non-finite entries")
    v.setflags(write=False)
    return v


def _check_point(x, dimension: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (dimension,):
        raise InputError(f"point has shape {x.shape}, expected ({dimension},)")
    return x


class AffineAbsObjective:
    """``f(x) = |<a, x> - b|``."""

    family = "affine_abs"

    def __init__(self, a, b: float):
        self.a = _as_vector(a, "a")
        self.b = float(b)
        if not math.isfinite(self.b):
            raise InputError("offset b must be finite")

    @property
    def dimension(self) -> int:
        return self.a.size

    def value(self, x) -> float:
        x = _check_point(x, self.dimension)
        return abs(float(self.a @ x) - self.b)

    def evaluate(self, x) -> FirstOrderAnswer:
        x = _check_point(x, self.dimension)
        r = float(self.a @ x) - self.b
        return FirstOrderAnswer(abs(r), np.sign(r) * self.a)

    def lipschitz(self, setup: ProxSetup) -> float:
        return setup.dual_norm(self.a)

    def to_dict(self) -> dict:
        return {"family": self.family, "a": self.a.tolist(), "b": self.b}

    def __repr__(self):
        return f"AffineAbsObjective(a={self.a.tolist()}, b={self.b})"


class SqrtQuadraticObjective:
    """``f(x) = sqrt(x^T Q x)`` for a symmetric positive semidefinite ``Q``."""

    family = "sqrt_quadratic"

    def __init__(self, form):
        form = np.array(form, dtype=float)
        if form.ndim != 2 or form.shape[0] != form.shape[1]:
            raise InputError(f"form must be square, got shape {form.shape}")
        if not np.all(np.isfinite(form)):
            raise InputError("form has non-finite entries")
        if not np.array_equal(form, form.T):
            raise InputError("form must be symmetric")
        eigvals = np.linalg.eigvalsh(form)
        if eigvals[0] < -1e-12 * max(1.0, abs(eigvals[-1])):
            raise InputError(f"form is not positive semidefinite (min eigenvalue {eigvals[0]:.3g})")
        form.setflags(write=False)
        self.form = form
        self._max_eig = max(float(eigvals[-1]), 0.0)

    @property
    def dimension(self) -> int:
        return self.form.shape[0]

    def _quad(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        qx = self.form @ x
        quad = float(x @ qx)
        if quad < -1e-12:
            raise ContractViolation(f"quadratic form evaluated to {quad}")
        return max(quad, 0.0), qx

    def value(self, x) -> float:
        x = _check_point(x, self.dimension)
        return math.sqrt(self._quad(x)[0])

    def evaluate(self, x) -> FirstOrderAnswer:
        x = _check_point(x, self.dimension)
        quad, qx = self._quad(x)
        value = math.sqrt(quad)
        if value == 0.0:
            return FirstOrderAnswer(0.0, np.zeros(self.dimension))
        return FirstOrderAnswer(value, qx / value)

    def lipschitz(self, setup: ProxSetup) -> float:
        # Subgradients are L^T v with Q = L^T L and ||v||_2 = 1.
        q = setup.dual_exponent
        if math.isinf(q):
            return math.sqrt(max(float(np.max(np.diag(self.form))), 0.0))
        # ||.||_q <= ||.||_2 for q >= 2, so the spectral bound is valid
        return math.sqrt(self._max_eig)

    def to_dict(self) -> dict:
        return {"family": self.family, "form": self.form.tolist()}

    def __repr__(self):
        return f"SqrtQuadraticObjective(dimension={self.dimension})"


class MaxAffineConstraint:
    """``g(x) = max_m (<rows[m], x> + offsets[m])``.

    Component indices are 0-based.
    """

    family = "max_affine"

    def __init__(self, rows, offsets=None):
        rows = np.array(rows, dtype=float)
        if rows.ndim == 1:
            rows = rows[None, :]
        if rows.ndim != 2 or rows.shape[0] < 1:
            raise InputError(f"rows must be a non-empty 2-D array, got shape {rows.shape}")
        if offsets is None:
            offsets = np.zeros(rows.shape[0])
        offsets = np.array(offsets, dtype=float).reshape(-1)
        if offsets.shape != (rows.shape[0],):
            raise InputError(f"expected {rows.shape[0]} offsets, got {offsets.shape[0]}")
        if not (np.all(np.isfinite(rows)) and np.all(np.isfinite(offsets))):
            raise InputError("constraint data has non-finite entries")
        rows.setflags(write=False)
        offsets.setflags(write=False)
        self.rows = rows
        self.offsets = offsets

    @property
    def dimension(self) -> int:
        return self.rows.shape[1]

    @property
    def n_components(self) -> int:
        return self.rows.shape[0]

    def component_values(self, x) -> np.ndarray:
        x = _check_point(x, self.dimension)
        return self.rows @ x + self.offsets

    def value(self, x) -> float:
        return float(np.max(self.component_values(x)))

    def evaluate(self, x) -> FirstOrderAnswer:
        values = self.component_values(x)
        m = int(np.argmax(values))  # first maximizer
        return FirstOrderAnswer(float(values[m]), self.rows[m].copy())

    def active_index(self, x) -> int:
        return int(np.argmax(self.component_values(x)))

    def violated_component(self, x, eps: float) -> tuple[int, FirstOrderAnswer]:
        """Smallest index ``m`` with ``g_m(x) > eps``, with that component's answer."""
        values = self.component_values(x)
        hits = np.flatnonzero(values > eps)
        if hits.size == 0:
            raise ContractViolation(f"no constraint component exceeds eps={eps}")
        m = int(hits[0])
        return m, FirstOrderAnswer(float(values[m]), self.rows[m].copy())

    def lipschitz(self, setup: ProxSetup) -> float:
        return max(setup.dual_norm(row) for row in self.rows)

    def to_dict(self) -> dict:
        return {"family": self.family, "rows": self.rows.tolist(), "offsets": self.offsets.tolist()}

    def __repr__(self):
        return f"MaxAffineConstraint(n_components={self.n_components}, dimension={self.dimension})"


def eval_affine_abs(obj: AffineAbsObjective, x) -> FirstOrderAnswer:
    return obj.evaluate(x)


def eval_max_affine(con: MaxAffineConstraint, x) -> FirstOrderAnswer:
    return con.evaluate(x)


def eval_violated_component(con: MaxAffineConstraint, x, eps: float):
    return con.violated_component(x, eps)


def eval_sqrt_quadratic(obj: SqrtQuadraticObjective, x) -> FirstOrderAnswer:
    return obj.evaluate(x)


_FAMILIES = {
    AffineAbsObjective.family: lambda d: AffineAbsObjective(d["a"], d["b"]),
    SqrtQuadraticObjective.family: lambda d: SqrtQuadraticObjective(d["form"]),
    MaxAffineConstraint.family: lambda d: MaxAffineConstraint(d["rows"], d["offsets"]),
}


def oracle_from_dict(data: dict):
    try:
        build = _FAMILIES[data["family"]]
    except KeyError as exc:
        raise InputError(f"unknown oracle family in {data!r}") from exc
    return build(data)


def lipschitz_bound(instance, setup: ProxSetup | None = None) -> float:
    """Largest dual norm of any objective or constraint subgradient.

    ``instance`` needs ``objectives`` and ``constraint`` attributes; ``setup``
    defaults to ``instance.setup``.
    """
    setup = setup if setup is not None else instance.setup
    bounds = []
    for oracle in [*instance.objectives, instance.constraint]:
        if not hasattr(oracle, "lipschitz"):
            raise NotImplementedError(f"no Lipschitz bound for {type(oracle).__name__}")
        bounds.append(oracle.lipschitz(setup))
    return max(bounds)


class MeanObjective:
    """Average of a list of objectives, vectorized when all are affine-abs."""

    def __init__(self, objectives):
        self.objectives = list(objectives)
        if not self.objectives:
            raise InputError("need at least one objective")
        if all(isinstance(o, AffineAbsObjective) for o in self.objectives):
            self._A = np.stack([o.a for o in self.objectives])
            self._b = np.array([o.b for o in self.objectives])
        else:
            self._A = None

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if self._A is not None:
            return float(np.mean(np.abs(self._A @ x - self._b)))
        return math.fsum(o.value(x) for o in self.objectives) / len(self.objectives)

    def evaluate(self, x) -> FirstOrderAnswer:
        x = np.asarray(x, dtype=float)
        if self._A is not None:
            r = self._A @ x - self._b
            return FirstOrderAnswer(float(np.mean(np.abs(r))), self._A.T @ np.sign(r) / r.size)
        answers = [o.evaluate(x) for o in self.objectives]
        value = math.fsum(a.value for a in answers) / len(answers)
        return FirstOrderAnswer(value, np.mean([a.subgradient for a in answers], axis=0))
