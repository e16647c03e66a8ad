"""Online mirror descent with a functional constraint.

A step is *productive* when ``g(x^k) <= eps``: the next objective ``f_i``
is queried once at ``x^k`` and the iterate moves along its subgradient.
Otherwise the step moves along a constraint subgradient.  The loop stops
right after the ``N``-th productive step.

Three step rules are available:

``nonadaptive``
    fixed ``h = eps / M**2``.
``adaptive``
    ``h_k = theta0 / sqrt(sum_{t<=k} M_t**2)`` with ``M_k`` the dual norm
    of the subgradient used at step ``k``; constraint steps follow the
    max-aggregate ``g``.
``adaptive_multi``
    as ``adaptive``, but constraint steps follow the first violated
    component ``g_m`` instead of the maximum.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import BudgetExhausted, InfeasibleError, InputError
from .instance import ProblemInstance
from .oracles import AffineAbsObjective, MeanObjective, SqrtQuadraticObjective
from .prox import ProxKind, ProxSetup

REPORT_FORMAT = "onlinemd.run_report/1"


class Algorithm(str, Enum):
    NON_ADAPTIVE = "nonadaptive"
    ADAPTIVE = "adaptive"
    ADAPTIVE_MULTI = "adaptive_multi"

    @classmethod
    def parse(cls, value) -> Algorithm:
        """Accept an ``Algorithm``, its value, or the numbers 1, 2, 3."""
        if isinstance(value, cls):
            return value
        numbered = {"1": cls.NON_ADAPTIVE, "2": cls.ADAPTIVE, "3": cls.ADAPTIVE_MULTI}
        key = str(value).strip()
        if key in numbered:
            return numbered[key]
        try:
            return cls(key)
        except ValueError:
            raise InputError(f"unknown algorithm {value!r}") from None

    @property
    def number(self) -> int:
        return list(Algorithm).index(self) + 1


def default_step_cap(N: int, eps: float, M: float, theta0: float) -> int:
    """Worst-case total step count ``N (1 + ceil(2 M^2 theta0^2 / eps^2)) + 1``."""
    return N * (1 + math.ceil(2.0 * M**2 * theta0**2 / eps**2)) + 1


@dataclass(frozen=True)
class RunConfig:
    N: int
    eps: float
    algorithm: Algorithm | None = None
    max_total_steps: int | None = None
    seed: int = 0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise InputError(f"N must be a positive integer, got {self.N}")
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise InputError(f"eps must be positive and finite, got {self.eps}")
        if self.algorithm is not None:
            object.__setattr__(self, "algorithm", Algorithm.parse(self.algorithm))
        if self.max_total_steps is not None and self.max_total_steps < self.N:
            raise InputError("max_total_steps must be at least N")

    @classmethod
    def from_constant(cls, N: int, C: float, **kwargs) -> RunConfig:
        """Config with ``eps = C / sqrt(N)``."""
        if not C > 0:
            raise InputError(f"C must be positive, got {C}")
        return cls(N, C / math.sqrt(N), **kwargs)

    @property
    def C(self) -> float:
        return self.eps * math.sqrt(self.N)

    def step_cap(self, M: float, theta0: float) -> int:
        if self.max_total_steps is not None:
            return self.max_total_steps
        return default_step_cap(self.N, self.eps, M, theta0)


@dataclass(frozen=True, eq=False)
class StepRecord:
    """One iteration.  ``iterate`` is the point ``x^k`` the oracles saw.

    ``objective_index`` is set on productive steps; ``component`` names the
    constraint piece whose subgradient was used on non-productive steps.
    """

    k: int
    productive: bool
    M_k: float
    h_k: float
    constraint_value: float
    objective_index: int | None = None
    component: int | None = None
    iterate: np.ndarray | None = None

    def to_dict(self, include_iterate: bool = False) -> dict:
        out = {
            "k": self.k,
            "productive": self.productive,
            "i": self.objective_index,
            "component": self.component,
            "M_k": self.M_k,
            "h_k": self.h_k,
            "g": self.constraint_value,
        }
        if include_iterate and self.iterate is not None:
            out["x"] = self.iterate.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> StepRecord:
        x = data.get("x")
        return cls(
            k=int(data["k"]),
            productive=bool(data["productive"]),
            M_k=float(data["M_k"]),
            h_k=float(data["h_k"]),
            constraint_value=float(data["g"]),
            objective_index=data.get("i"),
            component=data.get("component"),
            iterate=None if x is None else np.asarray(x, dtype=float),
        )


@dataclass(frozen=True, eq=False)
class RunReport:
    algorithm: Algorithm
    N: int
    eps: float
    theta0: float
    M: float
    trace: tuple
    delta: float | None
    elapsed: float | None = None
    seed: int = 0
    setup: dict | None = None
    label: str = ""
    regret: float | None = None
    comparator_value: float | None = None
    completed: bool = True

    @property
    def total_steps(self) -> int:
        return len(self.trace)

    @property
    def n_productive(self) -> int:
        return sum(1 for r in self.trace if r.productive)

    @property
    def N_J(self) -> int:
        return self.total_steps - self.n_productive

    @property
    def productive_iterates(self) -> list:
        """``(i, x^k)`` pairs, one per productive step."""
        return [(r.objective_index, r.iterate) for r in self.trace if r.productive]

    def to_dict(self, include_iterates: bool = False, include_timing: bool = False) -> dict:
        summary = {
            "N": self.N,
            "N_J": self.N_J,
            "total_steps": self.total_steps,
            "delta": self.delta,
            "regret": self.regret,
            "comparator_value": self.comparator_value,
            "completed": self.completed,
        }
        if include_timing:
            summary["elapsed_seconds"] = self.elapsed
        return {
            "format": REPORT_FORMAT,
            "config": {
                "label": self.label,
                "algorithm": self.algorithm.value,
                "N": self.N,
                "eps": self.eps,
                "theta0": self.theta0,
                "M": self.M,
                "seed": self.seed,
                "setup": self.setup,
            },
            "summary": summary,
            "trace": [r.to_dict(include_iterates) for r in self.trace],
        }

    @classmethod
    def from_dict(cls, data: dict) -> RunReport:
        if data.get("format") != REPORT_FORMAT:
            raise InputError(f"not a run report (format={data.get('format')!r})")
        config, summary = data["config"], data["summary"]
        return cls(
            algorithm=Algorithm.parse(config["algorithm"]),
            N=int(config["N"]),
            eps=float(config["eps"]),
            theta0=float(config["theta0"]),
            M=float(config["M"]),
            trace=tuple(StepRecord.from_dict(r) for r in data["trace"]),
            delta=summary["delta"],
            elapsed=summary.get("elapsed_seconds"),
            seed=int(config.get("seed", 0)),
            setup=config.get("setup"),
            label=config.get("label", ""),
            regret=summary.get("regret"),
            comparator_value=summary.get("comparator_value"),
            completed=bool(summary.get("completed", True)),
        )

    def dumps(self, include_iterates: bool = False, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_iterates, include_timing), indent=1)

    def save(self, path, include_iterates: bool = False, include_timing: bool = False) -> None:
        Path(path).write_text(self.dumps(include_iterates, include_timing))

    @classmethod
    def load(cls, path) -> RunReport:
        return cls.from_dict(json.loads(Path(path).read_text()))


# certificate


def certificate(trace, algorithm, eps: float, theta0: float, M: float, N: int) -> float:
    """Guaranteed accuracy ``delta`` recomputed from a complete trace.

    nonadaptive: ``eps/2 + M^2 theta0^2 / (eps N) - eps N_J / (2N)``
    adaptive(_multi): ``(2 theta0 / N) sqrt(sum_k M_k^2) - eps N_J / N``
    """
    algorithm = Algorithm.parse(algorithm)
    n_productive = sum(1 for r in trace if r.productive)
    if n_productive != N:
        raise InputError(f"trace has {n_productive} productive steps, expected {N}")
    n_nonprod = len(trace) - N
    if algorithm is Algorithm.NON_ADAPTIVE:
        return eps / 2.0 + M**2 * theta0**2 / (eps * N) - eps * n_nonprod / (2.0 * N)
    total = math.fsum(r.M_k**2 for r in trace)
    return 2.0 * theta0 / N * math.sqrt(total) - eps * n_nonprod / N


# the online loop


def _run(instance: ProblemInstance, config: RunConfig, algorithm: Algorithm) -> RunReport:
    if config.algorithm is not None and Algorithm.parse(config.algorithm) is not algorithm:
        raise InputError(f"config selects {config.algorithm.value}, called {algorithm.value}")
    N, eps = config.N, config.eps
    if len(instance.objectives) < N:
        raise InputError(f"instance has {len(instance.objectives)} objectives, run needs {N}")
    setup = instance.setup
    theta0 = setup.theta0
    M = instance.M
    if algorithm is Algorithm.NON_ADAPTIVE and not M > 0:
        raise InputError("non-adaptive steps need a positive Lipschitz bound M")
    constraint = instance.constraint
    cap = config.step_cap(M, theta0)

    x = instance.x0.copy()
    trace = []
    i = 0
    sum_sq = 0.0
    fixed_h = eps / M**2 if algorithm is Algorithm.NON_ADAPTIVE else None
    start = time.perf_counter()

    def report(completed: bool) -> RunReport:
        delta = certificate(trace, algorithm, eps, theta0, M, N) if completed else None
        return RunReport(
            algorithm=algorithm, N=N, eps=eps, theta0=theta0, M=M, trace=tuple(trace),
            delta=delta, elapsed=time.perf_counter() - start, seed=config.seed,
            setup=setup.to_config(), label=instance.label, completed=completed,
        )

    k = 0
    while i < N:
        if k >= cap:
            raise BudgetExhausted(
                f"{k} steps taken, only {i} of {N} productive", report(completed=False)
            )
        g_answer = constraint.evaluate(x)
        g_value = g_answer.value
        objective_index = component = None
        if g_value <= eps:
            productive = True
            objective_index = i
            direction = instance.objectives[i].evaluate(x).subgradient
            i += 1
        else:
            productive = False
            if algorithm is Algorithm.ADAPTIVE_MULTI:
                component, answer = constraint.violated_component(x, eps)
                direction = answer.subgradient
            else:
                component = constraint.active_index(x)
                direction = g_answer.subgradient

        if fixed_h is not None:
            M_k, h = M, fixed_h
        else:
            M_k = setup.dual_norm(direction)
            sum_sq += M_k**2
            h = theta0 / math.sqrt(sum_sq) if sum_sq > 0.0 else 0.0

        trace.append(StepRecord(k, productive, M_k, h, g_value, objective_index, component, x))
        if h > 0.0:
            x = setup.mirror_step(x, direction, h)
        k += 1

    return report(completed=True)


def run_nonadaptive(instance: ProblemInstance, config: RunConfig) -> RunReport:
    return _run(instance, config, Algorithm.NON_ADAPTIVE)


def run_adaptive(instance: ProblemInstance, config: RunConfig) -> RunReport:
    return _run(instance, config, Algorithm.ADAPTIVE)


def run_adaptive_multi(instance: ProblemInstance, config: RunConfig) -> RunReport:
    return _run(instance, config, Algorithm.ADAPTIVE_MULTI)


def run(instance: ProblemInstance, config: RunConfig, algorithm=None) -> RunReport:
    """Dispatch on ``algorithm`` (or ``config.algorithm``)."""
    chosen = algorithm if algorithm is not None else config.algorithm
    if chosen is None:
        raise InputError("no algorithm selected")
    chosen = Algorithm.parse(chosen)
    return _run(instance, replace(config, algorithm=chosen), chosen)


# offline comparator and regret


class Comparator(NamedTuple):
    point: np.ndarray
    value: float


def _set_constraints(cp, u, setup: ProxSetup):
    if setup.kind is ProxKind.EUCLIDEAN_BALL:
        return [cp.norm(u, 2) <= 1]
    if setup.kind is ProxKind.ENTROPY_SIMPLEX:
        return [u >= 0, cp.sum(u) == 1]
    return [cp.pnorm(u, setup.p) <= 1]


def _conic_comparator(instance: ProblemInstance, constrained: bool) -> np.ndarray:
    import cvxpy as cp

    n = instance.dimension
    u = cp.Variable(n)
    affine = [o for o in instance.objectives if isinstance(o, AffineAbsObjective)]
    terms = []
    if affine:
        A = np.stack([o.a for o in affine])
        b = np.array([o.b for o in affine])
        terms.append(cp.sum(cp.abs(A @ u - b)))
    for o in instance.objectives:
        if isinstance(o, SqrtQuadraticObjective):
            w, V = np.linalg.eigh(o.form)
            root = np.sqrt(np.clip(w, 0.0, None))[:, None] * V.T
            terms.append(cp.norm(root @ u, 2))
        elif not isinstance(o, AffineAbsObjective):
            raise NotImplementedError(f"no conic model for {type(o).__name__}")
    cons = _set_constraints(cp, u, instance.setup)
    if constrained:
        con = instance.constraint
        cons.append(con.rows @ u + con.offsets <= 0)
    problem = cp.Problem(cp.Minimize(cp.sum(terms) / len(instance.objectives)), cons)
    problem.solve(solver=cp.CLARABEL)
    if problem.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) or u.value is None:
        raise InfeasibleError(f"comparator problem status: {problem.status}")
    return np.asarray(u.value, dtype=float)


def _clean(setup: ProxSetup, x: np.ndarray) -> np.ndarray:
    # remove solver-level infeasibility of order 1e-9
    if setup.kind is ProxKind.ENTROPY_SIMPLEX:
        x = np.clip(x, 0.0, None)
        return x / x.sum()
    r = setup.norm(x)
    return x / r if r > 1.0 else x


def _mirror_comparator(instance: ProblemInstance, iterations: int, constrained: bool) -> np.ndarray:
    setup = instance.setup
    mean = MeanObjective(instance.objectives)
    con = instance.constraint
    x = instance.x0.copy()
    best, best_value = None, math.inf
    for k in range(iterations):
        g = con.evaluate(x) if constrained else None
        if g is not None and g.value > 0.0:
            direction = g.subgradient
        else:
            answer = mean.evaluate(x)
            if answer.value < best_value:
                best, best_value = x, answer.value
            direction = answer.subgradient
        scale = setup.dual_norm(direction)
        if scale == 0.0:
            break
        x = setup.mirror_step(x, direction, setup.theta0 / (scale * math.sqrt(k + 1)))
    if best is None:
        raise InfeasibleError(f"no feasible iterate in {iterations} iterations")
    return best


def offline_comparator(
    instance: ProblemInstance,
    iterations: int = 100_000,
    constrained: bool = True,
    method: str = "conic",
) -> Comparator:
    """Minimize the mean objective over the feasible set, offline.

    ``constrained`` adds ``g(x) <= 0``.  ``method="conic"`` solves the exact
    convex program with an interior point solver (accuracy around 1e-8);
    ``method="mirror"`` runs ``iterations`` steps of switching subgradient
    mirror descent with ``theta0 / (||s||_* sqrt(k+1))`` steps and returns
    the best feasible iterate.
    """
    if method == "conic":
        x = _clean(instance.setup, _conic_comparator(instance, constrained))
    elif method == "mirror":
        x = _mirror_comparator(instance, iterations, constrained)
    else:
        raise InputError(f"unknown comparator method {method!r}")
    return Comparator(x, MeanObjective(instance.objectives).value(x))


def regret(report: RunReport, instance: ProblemInstance, comparator_value: float) -> float:
    """Mean of ``f_i(x^k)`` over the productive steps minus ``comparator_value``."""
    pairs = report.productive_iterates
    if len(pairs) != report.N or any(x is None for _, x in pairs):
        raise InputError("report has no stored productive iterates")
    total = math.fsum(instance.objectives[i].value(x) for i, x in pairs)
    return total / report.N - comparator_value


# bound checks


@dataclass(frozen=True)
class BoundCheckResult:
    """Outcome of the a-posteriori checks on one run.

    ``nonprod_linear`` is ``None`` when the regret is negative, where that
    bound does not apply.  ``regret_within_delta`` is ``None`` without a
    regret value.
    """

    regret_within_delta: bool | None
    nonprod_linear: bool | None
    max_nonprod_run: bool
    nonprod_quadratic: bool
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        flags = (self.regret_within_delta, self.nonprod_linear, self.max_nonprod_run, self.nonprod_quadratic)
        return all(f is not False for f in flags)

    def failures(self) -> list[str]:
        names = ("regret_within_delta", "nonprod_linear", "max_nonprod_run", "nonprod_quadratic")
        return [name for name in names if getattr(self, name) is False]


def longest_nonproductive_run(trace) -> int:
    longest = current = 0
    for r in trace:
        current = 0 if r.productive else current + 1
        longest = max(longest, current)
    return longest


def check_bounds(report: RunReport, config: RunConfig | None, M: float, theta0: float,
                 regret_value: float | None, tol: float = 1e-4) -> BoundCheckResult:
    """Check the regret and non-productive-step bounds for a finished run.

    * ``regret <= delta + tol``
    * if ``regret >= 0``: ``N_J <= N (1 + 2 M^2 theta0^2 / C^2)`` with ``C = eps sqrt(N)``
    * longest non-productive streak ``< 2 M^2 theta0^2 / eps^2 + 1``
    * ``N_J <= (2 M^2 theta0^2 / eps^2) N``
    """
    N = config.N if config is not None else report.N
    eps = config.eps if config is not None else report.eps
    n_nonprod = report.N_J
    C = eps * math.sqrt(N)
    ratio = 2.0 * M**2 * theta0**2 / eps**2
    linear_cap = N * (1.0 + 2.0 * M**2 * theta0**2 / C**2)
    streak = longest_nonproductive_run(report.trace)

    within = None
    linear = None
    if regret_value is not None:
        within = bool(regret_value <= report.delta + tol)
        if regret_value >= 0:
            linear = bool(n_nonprod <= linear_cap)
    return BoundCheckResult(
        regret_within_delta=within,
        nonprod_linear=linear,
        max_nonprod_run=bool(streak < ratio + 1.0),
        nonprod_quadratic=bool(n_nonprod <= ratio * N),
        details={
            "regret": regret_value,
            "delta": report.delta,
            "N_J": n_nonprod,
            "linear_cap": linear_cap,
            "longest_streak": streak,
            "streak_cap": ratio + 1.0,
            "quadratic_cap": ratio * N,
        },
    )


# offline audit


def audit_report(report: RunReport, tol: float = 1e-4) -> list[str]:
    """Re-verify a stored report; returns human-readable failures (empty if clean)."""
    failures = []
    trace = report.trace
    n_productive = report.n_productive
    if not report.completed:
        failures.append("run incomplete: budget exhausted")
    if n_productive != report.N:
        failures.append(f"productive count {n_productive} != N={report.N}")
    if trace and not trace[-1].productive:
        failures.append("last step is not productive")
    if [r.k for r in trace] != list(range(len(trace))):
        failures.append("step indices are not 0..K-1")
    if [r.objective_index for r in trace if r.productive] != list(range(n_productive)):
        failures.append("objectives not consumed in order")

    bad = [r.k for r in trace if r.productive != (r.constraint_value <= report.eps)]
    if bad:
        failures.append(f"productivity dichotomy violated at step {bad[0]}")

    if report.algorithm is Algorithm.NON_ADAPTIVE:
        h = report.eps / report.M**2 if report.M > 0 else math.nan
        if any(r.h_k != h or r.M_k != report.M for r in trace):
            failures.append("step rule violated: fixed step eps/M^2 expected")
    else:
        running = 0.0
        for r in trace:
            running += r.M_k**2
            expected_zero = running == 0.0
            if expected_zero and r.h_k != 0.0:
                failures.append(f"step rule violated at step {r.k}")
                break
            if not expected_zero and abs(r.h_k * math.sqrt(running) - report.theta0) > 1e-12 * report.theta0:
                failures.append(f"step rule violated at step {r.k}")
                break

    if report.completed and n_productive == report.N:
        recomputed = certificate(trace, report.algorithm, report.eps, report.theta0, report.M, report.N)
        if report.delta != recomputed:
            failures.append(f"certificate mismatch: stored {report.delta!r}, recomputed {recomputed!r}")
        result = check_bounds(report, None, report.M, report.theta0, report.regret, tol)
        for name in result.failures():
            failures.append(f"bound check failed: {name}")

    if report.setup is not None:
        setup = ProxSetup.from_config(report.setup)
        for r in trace:
            if r.iterate is not None and not setup.contains(r.iterate):
                failures.append(f"iterate {r.k} infeasible")
                break
    return failures
