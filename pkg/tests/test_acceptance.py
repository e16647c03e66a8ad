"""Exit criteria for the package.

Each test carries a ``criterion`` marker; ``conftest.py`` prints one PASS/FAIL
line per criterion at the end of the session.
"""

import math
import time

import numpy as np
import pytest

from numeric_argmin import ball_argmin, simplex_argmin
from onlinemd.cli import main
from onlinemd.oracles import AffineAbsObjective, MaxAffineConstraint, SqrtQuadraticObjective
from onlinemd.problems import PAPER_N, GeneratorSpec, default_run_params, generate, remark4_forms
from onlinemd.prox import ProxKind, ProxSetup
from onlinemd.solver import Algorithm, check_bounds, offline_comparator, regret, run

COMPARATOR_TOL = 1e-4
RANDOM_FAMILIES = ["normal", "uniform", "exponential", "gumbel"]


def criterion(number, text):
    return pytest.mark.criterion(number, text)


def random_point(setup, rng):
    n = setup.dimension
    if setup.kind is ProxKind.ENTROPY_SIMPLEX:
        return rng.dirichlet(np.full(n, rng.choice([0.3, 1.0, 5.0])))
    v = rng.normal(size=n)
    return v / setup.norm(v) * rng.uniform() ** (1.0 / n)


def random_setup(rng, kind=None):
    n = int(rng.integers(2, 11))
    kind = kind or rng.choice(["euclidean", "entropy", "pnorm"])
    if kind == "euclidean":
        return ProxSetup.euclidean(n)
    if kind == "entropy":
        return ProxSetup.entropy(n)
    return ProxSetup.pnorm(n, float(rng.uniform(1.05, 2.0)))


# 1 -----------------------------------------------------------------------


@criterion(1, "remark4 instance: Algorithm 3 delta >= 50x smaller than Algorithm 2, reference magnitudes, < 1 s")
def test_remark4_table():
    spec = GeneratorSpec("remark4")
    start = time.perf_counter()
    inst, config = generate(spec), default_run_params(spec)
    r2 = run(inst, config, Algorithm.ADAPTIVE)
    r3 = run(inst, config, Algorithm.ADAPTIVE_MULTI)
    elapsed = time.perf_counter() - start
    ratio = r2.delta / r3.delta
    summary = (f"Alg2: N_J={r2.N_J}, delta={r2.delta:.3f}; Alg3: N_J={r3.N_J}, delta={r3.delta:.3f}; "
               f"ratio={ratio:.4f}; {elapsed:.3f}s")
    print(summary)
    failures = []
    if not ratio >= 50:
        failures.append(f"delta ratio {ratio:.4f} < 50")
    if not abs(r2.N_J - r3.N_J) <= 2:
        failures.append("N_J differ by more than 2")
    if not 500 <= r2.delta <= 5000:
        failures.append("Alg2 delta outside [500, 5000]")
    if not 2 <= r3.delta <= 50:
        failures.append("Alg3 delta outside [2, 50]")
    if not elapsed < 1.0:
        failures.append("runtime >= 1 s")
    assert not failures, "; ".join(failures) + " | " + summary


# 2, 3 --------------------------------------------------------------------


@pytest.fixture(scope="module")
def paper_cells():
    cells = {}
    for family in RANDOM_FAMILIES:
        spec = GeneratorSpec(family, N=PAPER_N[family], seed=0)
        inst, config = generate(spec), default_run_params(spec)
        runs = {}
        for alg in Algorithm:
            start = time.perf_counter()
            report = run(inst, config, alg)
            runs[alg] = (report, time.perf_counter() - start)
        cells[family] = runs
    return cells


@criterion(2, "random families: Algorithm 2 fewer nonprod and >= 10x smaller delta than Algorithm 1, magnitude bands, < 60 s")
@pytest.mark.parametrize("family", RANDOM_FAMILIES)
def test_adaptive_vs_nonadaptive(paper_cells, family):
    (r1, t1), (r2, t2) = paper_cells[family][Algorithm.NON_ADAPTIVE], paper_cells[family][Algorithm.ADAPTIVE]
    print(f"{family} N={r1.N}: Alg1 N_J={r1.N_J} delta={r1.delta:.3f} ({t1:.2f}s); "
          f"Alg2 N_J={r2.N_J} delta={r2.delta:.3f} ({t2:.2f}s)")
    assert r2.N_J < r1.N_J
    assert r1.delta >= 10 * r2.delta
    assert 10 <= r1.delta <= 1000
    assert 0.05 <= r2.delta <= 10
    assert t1 < 60 and t2 < 60


@criterion(3, "random families: Algorithm 3 delta <= 1.1 x Algorithm 2 delta on every cell")
@pytest.mark.parametrize("family", RANDOM_FAMILIES)
def test_multi_vs_adaptive(paper_cells, family):
    (r2, _), (r3, t3) = paper_cells[family][Algorithm.ADAPTIVE], paper_cells[family][Algorithm.ADAPTIVE_MULTI]
    print(f"{family}: Alg2 delta={r2.delta:.4f}, Alg3 N_J={r3.N_J} delta={r3.delta:.4f}")
    assert r3.delta <= 1.1 * r2.delta
    assert t3 < 60


# 4 -----------------------------------------------------------------------


@criterion(4, "bound suite on 50 randomized desk-scale instances")
def test_bound_suite():
    rng = np.random.default_rng(20240)
    failures = []
    for case in range(50):
        family = RANDOM_FAMILIES[case % 4]
        n = int(rng.integers(2, 11))
        N = int(rng.integers(10, 201))
        spec = GeneratorSpec(family, N=N, dimension=n, seed=int(rng.integers(2**31)))
        inst, config = generate(spec), default_run_params(spec)
        comparator = offline_comparator(inst)
        for alg in Algorithm:
            report = run(inst, config, alg)
            value = regret(report, inst, comparator.value)
            result = check_bounds(report, config, inst.M, inst.theta0, value, tol=COMPARATOR_TOL)
            if not result.passed or result.regret_within_delta is not True:
                failures.append((case, family, n, N, alg.value, result.failures(), result.details))
    assert not failures, failures


# 5 -----------------------------------------------------------------------


@criterion(5, "closed-form mirror steps match brute-force argmin within 1e-6 (200 cases, dims 2-5)")
@pytest.mark.parametrize("kind", ["euclidean", "entropy"])
def test_prox_oracle_equivalence(kind):
    rng = np.random.default_rng(5 if kind == "euclidean" else 6)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 6))
        setup = ProxSetup.euclidean(n) if kind == "euclidean" else ProxSetup.entropy(n)
        x = random_point(setup, rng)
        if kind == "entropy":
            x = np.clip(x, 1e-6, None)
            x /= x.sum()
        p = rng.normal(size=n) * rng.choice([0.5, 2.0, 5.0])
        h = float(rng.uniform(0.05, 2.0))
        z = setup.mirror_step(x, p, h)
        brute = ball_argmin(x, p, h) if kind == "euclidean" else simplex_argmin(x, p, h)
        worst = max(worst, float(np.max(np.abs(z - brute))))
    print(f"{kind}: worst l_inf gap {worst:.2e}")
    assert worst <= 1e-6


# 6 -----------------------------------------------------------------------


@criterion(6, "per-step mirror inequality holds within 1e-8 on 1000 random tuples")
def test_mirror_step_inequality():
    rng = np.random.default_rng(6)
    worst = -math.inf
    for t in range(1000):
        setup = random_setup(rng, ["euclidean", "entropy", "pnorm"][t % 3])
        x = random_point(setup, rng)
        if setup.kind is ProxKind.ENTROPY_SIMPLEX:
            x = setup.interior(np.clip(x, 1e-9, None) / np.clip(x, 1e-9, None).sum())
        u = random_point(setup, rng)
        p = rng.normal(size=setup.dimension) * rng.choice([0.1, 1.0, 4.0])
        h = float(rng.uniform(0.01, 2.0))
        z = setup.mirror_step(x, p, h)
        lhs = h * p @ (x - u)
        rhs = h**2 / 2 * setup.dual_norm(p) ** 2 + setup.bregman(x, u) - setup.bregman(z, u)
        worst = max(worst, lhs - rhs)
    print(f"max lhs - rhs = {worst:.3e}")
    assert worst <= 1e-8


# 7 -----------------------------------------------------------------------


@criterion(7, "strong convexity and subgradient validity on 1000 samples each")
@pytest.mark.parametrize("kind", ["euclidean", "entropy", "pnorm", "a_norm"])
def test_strong_convexity(kind):
    rng = np.random.default_rng(7)
    setup = {"euclidean": ProxSetup.euclidean(6), "entropy": ProxSetup.entropy(6),
             "pnorm": ProxSetup.pnorm(6, 1.3), "a_norm": ProxSetup.a_norm(20)}[kind]
    for _ in range(1000):
        x, y = random_point(setup, rng), random_point(setup, rng)
        if setup.kind is ProxKind.ENTROPY_SIMPLEX:
            x = setup.interior(np.clip(x, 1e-12, None) / np.clip(x, 1e-12, None).sum())
        v = setup.bregman(x, y)
        assert v >= 0.5 * setup.norm(x - y) ** 2 - 1e-9
        assert v >= 0
        assert abs(setup.bregman(x, x)) <= 1e-12


@criterion(7, "strong convexity and subgradient validity on 1000 samples each")
@pytest.mark.parametrize("family", ["affine_abs", "max_affine", "sqrt_pairs", "sqrt_banded", "sqrt_norm"])
def test_subgradient_validity(family):
    rng = np.random.default_rng(8)
    oracle = {
        "affine_abs": AffineAbsObjective(rng.normal(size=10), rng.normal()),
        "max_affine": MaxAffineConstraint(rng.normal(size=(3, 10)), rng.normal(size=3)),
        "sqrt_pairs": SqrtQuadraticObjective(remark4_forms()[0]),
        "sqrt_banded": SqrtQuadraticObjective(remark4_forms()[1]),
        "sqrt_norm": SqrtQuadraticObjective(remark4_forms()[2]),
    }[family]
    for _ in range(1000):
        x, y = rng.normal(size=10), rng.normal(size=10)
        if rng.uniform() < 0.1:
            x = np.zeros(10)  # hits the apex / kinks of the families
        ans = oracle.evaluate(x)
        assert oracle.value(y) >= ans.value + ans.subgradient @ (y - x) - 1e-9


# 8 -----------------------------------------------------------------------


@criterion(8, "adaptive-step summation inequality on 1000 random positive sequences")
def test_induction_inequality():
    rng = np.random.default_rng(9)
    for _ in range(1000):
        length = int(rng.integers(1, 10_001))
        values = rng.lognormal(mean=0.0, sigma=rng.uniform(0, 4), size=length)
        squares = values**2
        lhs = math.fsum(squares / np.sqrt(np.cumsum(squares)))
        assert lhs <= 2 * math.sqrt(math.fsum(squares))


# 9 -----------------------------------------------------------------------


@criterion(9, "identical flags and seed give byte-identical JSON reports")
def test_determinism(tmp_path, capsys):
    outputs = []
    for attempt in range(2):
        trace = tmp_path / f"trace{attempt}.json"
        code = main(["--example", "1,remark4", "--n", "500", "--algorithms", "1,2,3", "--seed", "42",
                     "--format", "json", "--trace-out", str(trace), "--trace-iterates"])
        assert code == 0
        outputs.append((capsys.readouterr().out.encode(), trace.read_bytes()))
    assert outputs[0][0] == outputs[1][0]
    assert outputs[0][1] == outputs[1][1]
