import json
import math

import numpy as np
import pytest

from onlinemd.errors import InputError
from onlinemd.oracles import AffineAbsObjective, SqrtQuadraticObjective
from onlinemd.problems import (
    Family,
    GeneratorSpec,
    constraint_rows,
    default_run_params,
    generate,
    sample_matrix,
)
from onlinemd.prox import ProxKind

LITERAL_ROWS = [
    [1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
    [1, 2, 3, 4, 5, 6, 7, 8, 9, 10],
    [1, 2, 4, 6, 8, 10, 12, 14, 16, 18],
]


def test_constraint_matrix_literal():
    np.testing.assert_array_equal(constraint_rows(), np.array(LITERAL_ROWS, dtype=float))


@pytest.mark.parametrize("family", ["normal", "uniform", "exponential", "gumbel"])
def test_random_instance_layout(family):
    spec = GeneratorSpec(family, N=7, seed=11)
    inst = generate(spec)
    A = sample_matrix(family, 7, 11, 11)
    assert len(inst.objectives) == 7
    for row, obj in zip(A, inst.objectives):
        assert isinstance(obj, AffineAbsObjective)
        np.testing.assert_array_equal(obj.a, row[:10])
        assert obj.b == row[10]
    np.testing.assert_array_equal(inst.constraint.rows, LITERAL_ROWS)
    assert not inst.constraint.offsets.any()
    assert inst.setup.kind is ProxKind.EUCLIDEAN_BALL and inst.setup.dimension == 10
    assert inst.theta0 == 3.0
    np.testing.assert_array_equal(inst.x0, np.full(10, 1 / math.sqrt(10)))


def test_remark4_instance():
    inst = generate(GeneratorSpec("remark4", N=999, seed=5))
    assert len(inst.objectives) == 3
    assert all(isinstance(o, SqrtQuadraticObjective) for o in inst.objectives)
    j = np.arange(1, 11)
    np.testing.assert_array_equal(inst.constraint.rows, [j, 10 * j, 50 * j])
    np.testing.assert_array_equal(inst.constraint.offsets, [1, 0, 0])
    assert inst.theta0 == 3.0
    config = default_run_params(GeneratorSpec("remark4"))
    assert (config.N, config.eps) == (3, 0.5)
    # the ignored N/seed do not change anything
    assert json.dumps(inst.to_dict()) == json.dumps(generate(GeneratorSpec("remark4")).to_dict())


@pytest.mark.parametrize("family", ["normal", "uniform", "exponential", "gumbel"])
def test_deterministic(family):
    a = generate(GeneratorSpec(family, N=50, seed=123))
    b = generate(GeneratorSpec(family, N=50, seed=123))
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())
    c = generate(GeneratorSpec(family, N=50, seed=124))
    assert json.dumps(a.to_dict()) != json.dumps(c.to_dict())


def test_normal_sanity_band():
    A = sample_matrix("normal", 5, 11, seed=0)
    assert np.all(np.abs(A.mean(axis=0)) <= 1.5)


def _words(seed, count):
    return [int(w) for w in np.random.PCG64(seed).random_raw(count)]


def test_transforms_by_hand():
    seed = 2024
    w = _words(seed, 4)
    u = [(x >> 11) * 2.0**-53 for x in w]
    assert sample_matrix("uniform", 1, 4, seed).ravel().tolist() == pytest.approx(u, rel=0, abs=0)
    expo = [-math.log(1 - v) for v in u]
    np.testing.assert_allclose(sample_matrix("exponential", 1, 4, seed).ravel(), expo, rtol=1e-15)
    gum = [1 - 2 * math.log(-math.log(((x >> 11) + 0.5) * 2.0**-53)) for x in w]
    np.testing.assert_allclose(sample_matrix("gumbel", 1, 4, seed).ravel(), gum, rtol=1e-14)
    w8 = _words(seed, 8)
    u8 = [(x >> 11) * 2.0**-53 for x in w8]
    normal = [math.sqrt(-2 * math.log(1 - u8[2 * k])) * math.cos(2 * math.pi * u8[2 * k + 1]) for k in range(4)]
    np.testing.assert_allclose(sample_matrix("normal", 1, 4, seed).ravel(), normal, rtol=1e-13)


def test_uniform_matches_numpy_generator():
    # numpy's Generator.random uses the same (word >> 11) * 2**-53 mapping
    expected = np.random.Generator(np.random.PCG64(77)).random(33)
    np.testing.assert_array_equal(sample_matrix("uniform", 3, 11, 77).ravel(), expected)


@pytest.mark.parametrize("family,mean,var", [
    ("normal", 0.0, 1.0),
    ("uniform", 0.5, 1 / 12),
    ("exponential", 1.0, 1.0),
    ("gumbel", 1 + 2 * 0.5772156649015329, math.pi**2 / 6 * 4),
])
def test_distribution_moments(family, mean, var):
    A = sample_matrix(family, 20000, 11, seed=1)
    se = math.sqrt(var / A.size)
    assert abs(A.mean() - mean) < 5 * se
    assert A.var() == pytest.approx(var, rel=0.03)


class TestDefaults:
    def test_eps_reference_N(self):
        assert default_run_params(GeneratorSpec("normal", N=3000)).eps == pytest.approx(0.018257418583505537, rel=1e-14)

    def test_eps_at_one(self):
        assert default_run_params(GeneratorSpec("uniform", N=1)).eps == 1.0

    def test_algorithm_unset(self):
        assert default_run_params(GeneratorSpec("gumbel", N=10)).algorithm is None


def test_family_parsing():
    assert Family.parse("1") is Family.NORMAL
    assert Family.parse("4") is Family.GUMBEL
    assert Family.parse("REMARK4") is Family.REMARK4
    assert Family.EXPONENTIAL.example == "3"
    with pytest.raises(InputError):
        Family.parse("5")
    with pytest.raises(InputError):
        GeneratorSpec("normal", N=0)


def test_general_dimension():
    inst = generate(GeneratorSpec("uniform", N=4, dimension=3, seed=0))
    np.testing.assert_array_equal(inst.constraint.rows, [[1, 1, 1], [1, 2, 3], [1, 2, 4]])
    assert inst.setup.dimension == 3


def test_generated_lipschitz_honest():
    inst = generate(GeneratorSpec("gumbel", N=40, seed=2))
    rng = np.random.default_rng(0)
    oracles = [*inst.objectives, inst.constraint]
    for _ in range(1000):
        x, y = rng.normal(size=10), rng.normal(size=10)
        o = oracles[rng.integers(len(oracles))]
        assert abs(o.value(x) - o.value(y)) <= inst.M * np.linalg.norm(x - y) + 1e-9
