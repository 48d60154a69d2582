import numpy as np
import pytest

from ecmo_solver.benchmarks import get_fixture, weighted_normal_equations
from ecmo_solver.errors import CapabilityError, InputError, NumericError
from ecmo_solver.functions import MonomialFunction, NativeFunction
from ecmo_solver.problem import (
    ECMOProblem,
    MTBLProblem,
    StochasticProblem,
    affine_system,
    default_probe_points,
    eval_constraint_jacobian,
    eval_constraints,
    eval_objective_jacobian,
    eval_objectives,
    gradcheck,
    mtbl_to_ecmo,
    quadratic_hessian,
    sample_stream,
    shift_positive,
    unshift_values,
)


def test_evaluate_shapes():
    problem = get_fixture("gebken_circle").ecmo
    evaluation = problem.evaluate(np.array([0.5, 0.5]))
    assert evaluation.F.shape == (2,)
    assert evaluation.JF.shape == (2, 2)
    assert evaluation.h.shape == (1,)
    assert evaluation.Jh.shape == (1, 2)
    assert np.array_equal(evaluation.F, eval_objectives(problem, [0.5, 0.5]))
    assert np.array_equal(evaluation.JF, eval_objective_jacobian(problem, [0.5, 0.5]))
    assert np.array_equal(evaluation.h, eval_constraints(problem, [0.5, 0.5]))
    assert np.array_equal(evaluation.Jh, eval_constraint_jacobian(problem, [0.5, 0.5]))


def test_gebken_values():
    problem = get_fixture("gebken_circle").ecmo
    evaluation = problem.evaluate(np.array([1.0, 0.0]))
    assert np.array_equal(evaluation.F, [2.0, 2.0])
    assert np.array_equal(evaluation.h, [0.0])
    assert np.array_equal(evaluation.Jh, [[-2.0, 0.0]])


def test_dimension_mismatch():
    with pytest.raises(InputError):
        ECMOProblem(objectives=(MonomialFunction.variable(0, 2), MonomialFunction.variable(0, 3)))
    problem = get_fixture("quad_affine").ecmo
    with pytest.raises(InputError):
        problem.evaluate(np.zeros(3))


def test_problem_needs_objectives():
    with pytest.raises(InputError):
        ECMOProblem(objectives=())


def test_bounding_box_is_validated():
    with pytest.raises(InputError):
        ECMOProblem(objectives=(MonomialFunction.variable(0, 2),), bounding_box=[[0.0, 1.0]])


def test_mtbl_reduction():
    problem = get_fixture("forum_llgc").ecmo
    assert problem.num_constraints == 3
    assert problem.metadata["mtbl"] == {"p": 1, "q": 3}
    evaluation = problem.evaluate(np.array([1.0, 2.0, 3.0, 0.5]))
    assert np.allclose(evaluation.h, [1.0, 2.0, 0.125], rtol=0, atol=1e-15)
    expected = np.array([[-1.0, 1.0, 0.0, 0.0], [-1.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 0.75]])
    assert np.allclose(evaluation.Jh, expected, rtol=0, atol=1e-15)


def test_cubic_lower_level_jacobian():
    problem = get_fixture("llgc_cubic").ecmo
    evaluation = problem.evaluate(np.array([-1.0, 1.0]))
    assert np.array_equal(evaluation.h, [0.0])
    assert np.array_equal(evaluation.Jh, [[1.0, 3.0]])


def test_native_lower_level_needs_hessian():
    g = NativeFunction(lambda z: z[1] ** 2, lambda z: np.array([0.0, 2 * z[1]]), 2)
    mtbl = MTBLProblem(upper_objectives=(MonomialFunction.variable(0, 2),), lower_objective=g, p=1, q=1)
    with pytest.raises(CapabilityError):
        mtbl_to_ecmo(mtbl)


def test_native_lower_level_jacobian():
    fixture = get_fixture("toy_data_weighting")
    rng = np.random.default_rng(3)
    for _ in range(5):
        z = rng.uniform(-1, 1, size=fixture.ecmo.dimension)
        for constraint in fixture.ecmo.constraints:
            assert gradcheck(constraint, z).max_rel_err <= 1e-6


def test_native_lower_level_solution_is_stationary():
    problem = get_fixture("toy_data_weighting").ecmo
    for x in ([0.0, 0.0], [1.5, -0.5], [-2.0, 1.0]):
        z = np.concatenate([x, weighted_normal_equations(np.array(x))])
        assert np.linalg.norm(eval_constraints(problem, z)) <= 1e-10


def test_mtbl_dimensions_are_validated():
    with pytest.raises(InputError):
        MTBLProblem(
            upper_objectives=(MonomialFunction.variable(0, 2),),
            lower_objective=MonomialFunction.variable(0, 3),
            p=1,
            q=1,
        )


def test_noiseless_sample_is_exact():
    problem = get_fixture("gebken_circle").ecmo
    stochastic = StochasticProblem(problem)
    z = np.array([0.3, -0.2])
    sampled = stochastic.sample(z, 10, 10, sample_stream(0))
    exact = problem.evaluate(z)
    assert np.array_equal(sampled.F, exact.F)
    assert np.array_equal(sampled.Jh, exact.Jh)


def test_sample_stream_is_reproducible():
    stochastic = StochasticProblem(get_fixture("gebken_circle").ecmo, 0.1, 0.1)
    z = np.array([0.3, -0.2])
    first = stochastic.sample(z, 4, 4, sample_stream(5, (1, 2)))
    second = stochastic.sample(z, 4, 4, sample_stream(5, (1, 2)))
    other = stochastic.sample(z, 4, 4, sample_stream(5, (2, 1)))
    assert np.array_equal(first.F, second.F)
    assert np.array_equal(first.Jh, second.Jh)
    assert not np.array_equal(first.F, other.F)


def test_batch_noise_scales_with_batch_size():
    problem = get_fixture("gebken_circle").ecmo
    stochastic = StochasticProblem(problem, objective_noise_sigma=1.0)
    z = np.array([0.3, -0.2])
    rng = sample_stream(11)
    errors = np.array([stochastic.sample(z, 100, 1, rng).F - problem.evaluate(z).F for _ in range(4000)])
    assert errors.std() == pytest.approx(0.1, rel=0.1)
    assert abs(errors.mean()) <= 0.01


def test_negative_noise_is_rejected():
    with pytest.raises(InputError):
        StochasticProblem(get_fixture("gebken_circle").ecmo, -1.0)


def test_shift_positive():
    problem = get_fixture("quad_affine").ecmo
    shifted = shift_positive(problem, [np.zeros(2)], 0.1)
    assert shifted.metadata["shifts"] == [0.1, 0.0]
    assert np.allclose(eval_objectives(shifted, np.zeros(2)), [0.1, 20.0], rtol=0, atol=1e-15)
    assert problem.metadata.get("shifts") is None

    twice = shift_positive(shifted, [np.zeros(2), np.array([2.0, 2.0])], 0.5)
    assert twice.shifts == pytest.approx([0.5, 0.5])
    values = eval_objectives(twice, np.array([2.0, 2.0]))
    assert np.allclose(unshift_values(twice, values), eval_objectives(problem, np.array([2.0, 2.0])))


def test_shift_positive_covers_probes():
    problem = get_fixture("quad_affine").ecmo
    probes = default_probe_points(problem, [np.ones(2)], count=200, seed=1)
    assert len(probes) == 201
    shifted = shift_positive(problem, probes, 0.1)
    assert shifted.objective_values_batch(np.array(probes)).min() >= 0.1 - 1e-12


def test_gradcheck_of_linear_function():
    z1, z2 = MonomialFunction.variables(2)
    report = gradcheck(2 * z1 - 3 * z2 + 1, np.array([0.4, -1.3]))
    assert report.max_rel_err <= 1e-9
    assert report.passed(1e-6)
    assert report.per_coordinate.shape == (2,)


def test_gradcheck_flags_wrong_gradient():
    f = NativeFunction(lambda z: z[0] ** 2, lambda z: np.array([3 * z[0]]), 1)
    assert not gradcheck(f, np.array([1.0])).passed(1e-6)


# fmt: off
@pytest.mark.parametrize("value, gradient, coordinate", [
    (lambda z: np.inf, lambda z: np.zeros(2), 0),
    (lambda z: 0.0, lambda z: np.array([1.0, np.nan]), 1),
])
# fmt: on
def test_gradcheck_non_finite(value, gradient, coordinate: int):
    with pytest.raises(NumericError) as error:
        gradcheck(NativeFunction(value, gradient, 2), np.zeros(2))
    assert error.value.coordinate == coordinate


def test_affine_system():
    A, b = affine_system(get_fixture("quad_affine").ecmo)
    assert np.array_equal(A, [[0.5, -1.0]])
    assert np.allclose(b, [0.1])


def test_affine_system_rejects_curved_constraints():
    with pytest.raises(InputError, match="constraints must be affine"):
        affine_system(get_fixture("gebken_circle").ecmo)


def test_quadratic_hessian():
    problem = get_fixture("quad_affine").ecmo
    assert np.array_equal(quadratic_hessian(problem.objectives[0]), np.diag([2.0, 8.0]))
    (z,) = MonomialFunction.variables(1)
    assert quadratic_hessian(z**3) is None
