import numpy as np
import pytest

from ecmo_solver.benchmarks import get_fixture, reference_front
from ecmo_solver.errors import InputError
from ecmo_solver.model import FrontEntry
from ecmo_solver.pareto import (
    default_ref_point,
    dominates,
    epsilon_indicator,
    hausdorff_distance,
    hypervolume,
    nearest_distances,
    pareto_filter,
    pareto_mask,
)
from tests.common import brute_force_epsilon, brute_force_mask, monte_carlo_hypervolume


# fmt: off
@pytest.mark.parametrize("a, b, expected", [
    ([1, 1], [2, 2], True),
    ([1, 2], [2, 2], True),
    ([2, 2], [2, 2], False),
    ([1, 3], [2, 2], False),
    ([3, 3], [2, 2], False),
])
# fmt: on
def test_dominates(a, b, expected: bool):
    assert dominates(a, b) is expected


def test_dominates_shape_mismatch():
    with pytest.raises(InputError):
        dominates([1, 2], [1, 2, 3])


@pytest.mark.parametrize("objectives", [2, 3])
def test_pareto_mask_matches_brute_force(objectives: int):
    rng = np.random.default_rng(objectives)
    points = rng.uniform(0, 1, size=(500, objectives))
    assert np.array_equal(pareto_mask(points), brute_force_mask(points))


def test_pareto_mask_keeps_first_duplicate():
    points = np.array([[1.0, 2.0], [1.0, 2.0], [2.0, 1.0], [2.0, 2.0]])
    assert pareto_mask(points).tolist() == [True, False, True, False]
    points3 = np.array([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0], [3.0, 2.0, 1.0]])
    assert pareto_mask(points3).tolist() == [True, False, True]


def test_pareto_filter_keeps_entries():
    entries = [
        FrontEntry(z=np.zeros(1), F=np.array([1.0, 2.0]), weights=np.array([0.5, 0.5]), run_id="a"),
        FrontEntry(z=np.ones(1), F=np.array([2.0, 3.0]), run_id="b"),
        FrontEntry(z=np.ones(1), F=np.array([2.0, 1.0]), run_id="c"),
    ]
    front = pareto_filter(entries)
    assert [entry.run_id for entry in front] == ["a", "c"]
    assert len(pareto_filter([])) == 0


def test_hypervolume_two_points():
    assert hypervolume(np.array([[1.0, 2.0], [2.0, 1.0]]), [3.0, 3.0]) == 3.0


def test_hypervolume_single_objective():
    assert hypervolume(np.array([[2.0], [1.5]]), [4.0]) == 2.5


def test_hypervolume_ignores_dominated_points():
    points = np.array([[1.0, 2.0], [2.0, 1.0], [2.5, 2.5]])
    assert hypervolume(points, [3.0, 3.0]) == 3.0


@pytest.mark.parametrize("seed", range(3))
def test_hypervolume_matches_monte_carlo(seed: int):
    rng = np.random.default_rng(seed)
    directions = np.abs(rng.normal(size=(20, 3)))
    points = directions / np.linalg.norm(directions, axis=1, keepdims=True)
    ref = np.full(3, 1.2)
    estimate = monte_carlo_hypervolume(points, ref, 1_000_000, seed=seed)
    assert hypervolume(points, ref) == pytest.approx(estimate, rel=0.01)


def test_hypervolume_rejects_points_beyond_reference():
    with pytest.raises(InputError, match="#1"):
        hypervolume(np.array([[1.0, 1.0], [4.0, 1.0]]), [3.0, 3.0])


def test_hypervolume_rejects_many_objectives():
    with pytest.raises(InputError):
        hypervolume(np.ones((2, 6)), np.full(6, 2.0))


def test_default_ref_point():
    assert np.allclose(default_ref_point(np.array([[1.0, 4.0], [2.0, 3.0]])), [2.3, 4.5])


@pytest.mark.parametrize("seed", range(3))
def test_epsilon_indicator_matches_brute_force(seed: int):
    rng = np.random.default_rng(seed)
    front = rng.uniform(0, 1, size=(30, 2))
    reference = rng.uniform(0, 1, size=(40, 2))
    assert epsilon_indicator(front, reference) == pytest.approx(brute_force_epsilon(front, reference), abs=1e-15)


def test_epsilon_indicator_of_identical_fronts():
    front = np.array([[1.0, 2.0], [2.0, 1.0]])
    assert epsilon_indicator(front, front) == 0.0
    assert epsilon_indicator(front + 0.25, front) == pytest.approx(0.25)


def test_distances():
    assert hausdorff_distance(np.array([[0.0, 0.0]]), np.array([[3.0, 4.0]])) == 5.0
    distances = nearest_distances(np.array([[0.0, 0.0], [1.0, 1.0]]), np.array([[0.0, 1.0]]))
    assert np.allclose(distances, [1.0, 1.0])


@pytest.mark.parametrize("name, density", [("gebken_circle", 100_000), ("forum_llgc", 10_000), ("quad_affine", 100_000)])
def test_reference_front_is_stable_under_refinement(name: str, density: int):
    fixture = get_fixture(name)
    coarse = reference_front(fixture, density)
    fine = reference_front(fixture, 2 * density)
    assert hausdorff_distance(coarse, fine) <= 1e-3
