import numpy as np
import pytest

from ecmo_solver.errors import CapabilityError, InputError
from ecmo_solver.functions import FunctionStack, MonomialFunction, NativeFunction, function_from_dict
from ecmo_solver.problem import gradcheck
from tests.common import central_difference, random_monomial, relative_error


def test_monomial_value():
    f = MonomialFunction([(3.0, [2, 1]), (2.0, [0, 0])], 2)
    assert f.value(np.array([2.0, -1.0])) == -10.0
    assert f.degree == 3


def test_like_terms_are_merged():
    z1, z2 = MonomialFunction.variables(2)
    square = (z1 + z2) ** 2
    assert dict((exponents, c) for c, exponents in square.terms) == {(2, 0): 1.0, (1, 1): 2.0, (0, 2): 1.0}


def test_cancelled_terms_are_dropped():
    z1, _ = MonomialFunction.variables(2)
    zero = z1 - z1
    assert zero.terms == []
    assert zero.value(np.array([3.0, 4.0])) == 0.0
    assert np.array_equal(zero.gradient(np.array([3.0, 4.0])), np.zeros(2))


# fmt: off
@pytest.mark.parametrize("terms, dimension", [
    ([(1.0, [-1, 0])], 2),
    ([(1.0, [1.5, 0])], 2),
    ([(1.0, [1, 0, 0])], 2),
])
# fmt: on
def test_invalid_exponents(terms, dimension):
    with pytest.raises(InputError):
        MonomialFunction(terms, dimension)


@pytest.mark.parametrize("seed", range(5))
def test_gradient_matches_finite_differences(seed: int):
    rng = np.random.default_rng(seed)
    f = random_monomial(rng, 3, max_power=2)
    z = rng.uniform(0.5, 1.5, size=3)
    assert gradcheck(f, z).max_rel_err <= 1e-6


def test_hessian():
    z1, z2 = MonomialFunction.variables(2)
    f = z1**2 * z2
    expected = np.array([[2 * 3.0, 2 * 2.0], [2 * 2.0, 0.0]])
    assert np.array_equal(f.hessian(np.array([2.0, 3.0])), expected)


@pytest.mark.parametrize("seed", range(3))
def test_hessian_matches_gradient_differences(seed: int):
    rng = np.random.default_rng(seed)
    f = random_monomial(rng, 3)
    z = rng.uniform(0.5, 1.5, size=3)
    hessian = f.hessian(z)
    for i in range(3):
        estimate = central_difference(lambda point, i=i: f.gradient(point)[i], z)
        assert relative_error(hessian[i], estimate) <= 1e-6


def test_partial():
    z1, z2 = MonomialFunction.variables(2)
    f = z1**3 * z2**2
    assert f.partial(0).terms == [(3.0, (2, 2))]
    assert f.partial(1).terms == [(2.0, (3, 1))]


def test_scalar_arithmetic():
    (z,) = MonomialFunction.variables(1)
    f = (2 - z) * 3 / 2 + 1
    assert f.value(np.array([4.0])) == -2.0
    assert (-f).value(np.array([4.0])) == 2.0


def test_mixed_dimensions_are_rejected():
    with pytest.raises(InputError):
        MonomialFunction.variable(0, 2) + MonomialFunction.variable(0, 3)


def test_embedded():
    (y,) = MonomialFunction.variables(1)
    f = (y - 1) ** 2
    wide = f.embedded(3, offset=1)
    assert wide.value(np.array([10.0, 3.0, -7.0])) == 4.0


def test_serialized_form():
    z1, z2 = MonomialFunction.variables(2)
    f = 2 * z1 * z2 - 0.5
    restored = function_from_dict(f.to_dict(), 2)
    assert restored.terms == f.terms


def test_function_without_monomial_terms():
    with pytest.raises(InputError, match="monomial"):
        function_from_dict({"native": "sin"}, 1)


def test_native_function():
    f = NativeFunction(lambda z: float(np.sin(z[0])), lambda z: np.array([np.cos(z[0])]), 1, name="sin")
    assert f.value(np.array([0.0])) == 0.0
    assert not f.has_hessian
    with pytest.raises(CapabilityError):
        f.hessian(np.array([0.0]))
    with pytest.raises(CapabilityError):
        f.to_dict()
    assert f.shifted(2.0).value(np.array([0.0])) == 2.0
    assert f.shifted(2.0).gradient(np.array([0.0]))[0] == 1.0


def test_native_dimension_is_checked():
    f = NativeFunction(lambda z: 0.0, lambda z: np.zeros(2), 2)
    with pytest.raises(InputError):
        f.value(np.zeros(3))


def test_stack_matches_members():
    rng = np.random.default_rng(7)
    functions = [random_monomial(rng, 3) for _ in range(4)]
    stack = FunctionStack(functions, 3)
    z = rng.uniform(-1, 1, size=3)
    assert np.allclose(stack.values(z), [f.value(z) for f in functions], rtol=0, atol=1e-12)
    assert np.allclose(stack.jacobian(z), [f.gradient(z) for f in functions], rtol=0, atol=1e-12)
    points = rng.uniform(-1, 1, size=(10, 3))
    expected = np.array([[f.value(p) for f in functions] for p in points])
    assert np.allclose(stack.values_batch(points), expected, rtol=0, atol=1e-12)


def test_stack_with_native_member():
    z1, z2 = MonomialFunction.variables(2)
    native = NativeFunction(lambda z: z[0] * z[1], lambda z: np.array([z[1], z[0]]), 2)
    stack = FunctionStack([z1 + z2, native], 2)
    z = np.array([2.0, 5.0])
    assert np.array_equal(stack.values(z), [7.0, 10.0])
    assert np.array_equal(stack.jacobian(z), [[1.0, 1.0], [5.0, 2.0]])


def test_empty_stack():
    stack = FunctionStack([], 3)
    assert stack.values(np.zeros(3)).shape == (0,)
    assert stack.jacobian(np.zeros(3)).shape == (0, 3)
    assert stack.values_batch(np.zeros((5, 3))).shape == (5, 0)
