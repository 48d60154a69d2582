"""Scalar functions with analytic gradients.

Monomial sums are the serializable representation; native functions wrap arbitrary value/gradient
callables for fixtures that are not polynomial.
"""

import numbers
from abc import ABC, abstractmethod
from typing import Any, Callable, Iterable, Optional, Sequence

import numpy as np

from ecmo_solver.errors import CapabilityError, InputError

Vector = np.ndarray
PointFn = Callable[[np.ndarray], Any]


def as_point(z: Any, dimension: int) -> np.ndarray:
    """Convert z to a float vector of the given dimension"""
    point = np.asarray(z, dtype=float)
    if point.shape != (dimension,):
        raise InputError(f"expected a point of dimension {dimension}, got shape {point.shape}")
    return point


class ScalarFunction(ABC):
    """A real function of a point in R^k with an analytic gradient.

    Implementations must be deterministic and re-entrant: evaluating at distinct points from
    several threads at once is allowed.
    """

    dimension: int

    @abstractmethod
    def value(self, z: Vector) -> float:
        """
        :param z: point of length ``dimension``
        :return: function value at z
        """
        pass

    @abstractmethod
    def gradient(self, z: Vector) -> Vector:
        """
        :param z: point of length ``dimension``
        :return: gradient at z, length ``dimension``
        """
        pass

    def hessian(self, z: Vector) -> Vector:
        raise CapabilityError(f"{type(self).__name__} does not provide second derivatives")

    @property
    def has_hessian(self) -> bool:
        return False

    def shifted(self, constant: float) -> "ScalarFunction":
        """Return this function plus a constant"""
        base = self
        return NativeFunction(
            lambda z: base.value(z) + constant,
            base.gradient,
            base.dimension,
            hessian=base.hessian if base.has_hessian else None,
            name=f"{getattr(base, 'name', '')}+{constant!r}",
        )

    def values_batch(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at every row of ``points``"""
        return np.array([self.value(point) for point in points], dtype=float)

    def to_dict(self) -> dict:
        raise CapabilityError(f"{type(self).__name__} has no serializable form")


class MonomialFunction(ScalarFunction):
    """Sum of terms c * prod_i z_i^{p_i} over a k-dimensional point."""

    def __init__(self, terms: Iterable[tuple[float, Sequence[int]]], dimension: int):
        if dimension < 1:
            raise InputError(f"dimension must be positive, got {dimension}")
        self.dimension = dimension
        merged: dict[tuple[int, ...], float] = {}
        for coefficient, exponents in terms:
            key = tuple(int(p) for p in exponents)
            if len(key) != dimension:
                raise InputError(f"monomial exponents {list(exponents)} do not have length {dimension}")
            if any(p < 0 or p != q for p, q in zip(key, exponents)):
                raise InputError(f"monomial exponents must be non-negative integers, got {list(exponents)}")
            merged[key] = merged.get(key, 0.0) + float(coefficient)
        merged = {key: c for key, c in merged.items() if c != 0.0}

        self.coefficients = np.array(list(merged.values()), dtype=float)
        self.exponents = np.array(list(merged.keys()), dtype=np.int64).reshape(len(merged), dimension)

        # d/dz_j of c * prod z_i^{p_i} = c * p_j * z_j^{p_j - 1} * prod_{i != j} z_i^{p_i}
        identity = np.eye(dimension, dtype=np.int64)
        self._grad_coefficients = self.coefficients[None, :] * self.exponents.T
        self._grad_exponents = np.clip(self.exponents[None, :, :] - identity[:, None, :], 0, None)

    @classmethod
    def constant(cls, value: float, dimension: int) -> "MonomialFunction":
        return cls([(value, [0] * dimension)], dimension)

    @classmethod
    def variable(cls, index: int, dimension: int) -> "MonomialFunction":
        exponents = [0] * dimension
        exponents[index] = 1
        return cls([(1.0, exponents)], dimension)

    @classmethod
    def variables(cls, dimension: int) -> list["MonomialFunction"]:
        return [cls.variable(i, dimension) for i in range(dimension)]

    @property
    def terms(self) -> list[tuple[float, tuple[int, ...]]]:
        return [(float(c), tuple(int(p) for p in e)) for c, e in zip(self.coefficients, self.exponents)]

    @property
    def degree(self) -> int:
        if len(self.coefficients) == 0:
            return 0
        return int(self.exponents.sum(axis=1).max())

    @property
    def has_hessian(self) -> bool:
        return True

    def value(self, z: Vector) -> float:
        point = as_point(z, self.dimension)
        return float(self.coefficients @ np.prod(point**self.exponents, axis=1))

    def gradient(self, z: Vector) -> Vector:
        point = as_point(z, self.dimension)
        return (self._grad_coefficients * np.prod(point**self._grad_exponents, axis=2)).sum(axis=1)

    def hessian(self, z: Vector) -> Vector:
        point = as_point(z, self.dimension)
        return np.array([self.partial(j).gradient(point) for j in range(self.dimension)])

    def values_batch(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return np.prod(points[:, None, :] ** self.exponents[None, :, :], axis=2) @ self.coefficients

    def partial(self, index: int) -> "MonomialFunction":
        """Exact partial derivative with respect to coordinate ``index``"""
        terms = []
        for coefficient, exponents in self.terms:
            if exponents[index] == 0:
                continue
            reduced = list(exponents)
            reduced[index] -= 1
            terms.append((coefficient * exponents[index], reduced))
        return MonomialFunction(terms, self.dimension)

    def shifted(self, constant: float) -> "MonomialFunction":
        return self + constant

    def embedded(self, dimension: int, offset: int = 0) -> "MonomialFunction":
        """Same polynomial over a larger space, this function's coordinates starting at ``offset``"""
        terms = []
        for coefficient, exponents in self.terms:
            padded = [0] * dimension
            padded[offset : offset + self.dimension] = exponents
            terms.append((coefficient, padded))
        return MonomialFunction(terms, dimension)

    def to_dict(self) -> dict:
        return {"monomial": [[c, list(e)] for c, e in self.terms]}

    @classmethod
    def from_dict(cls, data: dict, dimension: int) -> "MonomialFunction":
        try:
            terms = [(float(coefficient), list(exponents)) for coefficient, exponents in data["monomial"]]
        except (KeyError, TypeError, ValueError) as error:
            raise InputError(f"invalid monomial description: {data!r}") from error
        return cls(terms, dimension)

    def _coerce(self, other: Any) -> "MonomialFunction":
        if isinstance(other, MonomialFunction):
            if other.dimension != self.dimension:
                raise InputError(f"cannot combine monomials of dimension {self.dimension} and {other.dimension}")
            return other
        if isinstance(other, numbers.Real):
            return MonomialFunction.constant(float(other), self.dimension)
        return NotImplemented

    def __add__(self, other: Any) -> "MonomialFunction":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return MonomialFunction(self.terms + other.terms, self.dimension)

    __radd__ = __add__

    def __neg__(self) -> "MonomialFunction":
        return MonomialFunction([(-c, e) for c, e in self.terms], self.dimension)

    def __sub__(self, other: Any) -> "MonomialFunction":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other: Any) -> "MonomialFunction":
        return (-self) + other

    def __mul__(self, other: Any) -> "MonomialFunction":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        terms = [(a * b, [p + q for p, q in zip(e, f)]) for a, e in self.terms for b, f in other.terms]
        return MonomialFunction(terms, self.dimension)

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> "MonomialFunction":
        if not isinstance(other, numbers.Real):
            return NotImplemented
        return self * (1.0 / float(other))

    def __pow__(self, power: int) -> "MonomialFunction":
        if not isinstance(power, int) or power < 0:
            return NotImplemented
        result = MonomialFunction.constant(1.0, self.dimension)
        for _ in range(power):
            result = result * self
        return result

    def __repr__(self) -> str:
        return f"MonomialFunction({self.terms!r}, dimension={self.dimension})"


class NativeFunction(ScalarFunction):
    """Function given by value/gradient callables, optionally with a Hessian."""

    def __init__(
        self,
        value: PointFn,
        gradient: PointFn,
        dimension: int,
        hessian: Optional[PointFn] = None,
        name: str = "",
    ):
        self.dimension = dimension
        self.name = name
        self._value = value
        self._gradient = gradient
        self._hessian = hessian

    @property
    def has_hessian(self) -> bool:
        return self._hessian is not None

    def value(self, z: Vector) -> float:
        return float(self._value(as_point(z, self.dimension)))

    def gradient(self, z: Vector) -> Vector:
        return np.asarray(self._gradient(as_point(z, self.dimension)), dtype=float).reshape(self.dimension)

    def hessian(self, z: Vector) -> Vector:
        if self._hessian is None:
            return super().hessian(z)
        matrix = np.asarray(self._hessian(as_point(z, self.dimension)), dtype=float)
        return matrix.reshape(self.dimension, self.dimension)

    def __repr__(self) -> str:
        return f"NativeFunction(name={self.name!r}, dimension={self.dimension})"


def function_from_dict(data: dict, dimension: int) -> MonomialFunction:
    """Build a function from its file description; only monomial sums are serializable"""
    if not isinstance(data, dict) or "monomial" not in data:
        raise InputError(f"function description must contain a 'monomial' term list, got {data!r}")
    return MonomialFunction.from_dict(data, dimension)


class FunctionStack:
    """Evaluates a list of functions of one point together.

    When every member is a monomial sum the terms are concatenated so values and the Jacobian come
    out of a handful of array operations; otherwise members are evaluated one by one.
    """

    def __init__(self, functions: Sequence[ScalarFunction], dimension: int):
        self.functions = tuple(functions)
        self.dimension = dimension
        self.monomial = all(isinstance(f, MonomialFunction) for f in self.functions)
        if self.monomial and self.functions:
            monomials: list[MonomialFunction] = list(self.functions)  # type: ignore[arg-type]
            owners = np.concatenate(
                [np.full(len(f.coefficients), i, dtype=np.int64) for i, f in enumerate(monomials)]
            )
            self._owner_matrix = np.zeros((len(monomials), len(owners)))
            self._owner_matrix[owners, np.arange(len(owners))] = 1.0
            self._coefficients = np.concatenate([f.coefficients for f in monomials])
            self._exponents = np.concatenate([f.exponents for f in monomials]).reshape(-1, dimension)
            self._grad_coefficients = np.concatenate([f._grad_coefficients for f in monomials], axis=1)
            self._grad_exponents = np.concatenate([f._grad_exponents for f in monomials], axis=1)

    def __len__(self) -> int:
        return len(self.functions)

    def values(self, z: Vector) -> Vector:
        if not self.functions:
            return np.zeros(0)
        if self.monomial:
            return self._owner_matrix @ (self._coefficients * np.prod(z**self._exponents, axis=1))
        return np.array([f.value(z) for f in self.functions], dtype=float)

    def jacobian(self, z: Vector) -> np.ndarray:
        if not self.functions:
            return np.zeros((0, self.dimension))
        if self.monomial:
            terms = self._grad_coefficients * np.prod(z**self._grad_exponents, axis=2)
            return self._owner_matrix @ terms.T
        return np.array([f.gradient(z) for f in self.functions], dtype=float).reshape(len(self), self.dimension)

    def values_batch(self, points: np.ndarray) -> np.ndarray:
        """Values at every row of ``points``, shape (N, len(functions))"""
        points = np.asarray(points, dtype=float)
        if not self.functions:
            return np.zeros((len(points), 0))
        if self.monomial:
            terms = np.prod(points[:, None, :] ** self._exponents[None, :, :], axis=2) * self._coefficients
            return terms @ self._owner_matrix.T
        return np.stack([f.values_batch(points) for f in self.functions], axis=1)
