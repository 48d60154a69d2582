"""Pareto dominance, front filtering and front quality indicators (minimization convention)"""

from typing import Any, Iterable, Union

import numpy as np
from scipy.spatial import cKDTree

from ecmo_solver.config import HV_MAX_OBJECTIVES, HV_REF_OFFSET, HV_REF_SCALE
from ecmo_solver.errors import InputError
from ecmo_solver.model import FrontEntry, ParetoFront

FrontLike = Union[ParetoFront, np.ndarray, Any]

_CHUNK = 256


def dominates(a: Any, b: Any) -> bool:
    """True iff a <= b componentwise and a != b"""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise InputError(f"cannot compare objective vectors of shapes {a.shape} and {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def _as_objectives(front: FrontLike) -> np.ndarray:
    if isinstance(front, ParetoFront):
        return front.objectives()
    points = np.asarray(front, dtype=float)
    if points.size == 0:
        return np.zeros((0, 0))
    return points.reshape(len(points), -1)


def pareto_mask(points: np.ndarray) -> np.ndarray:
    """Mask of the non-dominated rows; of exact duplicates only the first is kept"""
    points = np.asarray(points, dtype=float)
    count = len(points)
    if count == 0:
        return np.zeros(0, dtype=bool)
    if points.shape[1] == 2:
        return _pareto_mask_2d(points)
    keep = np.zeros(count, dtype=bool)
    index = np.arange(count)
    for start in range(0, count, _CHUNK):
        block = points[start : start + _CHUNK]
        no_worse = np.all(points[None, :, :] <= block[:, None, :], axis=2)
        better = np.any(points[None, :, :] < block[:, None, :], axis=2)
        equal = np.all(points[None, :, :] == block[:, None, :], axis=2)
        earlier = index[None, :] < index[start : start + _CHUNK, None]
        dominated = np.any(no_worse & better, axis=1)
        repeated = np.any(equal & earlier, axis=1)
        keep[start : start + _CHUNK] = ~dominated & ~repeated
    return keep


def _pareto_mask_2d(points: np.ndarray) -> np.ndarray:
    # stable sort by f1 then f2; a point survives iff its f2 beats every earlier one
    order = np.lexsort((points[:, 1], points[:, 0]))
    keep = np.zeros(len(points), dtype=bool)
    best = np.inf
    for i in order:
        if points[i, 1] < best:
            keep[i] = True
            best = points[i, 1]
    return keep


def pareto_filter(entries: Iterable[FrontEntry]) -> ParetoFront:
    entries = list(entries)
    if not entries:
        return ParetoFront()
    sizes = {len(entry.F) for entry in entries}
    if len(sizes) != 1:
        raise InputError(f"entries have inconsistent objective counts {sorted(sizes)}")
    mask = pareto_mask(np.array([entry.F for entry in entries], dtype=float))
    return ParetoFront([entry for entry, keep in zip(entries, mask) if keep])


def default_ref_point(front: FrontLike) -> np.ndarray:
    return _as_objectives(front).max(axis=0) * HV_REF_SCALE + HV_REF_OFFSET


def hypervolume(front: FrontLike, ref_point: Any) -> float:
    """Volume dominated by the front and bounded by ref_point.

    Exact sweep for two objectives, recursive slicing along the last objective for three to five.

    Args:
        front: ParetoFront or array of objective vectors, one per row.
        ref_point: Reference point, componentwise no better than every front point.

    Returns:
        The hypervolume, 0.0 for an empty front.

    Raises:
        InputError: If a front point exceeds ref_point or there are more than five objectives.
    """
    points = _as_objectives(front)
    ref = np.asarray(ref_point, dtype=float)
    if len(points) == 0:
        return 0.0
    if points.shape[1] != len(ref):
        raise InputError(f"reference point has {len(ref)} components, front has {points.shape[1]} objectives")
    if points.shape[1] > HV_MAX_OBJECTIVES:
        raise InputError(f"exact hypervolume supports at most {HV_MAX_OBJECTIVES} objectives")
    offenders = np.flatnonzero(np.any(points > ref, axis=1))
    if len(offenders):
        listing = ", ".join(f"#{i} {points[i].tolist()}" for i in offenders)
        raise InputError(f"front points exceed the reference point {ref.tolist()}: {listing}")
    return _hypervolume(points[pareto_mask(points)], ref)


def _hypervolume(points: np.ndarray, ref: np.ndarray) -> float:
    objectives = points.shape[1]
    if objectives == 1:
        return float(ref[0] - points[:, 0].min())
    if objectives == 2:
        volume, ceiling = 0.0, ref[1]
        for f1, f2 in points[np.argsort(points[:, 0], kind="stable")]:
            volume += (ref[0] - f1) * (ceiling - f2)
            ceiling = f2
        return float(volume)
    points = points[np.argsort(points[:, -1], kind="stable")]
    volume = 0.0
    for i in range(len(points)):
        upper = points[i + 1, -1] if i + 1 < len(points) else ref[-1]
        height = upper - points[i, -1]
        if height <= 0:
            continue
        section = points[: i + 1, :-1]
        volume += height * _hypervolume(section[pareto_mask(section)], ref[:-1])
    return float(volume)


def epsilon_indicator(front: FrontLike, reference_front: FrontLike) -> float:
    """Additive epsilon indicator: smallest eps >= 0 such that every reference point r has a front
    point p with p_s <= r_s + eps for all s."""
    points = _as_objectives(front)
    reference = _as_objectives(reference_front)
    if len(points) == 0 or len(reference) == 0:
        raise InputError("epsilon indicator needs two non-empty fronts")
    if points.shape[1] != reference.shape[1]:
        raise InputError("fronts have different objective counts")
    worst = 0.0
    for start in range(0, len(reference), _CHUNK):
        block = reference[start : start + _CHUNK]
        gaps = (points[None, :, :] - block[:, None, :]).max(axis=2).min(axis=1)
        worst = max(worst, float(gaps.max()))
    return worst


def nearest_distances(points: FrontLike, reference_front: FrontLike) -> np.ndarray:
    """Euclidean distance from every point to the closest reference point"""
    points, reference = _as_objectives(points), _as_objectives(reference_front)
    if len(points) == 0:
        return np.zeros(0)
    if len(reference) == 0:
        raise InputError("reference front is empty")
    distances, _ = cKDTree(reference).query(points)
    return np.asarray(distances, dtype=float)


def hausdorff_distance(front: FrontLike, other: FrontLike) -> float:
    """Symmetric Hausdorff distance between two fronts in objective space"""
    return max(float(nearest_distances(front, other).max()), float(nearest_distances(other, front).max()))
