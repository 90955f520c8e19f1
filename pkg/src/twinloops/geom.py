"""Angles on S^1, points of S^3 in R^4, stereographic charts, angle lifting.

Orientation conventions used everywhere downstream:

* S^1 is oriented by increasing angle.
* S^3 carries the boundary orientation of the unit ball: a tangent frame
  (f1, f2, f3) at v is positive iff det[v, f1, f2, f3] > 0.
* S^1 x S^3 carries the product orientation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

TWO_PI = 2.0 * np.pi
ANGLE_TOL = 1e-9
MAX_REFINE_POINTS = 2**16


class GeometryError(Exception):
    pass


class StepTooLarge(GeometryError):
    pass


class SliceHitsEndpoint(GeometryError):
    pass


class NonGenericSlice(GeometryError):
    pass


class NearAntipode(GeometryError):
    pass


def wrap_angle(a):
    """Canonical representative in [0, 2pi)."""
    r = np.mod(a, TWO_PI)
    if np.ndim(r) == 0:
        return 0.0 if r >= TWO_PI else float(r)
    r[r >= TWO_PI] = 0.0
    return r


def angle_diff(a, b):
    """Signed difference a - b wrapped into [-pi, pi)."""
    return np.mod(np.asarray(a) - np.asarray(b) + np.pi, TWO_PI) - np.pi


def angular_distance(a, b):
    return np.abs(angle_diff(a, b))


def sphere_point(v) -> np.ndarray:
    """Renormalize a 4-vector onto S^3."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(n == 0):
        raise GeometryError("zero vector has no direction on S^3")
    return v / n


def orientation_sign(v, f1, f2, f3) -> float:
    """Sign of the tangent frame (f1, f2, f3) at v in the fixed orientation of S^3."""
    return float(np.sign(np.linalg.det(np.array([v, f1, f2, f3], dtype=float))))


# --- angle lifting ---------------------------------------------------------


def lift_samples(samples) -> np.ndarray:
    """Continuous lift of a sequence of angles, starting at the canonical first value."""
    s = np.asarray(samples, dtype=float)
    if s.size == 0:
        return s
    steps = angle_diff(s[1:], s[:-1])
    if steps.size and np.max(np.abs(steps)) >= np.pi - ANGLE_TOL:
        raise StepTooLarge("consecutive angle samples differ by pi or more")
    out = np.empty_like(s)
    out[0] = wrap_angle(float(s[0]))
    out[1:] = out[0] + np.cumsum(steps)
    return out


def lift_angle_path(samples) -> float:
    """Total continuous angular displacement of a sampled path."""
    lifted = lift_samples(samples)
    if lifted.size < 2:
        return 0.0
    return float(lifted[-1] - lifted[0])


def sample_refined(
    func: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    n0: int = 64,
    max_step: float = np.pi / 4,
    max_points: int = MAX_REFINE_POINTS,
) -> tuple[np.ndarray, np.ndarray]:
    """Sample an angle-valued function on [lo, hi], doubling density until steps are small.

    Returns the parameter grid and the sampled angles.
    """
    n = max(int(n0), 2)
    while True:
        x = np.linspace(lo, hi, n + 1)
        y = np.asarray(func(x), dtype=float)
        if n <= 1 or np.max(np.abs(angle_diff(y[1:], y[:-1]))) < max_step:
            return x, y
        if 2 * n > max_points:
            raise StepTooLarge(f"angle path not resolved with {n} samples")
        n *= 2


def lift_function(func, lo: float, hi: float, **kw) -> float:
    _, y = sample_refined(func, lo, hi, **kw)
    return lift_angle_path(y)


# --- slice crossings --------------------------------------------------------


@dataclass(frozen=True)
class Crossing:
    index: int  # step index j: crossing lies between samples j and j+1
    frac: float  # linear position inside the step
    sign: int


def slice_crossings(samples, zslice: float) -> list[Crossing]:
    """Signed crossings of a sampled angle path through zslice + 2piZ.

    A crossing is positive when the lift increases through the slice.  Samples
    landing on the slice are counted with the half-open rule; a sample on the
    slice whose neighbours lie on the same side is a tangency and is rejected.
    """
    s = np.asarray(samples, dtype=float)
    if s.size == 0:
        return []
    if (
        angular_distance(s[0], zslice) <= ANGLE_TOL
        or angular_distance(s[-1], zslice) <= ANGLE_TOL
    ):
        raise SliceHitsEndpoint("path endpoint lies on the slice")
    lifted = lift_samples(s) - zslice
    for j in range(1, s.size - 1):
        if angular_distance(s[j], zslice) <= ANGLE_TOL:
            before = lifted[j - 1] - lifted[j]
            after = lifted[j + 1] - lifted[j]
            if before * after > 0:
                raise NonGenericSlice(f"tangential contact with the slice at sample {j}")
    levels = np.floor(lifted / TWO_PI)
    events: list[Crossing] = []
    for j in np.nonzero(levels[1:] != levels[:-1])[0]:
        a, b = lifted[j], lifted[j + 1]
        la, lb = int(levels[j]), int(levels[j + 1])
        sign = 1 if lb > la else -1
        crossed = range(la + 1, lb + 1) if sign > 0 else range(la, lb, -1)
        for lev in crossed:
            frac = (lev * TWO_PI - a) / (b - a)
            events.append(Crossing(int(j), float(frac), sign))
    return events


def signed_crossings(samples, zslice: float) -> int:
    return sum(c.sign for c in slice_crossings(samples, zslice))


# --- stereographic charts ---------------------------------------------------


def _tangent_basis(c: np.ndarray) -> np.ndarray:
    """Orthonormal basis (rows) of c-perp with det[c, E1, E2, E3] = +1."""
    order = np.argsort(np.abs(c), kind="stable")
    basis = []
    for k in order[:3]:
        e = np.zeros(4)
        e[k] = 1.0
        e -= np.dot(e, c) * c
        for b in basis:
            e -= np.dot(e, b) * b
        basis.append(e / np.linalg.norm(e))
    E = np.array(basis)
    if np.linalg.det(np.vstack([c, E])) < 0:
        E[2] = -E[2]
    return E


@dataclass(frozen=True)
class Chart3:
    """Stereographic projection from -center, orientation preserving."""

    center: np.ndarray
    basis: np.ndarray  # 3x4, rows span the tangent space at center

    def _check(self, dots):
        if np.any(dots <= -1.0 + 1e-6):
            raise NearAntipode("point too close to the antipode of the chart center")

    def forward(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        dots = v @ self.center
        self._check(dots)
        return (v @ self.basis.T) / (1.0 + dots)[..., None]

    def derivative(self, v) -> np.ndarray:
        """3x4 matrix of the differential of forward at v (ambient coordinates)."""
        v = np.asarray(v, dtype=float)
        d = 1.0 + float(v @ self.center)
        self._check(np.array(d - 1.0))
        return self.basis / d - np.outer(self.basis @ v, self.center) / d**2

    def inverse(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        r2 = np.sum(y * y, axis=-1, keepdims=True)
        return ((1.0 - r2) * self.center + 2.0 * (y @ self.basis)) / (1.0 + r2)


def stereo_chart(center) -> Chart3:
    c = sphere_point(center)
    return Chart3(center=c, basis=_tangent_basis(c))
