"""W1 and W2 of a loop of circles.

W1 is the winding, in the S^1 factor, of the trace t -> alpha_t(0).

W2 sums sign * x^k over the Sigma_2-classes of collisions, reduced in
Lambda^0.  For a collision (t, z1, z2) the exponent k is the S^1-degree of the
closed curve formed by the arc alpha_t([z1, z2]) (positive direction) followed
by the backward S^1 arc B from alpha_t(z2) to alpha_t(z1).  It is computed
twice: from the lifted angle of the arc, and by counting signed crossings of
the arc and of B with a slice {z'} x S^3.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .collide import (
    RESIDUAL_MAX,
    CollisionPoint,
    SolverConfig,
    collision_sign,
    find_collisions,
)
from .families import LoopFamily
from .geom import (
    TWO_PI,
    angular_distance,
    lift_angle_path,
    sample_refined,
    signed_crossings,
    slice_crossings,
    wrap_angle,
)
from .ring import Lambda0Element, LaurentPoly, lambda0_reduce

INTEGRALITY_GUARD = 1e-6
SLICE_MARGIN = 1e-3
SLICE_SHIFT = 1e-2
SLICE_RETRIES = 16
CHART_ORIENTATION = +1  # global sign convention for intersection signs


class InvariantError(Exception):
    pass


class DegreeMismatch(InvariantError):
    pass


class NonIntegral(InvariantError):
    pass


@dataclass(frozen=True)
class DegreeTrace:
    delta_arc: float
    delta_B: float
    k: int
    k_slice: int
    arc_slice: int
    b_slice: int
    slice_angle: float


@dataclass
class InvariantReport:
    family: str
    w1: int
    w2: Lambda0Element
    classes: list[tuple[CollisionPoint, DegreeTrace]]
    config: SolverConfig
    slice_angle: float
    swap_checks: list[dict]

    @property
    def certification(self) -> dict:
        dets = [c.det_mag for c, _ in self.classes]
        res = [c.residual for c, _ in self.classes]
        return {
            "classes": len(self.classes),
            "min_det_mag": min(dets) if dets else None,
            "max_residual": max(res) if res else None,
            "transversality_floor": self.config.transversality_floor,
            "residual_bound": RESIDUAL_MAX,
            "grid": list(self.config.grid),
            "slice_angle": self.slice_angle,
            "sign_convention": "det of collision Jacobian in an orientation-preserving "
            "stereographic chart; S^3 oriented as boundary of the 4-ball; sigma = +1",
            "swap_checks_passed": all(s["ok"] for s in self.swap_checks),
        }

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "w1": self.w1,
            "w2": self.w2.to_json(),
            "w2_text": str(self.w2),
            "classes": [
                {
                    "t": c.t,
                    "z1": c.z1,
                    "z2": c.z2,
                    "sign": c.sign,
                    "k": d.k,
                    "k_slice": d.k_slice,
                    "residual": c.residual,
                    "det_mag": c.det_mag,
                }
                for c, d in self.classes
            ],
            "certification": self.certification,
            "config": self.config.to_json(),
        }


def _integer(x: float, what: str) -> int:
    k = int(round(x))
    if abs(x - k) > INTEGRALITY_GUARD:
        raise NonIntegral(f"{what} = {x!r} is not an integer within {INTEGRALITY_GUARD}")
    return k


def w1(f: LoopFamily, z0: float = 0.0) -> int:
    """S^1-winding of the trace of the marked point z0."""
    lift = lift_function_t(f, z0)
    return _integer(lift / TWO_PI, "W1 lift / 2pi")


def lift_function_t(f: LoopFamily, z0: float) -> float:
    _, theta = sample_refined(lambda t: f.theta(t, np.full_like(t, z0)), 0.0, 1.0, n0=256)
    return lift_angle_path(theta)


def choose_slice(points, base: float = 0.0, f: LoopFamily | None = None) -> float:
    """Shift the slice by 1e-2 steps until it is 1e-3 away from every collision endpoint angle."""
    angles = []
    for p in points:
        if f is not None:
            th = f.theta(np.array([p.t, p.t]), np.array([p.z1, p.z2]))
            angles.extend(th.tolist())
    z = base
    for _ in range(SLICE_RETRIES + 1):
        if all(angular_distance(z, a) >= SLICE_MARGIN for a in angles):
            return float(wrap_angle(z))
        z += SLICE_SHIFT
    raise InvariantError("no generic slice found near the requested angle")


def degree_kp(f: LoopFamily, c: CollisionPoint, cfg: SolverConfig, slice_angle: float | None = None) -> DegreeTrace:
    if slice_angle is None:
        slice_angle = choose_slice([c], cfg.slice_angle, f)
    span = float(np.mod(c.z2 - c.z1, TWO_PI))
    zs, theta = sample_refined(
        lambda z: f.theta(np.full_like(z, c.t), z), c.z1, c.z1 + span, n0=1024
    )
    delta_arc = lift_angle_path(theta)
    th1, th2 = float(theta[0]), float(theta[-1])
    gap = float(np.mod(th2 - th1, TWO_PI))
    delta_B = -gap
    k = _integer((delta_arc + delta_B) / TWO_PI, "k_p")

    arc_slice = signed_crossings(theta, slice_angle)
    b_path = np.linspace(th2, th2 - gap, 64)
    b_slice = signed_crossings(b_path, slice_angle) if gap > 0 else 0
    k_slice = arc_slice + b_slice
    if k_slice != k:
        raise DegreeMismatch(f"lift formula gives {k}, slice count gives {k_slice} at {c.key()}")
    return DegreeTrace(delta_arc, delta_B, k, k_slice, arc_slice, b_slice, slice_angle)


def monomial_sum(items) -> Lambda0Element:
    poly = LaurentPoly.from_dict({})
    for sign, k in items:
        poly = poly + LaurentPoly.monomial(k, sign)
    return lambda0_reduce(poly)


def swap_check(f: LoopFamily, c: CollisionPoint, d: DegreeTrace, cfg: SolverConfig) -> dict:
    """Recompute sign and degree at the swapped representative (t, z2, z1)."""
    sw = c.swapped()
    sign, _ = collision_sign(f, sw.t, sw.z1, sw.z2)
    dsw = degree_kp(f, sw, cfg, d.slice_angle)
    same_monomial = monomial_sum([(sign, dsw.k)]) == monomial_sum([(c.sign, d.k)])
    ok = sign == c.sign and dsw.k == -d.k and same_monomial
    return {"t": c.t, "sign": sign, "k": dsw.k, "ok": ok}


def w2(f: LoopFamily, cfg: SolverConfig | None = None) -> InvariantReport:
    cfg = cfg or SolverConfig()
    scan = find_collisions(f, cfg)
    slice_angle = choose_slice(scan.classes, cfg.slice_angle, f)
    classes = []
    checks = []
    for c in scan.classes:
        d = degree_kp(f, c, cfg, slice_angle)
        classes.append((c, d))
        checks.append(swap_check(f, c, d, cfg))
    total = monomial_sum((CHART_ORIENTATION * c.sign, d.k) for c, d in classes)
    return InvariantReport(
        family=f.name,
        w1=w1(f),
        w2=total,
        classes=classes,
        config=cfg,
        slice_angle=slice_angle,
        swap_checks=checks,
    )


def w2_bruteforce(f: LoopFamily, cfg: SolverConfig | None = None) -> Lambda0Element:
    """Same quantity via the subdivision oracle and pure slice counting."""
    from .oracle import oracle_collisions, oracle_degree

    cfg = cfg or SolverConfig()
    roots = oracle_collisions(f, cfg)
    return monomial_sum((CHART_ORIENTATION * r.sign, oracle_degree(f, r, cfg.slice_angle)) for r in roots)


def is_pure_x2(w: Lambda0Element) -> bool:
    return all(e == 2 for e, _ in w.terms)


def x2_coefficient(w: Lambda0Element) -> int:
    return w.coefficient(2)



# --- slice profiles -----------------------------------------------------------


@dataclass(frozen=True)
class SliceProfile:
    t: float
    start: float  # z where the sampled circle starts; chosen off the slice
    crossings: list[tuple[float, int]]  # (z, sign) in order of increasing z from start

    @property
    def pattern(self) -> list[int]:
        return [s for _, s in self.crossings]

    @property
    def total(self) -> int:
        return sum(self.pattern)

    def subcounts(self) -> set[int]:
        """Signed counts over every arc of the circle, i.e. every cyclic run of crossings."""
        p = self.pattern
        n = len(p)
        out = {0}
        for i in range(n):
            for length in range(1, n + 1):
                out.add(sum(p[(i + j) % n] for j in range(length)))
        return out


def slice_profile(f: LoopFamily, t: float, slice_angle: float = 0.0) -> SliceProfile:
    """Signed crossings of z -> theta(t, z), over one full turn of z, with the slice."""
    tt = lambda z: np.full_like(z, t)  # noqa: E731
    z0 = np.pi
    for _ in range(SLICE_RETRIES + 1):
        if angular_distance(float(f.theta(np.array([t]), np.array([z0]))[0]), slice_angle) >= SLICE_MARGIN:
            break
        z0 += SLICE_SHIFT
    else:
        raise InvariantError("no start point off the slice")
    zs, theta = sample_refined(lambda z: f.theta(tt(z), z), z0, z0 + TWO_PI, n0=2048, max_step=0.05)
    events = slice_crossings(theta, slice_angle)
    crossings = [
        (float(wrap_angle(zs[c.index] + c.frac * (zs[c.index + 1] - zs[c.index]))), c.sign) for c in events
    ]
    return SliceProfile(float(t), float(wrap_angle(z0)), crossings)
