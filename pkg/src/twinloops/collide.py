"""Locate and certify the points of A^{-1}(CC) for a loop family.

A(t, z1, z2) = (alpha_t(z1), alpha_t(z2)) meets CC exactly when the two S^3
coordinates agree.  In a stereographic chart centred between them this is
three equations F(t, z1, z2) = 0 in three unknowns; the intersection sign is
the sign of det DF.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .families import LoopFamily
from .geom import TWO_PI, angular_distance, sphere_point, stereo_chart, wrap_angle


class CollisionError(Exception):
    pass


class Rejected(CollisionError):
    """Candidate did not lead to a certified collision."""


class NoConvergence(Rejected):
    pass


class SeparationCollapse(Rejected):
    pass


class OutOfDomain(Rejected):
    pass


class NonTransverse(CollisionError):
    """Newton converged but the collision Jacobian is (nearly) singular."""

    def __init__(self, msg, point=None):
        super().__init__(msg)
        self.point = point


class AmbiguousCluster(CollisionError):
    pass


RESIDUAL_MAX = 1e-9


@dataclass(frozen=True)
class SolverConfig:
    grid: tuple[int, int, int] = (64, 64, 64)
    newton_tol: float = 1e-12
    max_newton: int = 50
    dedupe_radius: float = 1e-3
    transversality_floor: float = 1e-6
    slice_angle: float = 0.0
    seed: int = 0
    separation_floor: float = math.pi / 64
    scan_safety: float = 2.0

    def __post_init__(self):
        if len(self.grid) != 3 or min(self.grid) <= 0:
            raise ValueError("grid must be three positive integers")
        if self.grid[1] != self.grid[2]:
            raise ValueError("both circle factors of the grid must agree")
        for name in ("newton_tol", "max_newton", "dedupe_radius", "transversality_floor"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def to_json(self) -> dict:
        return {
            "grid": list(self.grid),
            "newton_tol": self.newton_tol,
            "max_newton": self.max_newton,
            "dedupe_radius": self.dedupe_radius,
            "transversality_floor": self.transversality_floor,
            "slice_angle": self.slice_angle,
            "seed": self.seed,
            "separation_floor": self.separation_floor,
        }


@dataclass(frozen=True)
class CollisionPoint:
    t: float
    z1: float
    z2: float
    location: np.ndarray = field(compare=False, repr=False)
    sign: int = 1
    det_mag: float = 0.0
    residual: float = 0.0
    iterations: int = 0

    def swapped(self) -> "CollisionPoint":
        return CollisionPoint(
            self.t, self.z2, self.z1, self.location, self.sign, self.det_mag, self.residual, self.iterations
        )

    def key(self):
        return (self.t, self.z1, self.z2)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("TWIN_THREADS", "1")))
    except ValueError:
        return 1


# --- coarse scan ------------------------------------------------------------


def coarse_scan(f: LoopFamily, cfg: SolverConfig) -> list[tuple[float, float, float]]:
    """Cell centres (t, z1, z2), z1 < z2 by index, where a collision may hide.

    A cell is kept when the S^3 distance at its centre is below a first-order
    bound on how far the distance can drop inside the cell.
    """
    nt, nz, _ = cfg.grid
    dt = 1.0 / nt
    dz = TWO_PI / nz
    ts = (np.arange(nt) + 0.5) * dt
    zs = (np.arange(nz) + 0.5) * dz
    T, Z = np.meshgrid(ts, zs, indexing="ij")
    _, v, jet = f.full(T, Z)
    vt, vz = jet.v_t, jet.v_z
    sep_ok = angular_distance(zs[:, None], zs[None, :]) >= cfg.separation_floor
    upper = np.triu(np.ones((nz, nz), bool), k=1) & sep_ok
    out = []
    for a in range(nt):
        dist = np.linalg.norm(v[a][:, None, :] - v[a][None, :, :], axis=-1)
        dvt = np.linalg.norm(vt[a][:, None, :] - vt[a][None, :, :], axis=-1)
        nvz = np.linalg.norm(vz[a], axis=-1)
        bound = 0.5 * (dvt * dt + (nvz[:, None] + nvz[None, :]) * dz)
        bound = cfg.scan_safety * bound
        hit = np.argwhere((dist < bound) & upper)
        for j, k in hit:
            out.append((float(ts[a]), float(zs[j]), float(zs[k])))
    return out


# --- Newton refinement ------------------------------------------------------


def _system(f: LoopFamily, x):
    t, z1, z2 = x
    tt = np.array([t, t])
    zz = np.array([z1, z2])
    _, v, jet = f.full(tt, zz)
    v1, v2 = v
    chart = stereo_chart(v1 + v2)
    F = chart.forward(v1) - chart.forward(v2)
    d1 = chart.derivative(v1)
    d2 = chart.derivative(v2)
    J = np.column_stack([d1 @ jet.v_t[0] - d2 @ jet.v_t[1], d1 @ jet.v_z[0], -d2 @ jet.v_z[1]])
    return F, J, v1, v2


def refine_newton(f: LoopFamily, cand, cfg: SolverConfig) -> CollisionPoint:
    x = np.array(cand, dtype=float)
    max_step = np.array([0.05, 0.2, 0.2])
    for it in range(cfg.max_newton + 1):
        if not (0.0 < x[0] < 1.0):
            raise OutOfDomain(f"t left (0, 1): {x[0]}")
        if angular_distance(x[1], x[2]) < cfg.separation_floor:
            raise SeparationCollapse("z1 and z2 merged")
        F, J, v1, v2 = _system(f, x)
        residual = float(np.linalg.norm(v1 - v2))
        if residual <= cfg.newton_tol:
            det = float(np.linalg.det(J))
            point = CollisionPoint(
                t=float(x[0]),
                z1=float(wrap_angle(x[1])),
                z2=float(wrap_angle(x[2])),
                location=sphere_point(v1 + v2),
                sign=1 if det > 0 else -1,
                det_mag=abs(det),
                residual=residual,
                iterations=it,
            )
            if abs(det) < cfg.transversality_floor:
                raise NonTransverse(f"|det DF| = {abs(det):.3g} below floor at {point.key()}", point)
            return point
        if it == cfg.max_newton:
            break
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence("singular Newton system") from exc
        scale = np.max(np.abs(step) / max_step)
        if scale > 1.0:
            step /= scale
        x = x + step
    raise NoConvergence(f"no convergence within {cfg.max_newton} steps")


def collision_sign(f: LoopFamily, t: float, z1: float, z2: float) -> tuple[int, float]:
    """Sign and |det| of DF at a point, in the chart centred between the two S^3 values."""
    _, J, _, _ = _system(f, (t, z1, z2))
    det = float(np.linalg.det(J))
    return (1 if det > 0 else -1), abs(det)


# --- dedupe and Sigma_2 quotient -------------------------------------------


def canonical(p: CollisionPoint) -> CollisionPoint:
    return p if p.z1 < p.z2 else p.swapped()


def _close(p: CollisionPoint, q: CollisionPoint, r: float) -> bool:
    dt = abs(p.t - q.t)
    same = max(dt, angular_distance(p.z1, q.z1), angular_distance(p.z2, q.z2))
    swap = max(dt, angular_distance(p.z1, q.z2), angular_distance(p.z2, q.z1))
    return min(same, swap) <= r


def dedupe_and_quotient(points, cfg: SolverConfig) -> list[CollisionPoint]:
    """Merge near-identical points and identify swapped pairs; one representative per class."""
    pts = sorted((canonical(p) for p in points), key=lambda p: (p.t, p.z1, p.z2, p.residual))
    classes: list[CollisionPoint] = []
    for p in pts:
        for c in classes:
            if _close(p, c, cfg.dedupe_radius):
                if c.sign != p.sign:
                    raise AmbiguousCluster(f"incompatible signs near {c.key()}")
                break
        else:
            classes.append(p)
    return sorted(classes, key=lambda p: (p.t, p.z1))


@dataclass
class ScanReport:
    classes: list[CollisionPoint]
    candidates: int
    rejected: int


def _batch_gauss_newton(f: LoopFamily, cands: np.ndarray, cfg: SolverConfig, iters: int = 30):
    """Vectorized Gauss-Newton on v(t, z1) - v(t, z2) = 0 (4 equations, 3 unknowns).

    Returns the start points whose residual fell below 1e-8, for individual
    certification.
    """
    x = np.array(cands, dtype=float).reshape(-1, 3)
    alive = np.ones(len(x), bool)
    max_step = np.array([0.05, 0.2, 0.2])
    for _ in range(iters):
        idx = np.nonzero(alive)[0]
        if idx.size == 0:
            break
        xa = x[idx]
        tt = np.concatenate([xa[:, 0], xa[:, 0]])
        zz = np.concatenate([xa[:, 1], xa[:, 2]])
        _, v, jet = f.full(tt, zz)
        n = len(idx)
        D = v[:n] - v[n:]
        if np.all(np.linalg.norm(D, axis=1) < 1e-13):
            break
        J = np.stack([jet.v_t[:n] - jet.v_t[n:], jet.v_z[:n], -jet.v_z[n:]], axis=-1)
        JtJ = np.einsum("nki,nkj->nij", J, J)
        JtD = np.einsum("nki,nk->ni", J, D)
        ok = np.abs(np.linalg.det(JtJ)) > 1e-30
        step = np.zeros_like(xa)
        step[ok] = -np.linalg.solve(JtJ[ok], JtD[ok][..., None])[..., 0]
        scale = np.max(np.abs(step) / max_step, axis=1)
        step /= np.maximum(scale, 1.0)[:, None]
        xa = xa + step
        bad = (~ok) | (xa[:, 0] <= 0.0) | (xa[:, 0] >= 1.0)
        bad |= angular_distance(xa[:, 1], xa[:, 2]) < cfg.separation_floor
        x[idx] = xa
        alive[idx[bad]] = False
    idx = np.nonzero(alive)[0]
    if idx.size == 0:
        return x[:0]
    _, v = f.eval(np.concatenate([x[idx, 0]] * 2), np.concatenate([x[idx, 1], x[idx, 2]]))
    close = np.linalg.norm(v[: idx.size] - v[idx.size :], axis=1) < 1e-8
    return x[idx[close]]


def find_collisions(f: LoopFamily, cfg: SolverConfig) -> ScanReport:
    """Coarse scan, batched pre-refinement, Newton certification, dedupe.

    NonTransverse aborts the run.
    """
    cands = coarse_scan(f, cfg)
    starts = _batch_gauss_newton(f, np.array(cands), cfg) if cands else np.zeros((0, 3))
    # many candidates collapse onto the same root; certify each root once
    if len(starts):
        key = np.round(np.column_stack([starts[:, 0], np.mod(starts[:, 1:], TWO_PI)]), 7)
        _, first = np.unique(key, axis=0, return_index=True)
        starts = starts[np.sort(first)]

    def run(c):
        try:
            return refine_newton(f, c, cfg)
        except Rejected:
            return None

    workers = _workers()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(c) for c in starts]
    good = [r for r in results if r is not None]
    classes = dedupe_and_quotient(good, cfg)
    return ScanReport(classes=classes, candidates=len(cands), rejected=len(cands) - len(good))
