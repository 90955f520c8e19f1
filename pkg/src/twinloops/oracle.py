"""Independent collision oracle: dense sampling, polishing, then box bisection.

Shares no code with the Newton pipeline.  It evaluates only positions, never
the analytic jet.  The steps are:

* Sample the loop on a fine (t, z) grid.
* Form |v(t, z) - v(t, z + delta)| for every grid offset delta in
  [separation floor, pi].  Offsets above pi are the swapped representatives.
* Take the local minima of that 3-d array as seeds.
* Polish each seed with scipy's Levenberg-Marquardt, which uses a
  finite-difference Jacobian.
* Around each polished point, bisect a box spanning at least 1e-4 down to
  width 1e-9.  Sub-boxes that cannot contain a zero by a secant-slope bound are
  discarded.  Boxes live in coordinates preconditioned by a finite-difference
  Jacobian.  The reported location is the centre of the surviving leaves.
* Merge duplicates.

Signs come from a finite-difference Jacobian projected onto a positively
oriented frame of the tangent space of S^3.  Degrees come from slice counting
alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import label, minimum_filter, minimum_position
from scipy.optimize import least_squares

from .families import LoopFamily

TWO_PI = 2.0 * np.pi
ORACLE_GRID = (160, 480)
KAPPA = 3.0
LEAF_WIDTH = 1e-9
CLUSTER_WIDTH = 1e-6
MAX_BOXES = 200_000
POLISH_TOL = 1e-8
BOX_HALF = 1e-4


@dataclass(frozen=True)
class OracleRoot:
    t: float
    z1: float
    z2: float
    sign: int
    residual: float


def _diff(f: LoopFamily, x: np.ndarray) -> np.ndarray:
    n = len(x)
    _, v = f.eval(np.concatenate([x[:, 0], x[:, 0]]), np.concatenate([x[:, 1], x[:, 2]]))
    return v[:n] - v[n:]


def _circ(a, b):
    d = np.mod(a - b, TWO_PI)
    return np.minimum(d, TWO_PI - d)


def _seeds(f: LoopFamily, grid, floor):
    nt, nz = grid
    ts = (np.arange(nt) + 0.5) / nt
    zs = np.arange(nz) * TWO_PI / nz
    T, Z = np.meshgrid(ts, zs, indexing="ij")
    _, v = f.eval(T, Z)  # (nt, nz, 4)
    d_lo = int(np.ceil(floor * nz / TWO_PI))
    d_hi = nz // 2
    offs = np.arange(d_lo, d_hi + 1)
    dist = np.empty((nt, nz, offs.size), np.float32)
    for m, d in enumerate(offs):
        dist[:, :, m] = np.linalg.norm(v - np.roll(v, -d, axis=1), axis=-1)
    lo = minimum_filter(dist, size=3, mode=("nearest", "wrap", "nearest"))
    # flat stretches tie everywhere; keep the best cell of each connected patch
    labels, n = label((dist == lo) & (dist < 0.05))
    if n == 0:
        return np.zeros((0, 3))
    cells = minimum_position(dist, labels, np.arange(1, n + 1))
    a, j, m = np.array(cells).T
    return np.column_stack([ts[a], zs[j], zs[j] + offs[m] * TWO_PI / nz])


def _fd_jacobian(f: LoopFamily, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    cols = []
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        cols.append((_diff(f, (x + e)[None, :]) - _diff(f, (x - e)[None, :]))[0] / (2 * h))
    return np.column_stack(cols)


def _prune(f: LoopFamily, x0: np.ndarray, A: np.ndarray, centers: np.ndarray, r: float) -> np.ndarray:
    """Drop boxes (in y, x = x0 + A y) whose centre value exceeds KAPPA times the secant bound."""
    d0 = _diff(f, x0 + centers @ A.T)
    bound = np.zeros(len(centers))
    for i in range(3):
        e = np.zeros(3)
        e[i] = r
        dp = np.linalg.norm(_diff(f, x0 + (centers + e) @ A.T) - d0, axis=1)
        dm = np.linalg.norm(_diff(f, x0 + (centers - e) @ A.T) - d0, axis=1)
        bound += np.maximum(dp, dm)
    return centers[np.linalg.norm(d0, axis=1) <= KAPPA * bound]


def _bisect(f: LoopFamily, x0: np.ndarray) -> np.ndarray:
    """Leaves (in x) of the subdivision of a box around x0 that may contain a zero.

    Boxes live in preconditioned coordinates y with x = x0 + A y, A = V S^-1
    from the SVD of a finite-difference Jacobian, so that D is close to an
    isometry in y and few boxes survive each level.
    """
    _, sv, vt = np.linalg.svd(_fd_jacobian(f, x0), full_matrices=False)
    A = vt.T / sv[None, :]
    r = BOX_HALF * sv.min()  # y-box whose image spans at least BOX_HALF in x
    offs = np.array([[a, b, c] for a in (-1, 1) for b in (-1, 1) for c in (-1, 1)], float)
    centers = np.zeros((1, 3))
    while True:
        centers = _prune(f, x0, A, centers, r)
        if len(centers) == 0 or r * np.abs(A).sum(axis=1).max() <= LEAF_WIDTH:
            return x0 + centers @ A.T
        if len(centers) > MAX_BOXES:
            raise RuntimeError(f"bisection did not localise near {x0.tolist()}")
        r = r / 2.0
        centers = (centers[:, None, :] + offs[None, :, :] * r).reshape(-1, 3)


def oracle_collisions(f: LoopFamily, cfg=None, grid: tuple[int, int] = ORACLE_GRID) -> list[OracleRoot]:
    """Collisions, one representative per swap class, with z1 < z2 after wrapping."""
    floor = cfg.separation_floor if cfg is not None else np.pi / 64
    found: list[np.ndarray] = []
    for seed in _seeds(f, grid, floor):
        sol = least_squares(
            lambda x: _diff(f, x[None, :])[0],
            seed,
            method="lm",
            xtol=1e-15,
            ftol=1e-15,
            gtol=1e-15,
            max_nfev=400,
        )
        if np.linalg.norm(sol.fun) > POLISH_TOL or _circ(sol.x[1], sol.x[2]) < floor:
            continue
        leaves = _bisect(f, sol.x)
        if len(leaves) == 0:
            raise RuntimeError(f"bisection lost the zero polished near {sol.x.tolist()}")
        if np.ptp(leaves, axis=0).max() > CLUSTER_WIDTH:
            raise RuntimeError(f"several zeros inside one box near {sol.x.tolist()}")
        x = leaves.mean(axis=0)
        if not (0.0 < x[0] < 1.0) or _circ(x[1], x[2]) < floor:
            continue
        z1, z2 = np.mod(x[1], TWO_PI), np.mod(x[2], TWO_PI)
        if z1 > z2:
            z1, z2 = z2, z1
        p = np.array([x[0], z1, z2])
        if not any(abs(p[0] - q[0]) < 1e-6 and _circ(p[1], q[1]) < 1e-6 and _circ(p[2], q[2]) < 1e-6 for q in found):
            found.append(p)
    roots = []
    for t, z1, z2 in found:
        res = float(np.linalg.norm(_diff(f, np.array([[t, z1, z2]]))[0]))
        roots.append(OracleRoot(float(t), float(z1), float(z2), fd_sign(f, t, z1, z2), res))
    return sorted(roots, key=lambda r: (r.t, r.z1))


def _positive_frame(v: np.ndarray) -> np.ndarray:
    """Rows: orthonormal basis of v-perp with det[v, E] > 0."""
    _, _, vh = np.linalg.svd(v[None, :])
    E = vh[1:].copy()
    if np.linalg.det(np.vstack([v, E])) < 0:
        E[0] = -E[0]
    return E


def fd_sign(f: LoopFamily, t: float, z1: float, z2: float) -> int:
    """Sign of the collision Jacobian in a positively oriented tangent frame at the meeting point."""
    J = _fd_jacobian(f, np.array([t, z1, z2]))
    _, v = f.eval(np.array([t, t]), np.array([z1, z2]))
    mid = v[0] + v[1]
    mid = mid / np.linalg.norm(mid)
    return 1 if np.linalg.det(_positive_frame(mid) @ J) > 0 else -1


def _count(path: np.ndarray, s: float) -> int:
    lifted = np.unwrap(path) - s
    return int(np.floor(lifted[-1] / TWO_PI) - np.floor(lifted[0] / TWO_PI))


def oracle_degree(f: LoopFamily, r, slice_angle: float = 0.0, n: int = 1 << 15) -> int:
    """Exponent k by counting crossings of the arc and of the backward arc with a slice."""
    span = np.mod(r.z2 - r.z1, TWO_PI)
    zs = r.z1 + np.linspace(0.0, span, n + 1)
    theta = np.mod(f.theta(np.full_like(zs, r.t), zs), TWO_PI)
    s = slice_angle
    for _ in range(17):
        if _circ(theta[0], s) >= 1e-3 and _circ(theta[-1], s) >= 1e-3:
            break
        s += 1e-2
    arc = _count(theta, s)
    gap = np.mod(theta[-1] - theta[0], TWO_PI)
    back = -1 if 0.0 < np.mod(theta[-1] - s, TWO_PI) < gap else 0
    return arc + back
