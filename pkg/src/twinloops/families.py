"""Basepointed loops of embedded circles alpha_t : S^1 -> S^1 x S^3.

A family is stored as a vectorized function of (t, z) that returns the S^1
coordinate theta, the S^3 coordinate v and their first partials.  The
analytic builders work in a flat model: near p = e0 the S^3 coordinate is
v = normalize(e0 + u) with u in the span of e1, e2, e3.  Central projection
is injective on that half space, so two points collide in S^3 exactly when
their u coordinates agree.

Every builder starts and ends at the bent base circle

    iota_eps(z) = (z, normalize(e0 + eps*(cos z, sin z, 0))).

The finger families move a short arc of the circle (the finger, centred at
z = FINGER_Z) in two independent ways:

* in the S^1 factor, the finger's theta coordinate is pushed around the circle
  direction by `ell` turns and pulled back;
* in S^3, a stem lifts the finger above the plane of the base circle and
  carries it over the strand near z = STRAND_Z; a narrow dip then pushes the
  finger's tip down through that strand and back up.

Each pass of the tip through the strand is one point of A^{-1}(CC).  The
exponent of its monomial is the number of turns the arc from the strand to
the tip makes around S^1, which is controlled by `ell` at the moment of the
pass.  The down and up passes have opposite signs, so a down pass made with a
long finger followed by an up pass with a shorter one contributes a single
monomial after reduction in Lambda^0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.interpolate import NdBSpline, make_interp_spline

from .geom import TWO_PI, angle_diff, angular_distance, wrap_angle

DEFAULT_EPS = 0.05

FINGER_Z = 0.5 * math.pi
STRAND_Z = FINGER_Z + 0.9
FINGER_HALF_WIDTH = 0.3
LONG_FINGER_EXTRA = 0.25  # turns beyond an integer for a down pass
SHORT_FINGER = 0.8  # turns kept between cycles of the tubed families
DRIFT_FRACTION = 0.25  # global drift radius, relative to eps

SEPARATION_CUTOFF = math.pi / 64
EMBED_THRESHOLD = 1e-4


class FamilyError(Exception):
    pass


class EmbeddingCheckFailed(FamilyError):
    pass


class BasepointMismatch(FamilyError):
    pass


class FormatError(FamilyError):
    pass


class UnitSphereViolation(FamilyError):
    pass


class LoopConditionViolation(FamilyError):
    pass


@dataclass(frozen=True)
class Jet:
    theta_t: np.ndarray
    theta_z: np.ndarray
    v_t: np.ndarray
    v_z: np.ndarray


# (t, z) -> (theta, v, theta_t, theta_z, v_t, v_z); theta is a real lift, not wrapped
EvalFn = Callable[[np.ndarray, np.ndarray], tuple]


@dataclass(frozen=True)
class LoopFamily:
    name: str
    fn: EvalFn = field(repr=False)
    basepoint_eps: float = DEFAULT_EPS
    i: int | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def _call(self, t, z):
        t = np.asarray(t, dtype=float)
        z = np.asarray(z, dtype=float)
        t, z = np.broadcast_arrays(t, z)
        return self.fn(t, z)

    def eval(self, t, z):
        """Return (theta in [0, 2pi), v on S^3) at (t, z)."""
        theta, v, *_ = self._call(t, z)
        return wrap_angle(theta), v

    def theta(self, t, z):
        return wrap_angle(self._call(t, z)[0])

    def v(self, t, z):
        return self._call(t, z)[1]

    def jet(self, t, z) -> Jet:
        _, _, th_t, th_z, v_t, v_z = self._call(t, z)
        return Jet(th_t, th_z, v_t, v_z)

    def full(self, t, z):
        """Wrapped theta, v, and the jet in one call."""
        theta, v, th_t, th_z, v_t, v_z = self._call(t, z)
        return wrap_angle(theta), v, Jet(th_t, th_z, v_t, v_z)


# --- smooth profiles --------------------------------------------------------


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x**3 * (10.0 - 15.0 * x + 6.0 * x * x), 30.0 * x * x * (1.0 - x) ** 2


def _plateau(s):
    """1 on |s| <= 1/2, 0 on |s| >= 1, C^2 in between; returns value and d/ds."""
    a = np.abs(s)
    val, der = _smoothstep(2.0 * (1.0 - a))
    return val, -2.0 * der * np.sign(s)


def _tip(s):
    """Narrow bump on |s| < 1/4 with a unique maximum 1 at s = 0."""
    q = 16.0 * s * s
    inside = q < 1.0
    one_m = np.where(inside, 1.0 - q, 0.0)
    return one_m**3, np.where(inside, -96.0 * s * one_m**2, 0.0)


def _ease(s):
    """Cubic ease on [0, 1] with zero slope at both ends."""
    return 3.0 * s * s - 2.0 * s**3, 6.0 * s * (1.0 - s)


# --- schedules --------------------------------------------------------------

PARAMS = ("stem_up", "stem_over", "dip", "ell")


def _schedule(keyframes: list[dict]) -> Callable:
    """Piecewise smoothstep interpolation between equally spaced keyframes.

    Returns f(t) -> (values (4, ...), derivatives (4, ...)) for PARAMS.
    """
    frames = np.array([[kf.get(p, 0.0) for p in PARAMS] for kf in keyframes], float)
    nseg = len(frames) - 1

    def f(t):
        x = np.clip(t, 0.0, 1.0) * nseg
        k = np.minimum(np.floor(x).astype(int), nseg - 1)
        s, ds = _smoothstep(x - k)
        p0 = np.moveaxis(frames[k], -1, 0)
        p1 = np.moveaxis(frames[k + 1], -1, 0)
        return p0 + (p1 - p0) * s, (p1 - p0) * ds * nseg

    return f


def _finger_frames(passes: list[tuple[float, float]]) -> list[dict]:
    """Keyframes for a finger family: each pass is (ell for the down pass, ell for the up pass)."""
    frames = [dict(), dict(stem_up=1.0), dict(stem_up=1.0, stem_over=1.0)]
    out = dict(stem_up=1.0, stem_over=1.0)
    ell_now = 0.0
    for down, up in passes:
        if down != ell_now:
            frames.append(dict(out, ell=down))
        frames.append(dict(out, ell=down, dip=1.0))
        frames.append(dict(out, ell=up, dip=1.0))
        frames.append(dict(out, ell=up, dip=0.0))
        ell_now = up
    if ell_now != 0.0:
        frames.append(dict(out, ell=0.0))
    frames += [dict(stem_up=1.0), dict()]
    return frames


def _tubed_frames(i: int) -> list[dict]:
    out = dict(stem_up=1.0, stem_over=1.0)
    lo, hi = SHORT_FINGER, 1.0 + LONG_FINGER_EXTRA
    frames = [dict(), dict(stem_up=1.0), dict(out), dict(out, ell=lo)]
    for _ in range(i):
        frames.append(dict(out, ell=hi))
        frames.append(dict(out, ell=hi, dip=1.0))
        frames.append(dict(out, ell=lo, dip=1.0))
        frames.append(dict(out, ell=lo, dip=0.0))
    frames += [dict(out), dict(stem_up=1.0), dict()]
    return frames


# --- flat model to S^3 ------------------------------------------------------


def _lift_to_sphere(theta, u, th_t, th_z, u_t, u_z):
    """Map the flat model (theta, u in R^3) to (theta, v in S^3) with derivatives."""
    shape = u.shape[:-1]
    w = np.concatenate([np.ones(shape + (1,)), u], axis=-1)
    n = np.linalg.norm(w, axis=-1, keepdims=True)
    v = w / n

    def push(du):
        dw = np.concatenate([np.zeros(shape + (1,)), du], axis=-1)
        return (dw - v * np.sum(v * dw, axis=-1, keepdims=True)) / n

    return theta, v, th_t, th_z, push(u_t), push(u_z)


def _base_u(z, eps):
    c, s = np.cos(z), np.sin(z)
    u = eps * np.stack([c, s, np.zeros_like(z)], axis=-1)
    du = eps * np.stack([-s, c, np.zeros_like(z)], axis=-1)
    return u, du


def _drift(t, eps):
    r = DRIFT_FRACTION * eps
    a = TWO_PI * t
    d = r * np.stack([1.0 - np.cos(a), np.sin(a), np.zeros_like(t)], axis=-1)
    dd = r * TWO_PI * np.stack([np.sin(a), np.cos(a), np.zeros_like(t)], axis=-1)
    return d, dd


def generic_base(eps: float = DEFAULT_EPS) -> Callable:
    """The base embedding z -> (z, normalize(e0 + eps*(cos z, sin z, 0)))."""
    if not (0.0 < eps <= 0.1):
        raise ValueError("eps must lie in (0, 0.1]")

    def embed(z):
        z = np.asarray(z, dtype=float)
        u, _ = _base_u(z, eps)
        w = np.concatenate([np.ones(z.shape + (1,)), u], axis=-1)
        return wrap_angle(z), w / np.linalg.norm(w, axis=-1, keepdims=True)

    return embed


def _finger_family(
    name: str, i: int, frames: list[dict], eps: float, jitter: float, seed: int
) -> LoopFamily:
    if not (0.0 < eps <= 0.1):
        raise ValueError("eps must lie in (0, 0.1]")
    rng = np.random.default_rng(seed)
    j = jitter * rng.uniform(-1.0, 1.0, size=3)
    finger_z = FINGER_Z + 0.05 * j[0]
    strand_z = STRAND_Z + 0.05 * j[1]
    height = eps * (1.0 + 0.1 * j[2])
    h = FINGER_HALF_WIDTH
    over = eps * np.array(
        [math.cos(strand_z) - math.cos(finger_z), math.sin(strand_z) - math.sin(finger_z), 0.0]
    )
    up = np.array([0.0, 0.0, height])
    e3 = np.array([0.0, 0.0, 1.0])
    sched = _schedule(frames)

    def fn(t, z):
        (su, so, dip, ell), (su_t, so_t, dip_t, ell_t) = sched(t)
        s = angle_diff(z, finger_z) / h
        beta, beta_s = _plateau(s)
        tip, tip_s = _tip(s)
        stem = su[..., None] * up + so[..., None] * over
        stem_t = su_t[..., None] * up + so_t[..., None] * over
        w3 = -2.0 * height * dip
        w3_t = -2.0 * height * dip_t

        u0, u0_z = _base_u(z, eps)
        d, d_t = _drift(t, eps)
        u = u0 + beta[..., None] * stem + (tip * w3)[..., None] * e3 + d
        u_t = beta[..., None] * stem_t + (tip * w3_t)[..., None] * e3 + d_t
        u_z = u0_z + (beta_s / h)[..., None] * stem + (tip_s / h * w3)[..., None] * e3

        theta = z + TWO_PI * ell * beta
        th_t = TWO_PI * ell_t * beta
        th_z = 1.0 + TWO_PI * ell * beta_s / h
        return _lift_to_sphere(theta, u, th_t, th_z, u_t, u_z)

    meta = {"finger_z": finger_z, "strand_z": strand_z, "jitter": jitter, "seed": seed}
    return LoopFamily(name=name, fn=fn, basepoint_eps=eps, i=i, meta=meta)


def spin_loop(k: int, eps: float = DEFAULT_EPS) -> LoopFamily:
    """Spin the base circle in place k times."""
    generic_base(eps)

    def fn(t, z):
        w = z + TWO_PI * k * t
        u, du = _base_u(w, eps)
        ones = np.ones_like(z)
        return _lift_to_sphere(w, u, TWO_PI * k * ones, ones, TWO_PI * k * du, du)

    return LoopFamily(name=f"spin({k})", fn=fn, basepoint_eps=eps, i=k)


def family_T(i: int, eps: float = DEFAULT_EPS, jitter: float = 0.0, seed: int = 0) -> LoopFamily:
    """Finger wrapped i + 1/4 turns around S^1, pushed once through the strand."""
    if not (1 <= i <= 8):
        raise ValueError("family_T supports 1 <= i <= 8")
    frames = _finger_frames([(i + LONG_FINGER_EXTRA, 0.0)])
    return _finger_family(f"T({i})", i, frames, eps, jitter, seed)


def family_Tbar(i: int, eps: float = DEFAULT_EPS, jitter: float = 0.0, seed: int = 0) -> LoopFamily:
    """Tubed torus: i cycles of the finger spiralling through the strand.

    The finger never drops below one crossing of the slice theta = 0 between
    cycles, so every generic circle meets that slice in the pattern +1 or
    +1, +1, -1.
    """
    if not (1 <= i <= 8):
        raise ValueError("family_Tbar supports 1 <= i <= 8")
    return _finger_family(f"Tbar({i})", i, _tubed_frames(i), eps, jitter, seed)


# --- composition ------------------------------------------------------------


def _check_compatible(a: LoopFamily, b: LoopFamily):
    if a.basepoint_eps != b.basepoint_eps:
        raise BasepointMismatch(f"eps differ: {a.basepoint_eps} vs {b.basepoint_eps}")
    zs = np.linspace(0.0, TWO_PI, 64, endpoint=False)
    for f in (a, b):
        for t in (0.0, 1.0):
            th, v = f.eval(np.full_like(zs, t), zs)
            th0, v0 = generic_base(f.basepoint_eps)(zs)
            if np.max(angular_distance(th, th0)) > 1e-9 or np.max(np.abs(v - v0)) > 1e-9:
                raise BasepointMismatch(f"{f.name} does not start/end at the base circle")


def _retime(f: LoopFamily, g: Callable, name: str) -> LoopFamily:
    """Precompose with a time map g(t) -> (s, ds/dt)."""

    def fn(t, z):
        s, ds = g(t)
        theta, v, th_t, th_z, v_t, v_z = f.fn(s, z)
        return theta, v, th_t * ds, th_z, v_t * ds[..., None], v_z

    return LoopFamily(name=name, fn=fn, basepoint_eps=f.basepoint_eps, i=f.i, meta=dict(f.meta))


def concatenate(a: LoopFamily, b: LoopFamily) -> LoopFamily:
    """a on [0, 1/2], b on [1/2, 1], eased so the time derivative vanishes at 0, 1/2, 1."""
    _check_compatible(a, b)

    def fn(t, z):
        first = t < 0.5
        s = np.where(first, 2.0 * t, 2.0 * t - 1.0)
        e, de = _ease(s)
        de = 2.0 * de
        ra = a.fn(e, z)
        rb = b.fn(e, z)
        out = []
        for xa, xb in zip(ra, rb):
            m = first if xa.ndim == first.ndim else first[..., None]
            out.append(np.where(m, xa, xb))
        theta, v, th_t, th_z, v_t, v_z = out
        # the lift of b continues from where a ended
        shift = TWO_PI * np.round((a.fn(np.ones_like(t), z)[0] - b.fn(np.zeros_like(t), z)[0]) / TWO_PI)
        theta = np.where(first, theta, theta + shift)
        return theta, v, th_t * de, th_z, v_t * de[..., None], v_z

    return LoopFamily(name=f"({a.name})*({b.name})", fn=fn, basepoint_eps=a.basepoint_eps)


def reverse(a: LoopFamily) -> LoopFamily:
    return _retime(a, lambda t: (1.0 - t, -np.ones_like(t)), f"rev({a.name})")


def reparametrize(a: LoopFamily, strength: float = 0.3) -> LoopFamily:
    """Precompose with the orientation-preserving map t + strength*sin(2 pi t)/(2 pi)."""
    if not abs(strength) < 1.0:
        raise ValueError("|strength| must be < 1 to keep the reparametrization monotone")

    def g(t):
        return t + strength * np.sin(TWO_PI * t) / TWO_PI, 1.0 + strength * np.cos(TWO_PI * t)

    return _retime(a, g, f"reparam({a.name})")


# --- validation -------------------------------------------------------------


def _min_separated_distance(theta, v, zs, cutoff) -> float:
    """Min product-metric distance over sample pairs whose z differ by >= cutoff."""
    pts = np.concatenate([np.cos(theta)[:, None], np.sin(theta)[:, None], v], axis=1)
    d = np.sqrt(np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1))
    far = angular_distance(zs[:, None], zs[None, :]) >= cutoff
    return float(np.min(d[far]))


def embedding_margin(f: LoopFamily, n_t: int = 64, n_z: int = 256, cutoff=SEPARATION_CUTOFF) -> float:
    """Smallest separated self-distance of the circles alpha_t over n_t sampled times."""
    zs = np.linspace(0.0, TWO_PI, n_z, endpoint=False)
    worst = np.inf
    for t in np.linspace(0.0, 1.0, n_t):
        th, v = f.eval(np.full_like(zs, t), zs)
        worst = min(worst, _min_separated_distance(th, v, zs, cutoff))
    return worst


def check_embedded(f: LoopFamily, n_t: int = 64, n_z: int = 256, threshold=EMBED_THRESHOLD) -> float:
    margin = embedding_margin(f, n_t, n_z)
    if not margin > threshold:
        raise EmbeddingCheckFailed(f"{f.name}: min self-distance {margin:.3g} <= {threshold}")
    return margin


def swept_surface_margin(f: LoopFamily, n: int = 256, cutoff=SEPARATION_CUTOFF) -> float:
    """Sampled self-distance of the swept torus (t, z) -> alpha_t(z).

    Pairs of samples are compared when their circle parameters z differ by at
    least `cutoff`, whatever their times.
    """
    from scipy.spatial import cKDTree

    ts = np.linspace(0.0, 1.0, n, endpoint=False)
    zs = np.linspace(0.0, TWO_PI, n, endpoint=False)
    T, Z = np.meshgrid(ts, zs, indexing="ij")
    th, v = f.eval(T.ravel(), Z.ravel())
    pts = np.concatenate([np.cos(th)[:, None], np.sin(th)[:, None], v], axis=1)
    zi = np.tile(np.arange(n), n)
    # samples that do not move in t are exact duplicates within a z column
    key = np.concatenate([np.round(pts, 13), zi[:, None]], axis=1)
    _, keep = np.unique(key, axis=0, return_index=True)
    pts, zk = pts[keep], zs[zi[keep]]
    tree = cKDTree(pts)
    radius = 0.05
    pairs = tree.query_pairs(radius, output_type="ndarray")
    if len(pairs) == 0:
        return radius
    far = angular_distance(zk[pairs[:, 0]], zk[pairs[:, 1]]) >= cutoff
    pairs = pairs[far]
    if len(pairs) == 0:
        return radius
    d = np.linalg.norm(pts[pairs[:, 0]] - pts[pairs[:, 1]], axis=1)
    return float(d.min())


# --- sampled families -------------------------------------------------------


@dataclass(frozen=True)
class SampledFamily:
    nt: int
    nz: int
    eps: float
    theta_grid: np.ndarray  # (nt, nz), wrapped
    v_grid: np.ndarray  # (nt, nz, 4)


def sample_family(f: LoopFamily, nt: int = 256, nz: int = 256) -> SampledFamily:
    ts = np.linspace(0.0, 1.0, nt)
    zs = np.linspace(0.0, TWO_PI, nz, endpoint=False)
    T, Z = np.meshgrid(ts, zs, indexing="ij")
    th, v = f.eval(T, Z)
    th[-1] = th[0]
    v[-1] = v[0]
    return SampledFamily(nt, nz, f.basepoint_eps, th, v)


def export_sampled(f: LoopFamily, path, nt: int = 256, nz: int = 256) -> SampledFamily:
    s = sample_family(f, nt, nz)
    ts = np.linspace(0.0, 1.0, nt)
    zs = np.linspace(0.0, TWO_PI, nz, endpoint=False)
    with open(path, "w") as fh:
        fh.write(f"LOOPFAMILY v1 {nt} {nz} {float(s.eps)!r}\n")
        for a in range(nt):
            for b in range(nz):
                row = [ts[a], zs[b], s.theta_grid[a, b], *s.v_grid[a, b]]
                fh.write(" ".join(repr(float(x)) for x in row) + "\n")
    return s


def read_sampled(path) -> SampledFamily:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise FormatError("empty file")
    head = lines[0].split()
    if len(head) != 5 or head[0] != "LOOPFAMILY" or head[1] != "v1":
        raise FormatError(f"bad header: {lines[0]!r}")
    try:
        nt, nz, eps = int(head[2]), int(head[3]), float(head[4])
        rows = [[float(x) for x in ln.split()] for ln in lines[1:] if ln.strip()]
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
    if nt < 16 or nz < 16:
        raise FormatError("grid dimensions must be >= 16")
    bad = next((k for k, r in enumerate(rows) if len(r) != 7), None)
    if bad is not None:
        raise FormatError(f"data line {bad + 1} has {len(rows[bad])} numbers, expected 7")
    if len(rows) != nt * nz:
        raise FormatError(f"expected {nt * nz} data lines, got {len(rows)}")
    data = np.array(rows)
    data = data.reshape(nt, nz, 7)
    theta, v = data[..., 2], data[..., 3:]
    if np.max(np.abs(np.linalg.norm(v, axis=-1) - 1.0)) > 1e-9:
        raise UnitSphereViolation("v samples must be unit vectors within 1e-9")
    if np.max(angular_distance(theta[0], theta[-1])) > 1e-12 or np.max(np.abs(v[0] - v[-1])) > 1e-12:
        raise LoopConditionViolation("first and last t rows differ")
    return SampledFamily(nt, nz, eps, wrap_angle(theta), v)


def family_from_samples(s: SampledFamily, name: str = "import") -> LoopFamily:
    """Tensor-product cubic spline: periodic in z, not-a-knot in t."""
    ts = np.linspace(0.0, 1.0, s.nt)
    zs = np.linspace(0.0, TWO_PI, s.nz + 1)
    # continuous lift of theta; theta = deg*z + phi with phi periodic in z
    lift_z = np.unwrap(s.theta_grid, axis=1)
    deg = np.round((lift_z[:, -1] - lift_z[:, 0] + angle_diff(lift_z[:, 0], lift_z[:, -1])) / TWO_PI)
    if np.any(deg != deg[0]):
        raise FormatError("theta winding around the circle changes with t")
    deg = float(deg[0])
    phi = lift_z - deg * zs[None, :-1]
    phi = phi - TWO_PI * np.round((phi[:, :1] - np.unwrap(phi[:, 0])[:, None]) / TWO_PI)
    chans = np.concatenate([phi[..., None], s.v_grid], axis=-1)
    chans = np.concatenate([chans, chans[:, :1]], axis=1)  # close the period
    sz = make_interp_spline(zs, chans, k=3, bc_type="periodic", axis=1)
    st = make_interp_spline(ts, sz.c, k=3, axis=1)  # sz.c is (z coeffs, t, channels)
    spl = NdBSpline((st.t, sz.t), st.c, k=3)

    def ev(t, z, nu):
        x = np.stack([np.clip(t, 0.0, 1.0), np.mod(z, TWO_PI)], axis=-1)
        return spl(x.reshape(-1, 2), nu=nu).reshape(t.shape + (5,))

    def fn(t, z):
        val, d_t, d_z = ev(t, z, (0, 0)), ev(t, z, (1, 0)), ev(t, z, (0, 1))
        w = val[..., 1:]
        n = np.linalg.norm(w, axis=-1, keepdims=True)
        v = w / n

        def push(dw):
            return (dw - v * np.sum(v * dw, axis=-1, keepdims=True)) / n

        theta = deg * z + val[..., 0]
        return theta, v, d_t[..., 0], deg + d_z[..., 0], push(d_t[..., 1:]), push(d_z[..., 1:])

    return LoopFamily(name=name, fn=fn, basepoint_eps=s.eps, meta={"nt": s.nt, "nz": s.nz})


def import_sampled(path, check: bool = True) -> LoopFamily:
    s = read_sampled(path)
    f = family_from_samples(s, name=f"import({Path(path).name})")
    if check:
        check_embedded(f, n_t=64, n_z=256)
    return f


def with_name(f: LoopFamily, name: str) -> LoopFamily:
    return replace(f, name=name)
