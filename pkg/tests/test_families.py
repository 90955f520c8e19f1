import numpy as np
import pytest

from twinloops.families import (
    BasepointMismatch,
    FormatError,
    LoopConditionViolation,
    UnitSphereViolation,
    check_embedded,
    concatenate,
    embedding_margin,
    export_sampled,
    family_T,
    family_Tbar,
    generic_base,
    import_sampled,
    reparametrize,
    reverse,
    spin_loop,
    swept_surface_margin,
)
from twinloops.geom import TWO_PI, angle_diff, angular_distance

FAMILIES = {
    "spin1": lambda: spin_loop(1),
    "T2": lambda: family_T(2),
    "Tbar2": lambda: family_Tbar(2),
    "Tbar3_jitter": lambda: family_Tbar(3, jitter=1.0, seed=5),
    "concat": lambda: concatenate(family_T(1), family_Tbar(1)),
    "reverse": lambda: reverse(family_T(1)),
    "reparam": lambda: reparametrize(family_Tbar(1)),
}


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_jet_matches_finite_differences(name):
    f = FAMILIES[name]()
    rng = np.random.default_rng(0)
    t = rng.uniform(0.01, 0.99, 1000)
    z = rng.uniform(0.0, TWO_PI, 1000)
    jet = f.jet(t, z)
    h = 1e-6
    dt_th = angle_diff(f.theta(t + h, z), f.theta(t - h, z)) / (2 * h)
    dz_th = angle_diff(f.theta(t, z + h), f.theta(t, z - h)) / (2 * h)
    dt_v = (f.v(t + h, z) - f.v(t - h, z)) / (2 * h)
    dz_v = (f.v(t, z + h) - f.v(t, z - h)) / (2 * h)
    for fd, an in [(dt_th, jet.theta_t), (dz_th, jet.theta_z), (dt_v, jet.v_t), (dz_v, jet.v_z)]:
        scale = max(1.0, float(np.max(np.abs(an))))
        assert np.max(np.abs(fd - an)) / scale < 1e-6


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_loop_and_basepoint_conditions(name):
    f = FAMILIES[name]()
    zs = np.linspace(0, TWO_PI, 97)
    th0, v0 = generic_base(f.basepoint_eps)(zs)
    for t in (0.0, 1.0):
        th, v = f.eval(np.full_like(zs, t), zs)
        assert np.max(angular_distance(th, th0)) < 1e-12
        assert np.max(np.abs(v - v0)) < 1e-12
    _, v = f.eval(np.random.default_rng(1).uniform(0, 1, 500), np.random.default_rng(2).uniform(0, 7, 500))
    assert np.allclose(np.linalg.norm(v, axis=-1), 1.0, atol=1e-13)


@pytest.mark.parametrize("f", [family_T(1), family_T(8), family_Tbar(1), family_Tbar(8), spin_loop(-2)])
def test_each_circle_embedded(f):
    assert check_embedded(f) > 1e-4


@pytest.mark.parametrize("f", [family_T(1), family_T(4), family_Tbar(1), family_Tbar(4)])
def test_swept_torus_embedded(f):
    assert swept_surface_margin(f, n=256) > 1e-4


def test_generic_base_properties():
    zs = np.linspace(0, TWO_PI, 200, endpoint=False)
    th, v = generic_base(0.05)(zs)
    assert np.allclose(th, zs)
    d = np.linalg.norm(v[:, None] - v[None], axis=-1)
    far = angular_distance(zs[:, None], zs[None]) >= np.pi / 64
    assert d[far].min() > 0
    with pytest.raises(ValueError):
        generic_base(0.2)


def test_builder_ranges():
    with pytest.raises(ValueError):
        family_T(0)
    with pytest.raises(ValueError):
        family_Tbar(9)
    with pytest.raises(ValueError):
        reparametrize(family_T(1), strength=1.5)


def test_reverse_twice_is_identity():
    f = family_Tbar(2)
    g = reverse(reverse(f))
    t = np.linspace(0, 1, 33)[:, None] * np.ones((1, 40))
    z = np.linspace(0, TWO_PI, 40)[None, :] * np.ones((33, 1))
    assert np.allclose(f.v(t, z), g.v(t, z), atol=1e-15)


def test_concatenate_requires_same_eps():
    with pytest.raises(BasepointMismatch):
        concatenate(family_T(1), family_T(1, eps=0.04))


def test_margin_is_positive_for_spin():
    assert embedding_margin(spin_loop(3)) > 1e-2


# --- sampled files -----------------------------------------------------------


def _write(path, nt, nz, rows, eps=0.05):
    with open(path, "w") as fh:
        fh.write(f"LOOPFAMILY v1 {nt} {nz} {eps}\n")
        for r in rows:
            fh.write(" ".join(repr(float(x)) for x in r) + "\n")


def _rows(f, nt, nz):
    ts = np.linspace(0, 1, nt)
    zs = np.linspace(0, TWO_PI, nz, endpoint=False)
    out = []
    for t in ts:
        th, v = f.eval(np.full_like(zs, t), zs)
        out += [[t, z, a, *b] for z, a, b in zip(zs, th, v)]
    return out


def test_export_import_round_trip(tmp_path):
    f = family_Tbar(1)
    p = tmp_path / "tb1.txt"
    export_sampled(f, p, nt=256, nz=256)
    g = import_sampled(p)
    rng = np.random.default_rng(3)
    t, z = rng.uniform(0, 1, 200), rng.uniform(0, TWO_PI, 200)
    assert np.max(np.abs(f.v(t, z) - g.v(t, z))) < 2e-3
    assert np.max(angular_distance(f.theta(t, z), g.theta(t, z))) < 5e-2


def test_import_errors(tmp_path):
    f = spin_loop(0)
    rows = _rows(f, 16, 16)
    bad = tmp_path / "bad.txt"
    bad.write_text("LOOPFAMILY v2 16 16 0.05\n")
    with pytest.raises(FormatError):
        import_sampled(bad)
    _write(bad, 16, 16, rows[:-1])
    with pytest.raises(FormatError):
        import_sampled(bad)
    _write(bad, 8, 32, _rows(f, 8, 32))
    with pytest.raises(FormatError):
        import_sampled(bad)
    r2 = [list(r) for r in rows]
    r2[20][3:] = [1.1, 0, 0, 0]
    _write(bad, 16, 16, r2)
    with pytest.raises(UnitSphereViolation):
        import_sampled(bad)
    r3 = [list(r) for r in rows]
    r3[-1][3:] = [0, 1.0, 0, 0]
    _write(bad, 16, 16, r3)
    with pytest.raises(LoopConditionViolation):
        import_sampled(bad)
