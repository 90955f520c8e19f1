"""Command-line interface.

Exit codes: 0 success, 1 usage, 2 certification failure, 3 file format error.

Every command prints its result as JSON (keys sorted) or writes CSV.  A run
manifest holds the command, the full configuration, the tool version, the
wall time and the outputs written.  It goes next to the output file as
<output>.manifest.json, or to stderr if no output file was requested.  Wall
time is kept out of the result itself, so reruns give byte-identical results.
"""

from __future__ import annotations

import csv
import io
import json
import sys
import time
from dataclasses import asdict, dataclass, field

import click

from . import __version__
from .collide import CollisionError, SolverConfig
from .families import (
    FamilyError,
    FormatError,
    LoopConditionViolation,
    UnitSphereViolation,
    export_sampled,
    family_T,
    family_Tbar,
    import_sampled,
    spin_loop,
)
from .geom import GeometryError
from .invariants import InvariantError, is_pure_x2, slice_profile, w2, x2_coefficient
from .presentation import (
    PresentationError,
    build_M0_presentation,
    conclude_theorem,
    parse_ints,
    parse_signs,
)

EXIT_OK, EXIT_USAGE, EXIT_CERT, EXIT_FORMAT = 0, 1, 2, 3


class CertificationFailed(click.ClickException):
    exit_code = EXIT_CERT


class BadFormat(click.ClickException):
    exit_code = EXIT_FORMAT


class Usage(click.ClickException):
    exit_code = EXIT_USAGE


@dataclass
class RunManifest:
    command: str
    config: dict
    version: str = __version__
    wall_time: float = 0.0
    outputs: list[str] = field(default_factory=list)


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _emit(text: str, path: str | None, manifest: RunManifest, started: float) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        manifest.outputs.append(path)
    else:
        click.echo(text, nl=False)
    manifest.wall_time = round(time.perf_counter() - started, 3)
    if path:
        with open(path + ".manifest.json", "w", encoding="utf-8") as fh:
            fh.write(dumps(asdict(manifest)))
    else:
        click.echo(dumps(asdict(manifest)), err=True, nl=False)


def _family(family: str, i: int | None, eps: float, jitter: float, seed: int, path: str | None):
    try:
        if family == "import":
            if not path:
                raise Usage("--family import needs --path")
            return import_sampled(path)
        if i is None:
            raise Usage("--i is required")
        if family == "t":
            return family_T(i, eps=eps, jitter=jitter, seed=seed)
        if family == "tbar":
            return family_Tbar(i, eps=eps, jitter=jitter, seed=seed)
        return spin_loop(i, eps=eps)
    except (FormatError, UnitSphereViolation, LoopConditionViolation, OSError) as exc:
        raise BadFormat(str(exc)) from exc
    except ValueError as exc:
        raise Usage(str(exc)) from exc


def family_options(fn):
    opts = [
        click.option("--family", type=click.Choice(["t", "tbar", "spin", "import"]), required=True),
        click.option("--i", "i", type=int, default=None, help="family index (spin: winding k)"),
        click.option("--eps", type=float, default=0.05, show_default=True, help="base circle radius"),
        click.option("--jitter", type=float, default=0.0, show_default=True, help="seeded perturbation size"),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--path", type=click.Path(), default=None, help="sampled family file for --family import"),
    ]
    for o in reversed(opts):
        fn = o(fn)
    return fn


def solver_options(fn):
    d = SolverConfig()
    opts = [
        click.option("--grid", type=int, default=d.grid[0], show_default=True, help="coarse scan cells per axis"),
        click.option("--newton-tol", type=float, default=d.newton_tol, show_default=True),
        click.option("--max-newton", type=int, default=d.max_newton, show_default=True),
        click.option("--dedupe-radius", type=float, default=d.dedupe_radius, show_default=True),
        click.option("--det-floor", type=float, default=d.transversality_floor, show_default=True),
        click.option("--slice-angle", type=float, default=d.slice_angle, show_default=True),
    ]
    for o in reversed(opts):
        fn = o(fn)
    return fn


def _config(grid, newton_tol, max_newton, dedupe_radius, det_floor, slice_angle, seed) -> SolverConfig:
    try:
        return SolverConfig(
            grid=(grid, grid, grid),
            newton_tol=newton_tol,
            max_newton=max_newton,
            dedupe_radius=dedupe_radius,
            transversality_floor=det_floor,
            slice_angle=slice_angle,
            seed=seed,
        )
    except ValueError as exc:
        raise Usage(str(exc)) from exc


def _certified(fn, *args):
    try:
        return fn(*args)
    except (CollisionError, InvariantError, GeometryError, FamilyError, PresentationError) as exc:
        raise CertificationFailed(f"{type(exc).__name__}: {exc}") from exc


@click.group()
@click.version_option(__version__)
def cli():
    """Invariants W1, W2 of loops of circles in S^1 x S^3 and the twist-group bound."""


# --- invariants -------------------------------------------------------------


@cli.group()
def invariants():
    """Compute W1 and W2."""


@invariants.command("compute")
@family_options
@solver_options
@click.option("--json", "json_path", type=click.Path(), default=None)
def invariants_compute(family, i, eps, jitter, seed, path, json_path, **solver):
    started = time.perf_counter()
    cfg = _config(seed=seed, **solver)
    f = _family(family, i, eps, jitter, seed, path)
    report = _certified(w2, f, cfg)
    if not report.certification["swap_checks_passed"]:
        raise CertificationFailed("swapped representatives disagree")
    out = report.to_json()
    manifest = RunManifest(
        "invariants compute",
        {"family": family, "i": i, "eps": eps, "jitter": jitter, "seed": seed, "path": path, **cfg.to_json()},
    )
    _emit(dumps(out), json_path, manifest, started)


# --- families ---------------------------------------------------------------


@cli.group()
def families():
    """Export sampled families."""


@families.command("export")
@family_options
@click.option("--nt", type=int, default=256, show_default=True)
@click.option("--nz", type=int, default=256, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def families_export(family, i, eps, jitter, seed, path, nt, nz, out):
    started = time.perf_counter()
    if nt < 2 or nz < 4:
        raise Usage("need nt >= 2 and nz >= 4")
    f = _family(family, i, eps, jitter, seed, path)
    export_sampled(f, out, nt=nt, nz=nz)
    manifest = RunManifest(
        "families export",
        {"family": family, "i": i, "eps": eps, "jitter": jitter, "seed": seed, "nt": nt, "nz": nz},
        outputs=[out],
    )
    manifest.wall_time = round(time.perf_counter() - started, 3)
    with open(out + ".manifest.json", "w", encoding="utf-8") as fh:
        fh.write(dumps(asdict(manifest)))


# --- collisions -------------------------------------------------------------


@cli.group()
def collisions():
    """Dump collision data."""


@collisions.command("dump")
@family_options
@solver_options
@click.option("--csv", "csv_path", type=click.Path(), default=None)
def collisions_dump(family, i, eps, jitter, seed, path, csv_path, **solver):
    """One row per collision class: t, z1, z2, sign, k, residual, det_mag."""
    started = time.perf_counter()
    cfg = _config(seed=seed, **solver)
    f = _family(family, i, eps, jitter, seed, path)
    report = _certified(w2, f, cfg)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "z1", "z2", "sign", "k", "residual", "det_mag"])
    for c, d in report.classes:
        w.writerow([repr(c.t), repr(c.z1), repr(c.z2), c.sign, d.k, repr(c.residual), repr(c.det_mag)])
    manifest = RunManifest(
        "collisions dump", {"family": family, "i": i, "eps": eps, "seed": seed, **cfg.to_json()}
    )
    _emit(buf.getvalue(), csv_path, manifest, started)


# --- slice profiles ---------------------------------------------------------


@cli.group()
def slices():
    """Slice crossing profiles for plotting."""


@slices.command("profile")
@family_options
@click.option("--nt", type=int, default=64, show_default=True, help="number of t samples (t = (k + 1/2) / nt)")
@click.option("--slice-angle", type=float, default=0.0, show_default=True)
@click.option("--csv", "csv_path", type=click.Path(), default=None)
def slices_profile(family, i, eps, jitter, seed, path, nt, slice_angle, csv_path):
    """Rows (t, crossing_angle, sign): where each circle meets the slice, and how."""
    started = time.perf_counter()
    if nt < 1:
        raise Usage("--nt must be positive")
    f = _family(family, i, eps, jitter, seed, path)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "crossing_angle", "sign"])
    for k in range(nt):
        prof = _certified(slice_profile, f, (k + 0.5) / nt, slice_angle)
        for z, s in prof.crossings:
            w.writerow([repr(prof.t), repr(z), s])
    manifest = RunManifest(
        "slices profile", {"family": family, "i": i, "eps": eps, "nt": nt, "slice_angle": slice_angle}
    )
    _emit(buf.getvalue(), csv_path, manifest, started)


# --- presentation / theorem -------------------------------------------------


@cli.group()
def presentation():
    """Abelian presentations of the twist group."""


@presentation.command("m0")
@click.option("--n", "n_text", required=True, help="comma-separated n_i, starting at i = 1")
@click.option("--signs", "signs_text", default=None, help="comma-separated +/-, default all +")
@click.option("--json", "json_path", type=click.Path(), default=None)
def presentation_m0(n_text, signs_text, json_path):
    started = time.perf_counter()
    try:
        n = parse_ints(n_text)
        signs = parse_signs(signs_text) if signs_text else [1] * len(n)
        p = build_M0_presentation(n, signs)
    except (ValueError, PresentationError) as exc:
        raise Usage(str(exc)) from exc
    out = {"n": n, "signs": signs, "presentation": p.to_json(), "snf": p.snf().to_json()}
    out.update(_certified(conclude_theorem, p).to_json())
    manifest = RunManifest("presentation m0", {"n": n, "signs": signs})
    _emit(dumps(out), json_path, manifest, started)


@cli.command("theorem")
@click.option("--N", "N", type=click.IntRange(1, 4), default=2, show_default=True)
@click.option("--path", "paths", multiple=True, type=click.Path(), help="sampled files replacing Tbar(1..)")
@click.option("--eps", type=float, default=0.05, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@solver_options
@click.option("--json", "json_path", type=click.Path(), default=None)
def theorem(N, paths, eps, seed, json_path, **solver):
    """Run W2 on Tbar(1..N), extract n_i, reduce the presentation, give the verdict."""
    started = time.perf_counter()
    cfg = _config(seed=seed, **solver)
    per_i = []
    n, signs = [], []
    for i in range(1, N + 1):
        if i <= len(paths):
            f = _family("import", None, eps, 0.0, seed, paths[i - 1])
        else:
            f = _family("tbar", i, eps, 0.0, seed, None)
        report = _certified(w2, f, cfg)
        if not is_pure_x2(report.w2):
            raise CertificationFailed(f"W2 of {f.name} is {report.w2}, not a multiple of x^2")
        c = x2_coefficient(report.w2)
        n.append(abs(c))
        signs.append(-1 if c < 0 else 1)
        per_i.append({"i": i, "family": f.name, "w2": report.w2.to_json(), "w2_text": str(report.w2),
                      "n_i": c, "certification": report.certification})
    p = build_M0_presentation(n, signs)
    out = {"families": per_i, "n": n, "signs": signs, "presentation": p.to_json(), "snf": p.snf().to_json()}
    out.update(_certified(conclude_theorem, p).to_json())
    manifest = RunManifest("theorem", {"N": N, "paths": list(paths), "eps": eps, **cfg.to_json()})
    _emit(dumps(out), json_path, manifest, started)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="twinloops", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        exc.show()
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.Abort:
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
