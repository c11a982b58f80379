"""Command-line entry point.

Subcommands::

    geoaug gen-scene SCENE --out DIR
    geoaug augment BUNDLE --out DIR [--no-sh] [--no-visibility] [--casting random] [--no-depth-warp]
    geoaug eval BUNDLE AUGMENT_DIR --out DIR
    geoaug ablate BUNDLE --out DIR
    geoaug radiance-table --out DIR [--bundle BUNDLE | --generator {band_limited,constant}]

Exit codes: 0 success, 1 usage error, 2 data or parse error, 3 invariant
violation.  The worker count for rendering comes from ``GEOAUG_WORKERS``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io as gio
from .augment import (
    AugmentConfig,
    AugmentedRays,
    AugmentReport,
    PreparedScene,
    gather_batch,
    prepare_scene,
    radiance_split_experiment,
    run_augmentation,
    synthetic_radiance_points,
)
from .errors import EmptyOverlapError, GeoAugError
from .render import depth_metrics, psnr, ssim
from .scene import SceneBundle, build_scene, load_bundle, save_bundle
from .sh import RadianceSampleSet

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INVARIANT = 0, 1, 2, 3
CSV_HEADER = ("condition", "sparsity", "metric", "value")
CONDITIONS = ("full", "no_sh", "no_visibility", "random_casting", "no_depth_warp")
GRID_METRICS = ("pseudo_label_mse", "rays_emitted", "depth_absrel", "depth_rmse", "psnr", "ssim")
DEFAULT_SPARSE = 4


class InvariantViolation(GeoAugError):
    """A pipeline invariant failed at run time."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def workers() -> int:
    try:
        return max(1, int(os.environ.get("GEOAUG_WORKERS", "1")))
    except ValueError:
        return 1


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_rows(path: Path, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for cond, k, metric, value in rows:
        w.writerow([cond, k, metric, fmt(value)])
    path.write_text(buf.getvalue())


def condition_name(config: AugmentConfig) -> str:
    parts = []
    if not config.use_sh:
        parts.append("no_sh")
    if not config.use_visibility_check:
        parts.append("no_visibility")
    if config.casting == "random":
        parts.append("random_casting")
    if not config.use_depth_warp:
        parts.append("no_depth_warp")
    return "+".join(parts) or "full"


def condition_config(name: str, base: AugmentConfig) -> AugmentConfig:
    return {
        "full": base,
        "no_sh": replace(base, use_sh=False),
        "no_visibility": replace(base, use_visibility_check=False),
        "random_casting": replace(base, casting="random"),
        "no_depth_warp": replace(base, use_depth_warp=False),
    }[name]


def check_report(report: AugmentReport) -> None:
    if not report.consistent():
        raise InvariantViolation(
            f"rejected ({report.rays_rejected}) + emitted ({report.rays_emitted}) != cast ({report.rays_cast})"
        )


# ---------------------------------------------------------------- metrics


def pseudo_label_mse(bundle: SceneBundle, rays: AugmentedRays) -> float:
    """Mean squared error of the labels against the true color each ray carries."""
    if len(rays) == 0:
        return float("nan")
    truth = bundle.scene.ray_radiance(rays.origins, rays.directions)
    return float(np.mean((rays.colors - truth) ** 2))


def depth_rows(bundle: SceneBundle, depth_maps: dict) -> dict:
    """Mean warped-depth ABSREL / RMSE / coverage over held-out cameras."""
    if not depth_maps:
        return {"depth_absrel": float("nan"), "depth_rmse": float("nan"), "depth_coverage": 0.0}
    absrel, rmse, cover = [], [], []
    for t in sorted(depth_maps):
        pred = depth_maps[t]
        truth = bundle.depths[t]
        n_truth = int(truth.valid.sum())
        cover.append(float((pred.valid & truth.valid).sum()) / n_truth if n_truth else 0.0)
        try:
            a, r = depth_metrics(pred, truth)
        except EmptyOverlapError:
            continue
        absrel.append(a)
        rmse.append(r)
    return {
        "depth_absrel": float(np.mean(absrel)) if absrel else float("nan"),
        "depth_rmse": float(np.mean(rmse)) if rmse else float("nan"),
        "depth_coverage": float(np.mean(cover)),
    }


def render_rows(bundle: SceneBundle) -> dict:
    """PSNR / SSIM of the compositing renderer against the traced images."""
    ps, ss = [], []
    for t in bundle.test:
        comp = bundle.scene.render_composite(bundle.cameras[t])
        ps.append(psnr(comp, bundle.images[t]))
        ss.append(ssim(comp, bundle.images[t]))
    return {"psnr": float(np.mean(ps)) if ps else float("nan"), "ssim": float(np.mean(ss)) if ss else float("nan")}


def evaluate(bundle: SceneBundle, rays: AugmentedRays, report_counts: dict, depth_maps: dict,
             renders: dict | None = None) -> dict:
    out = {"pseudo_label_mse": pseudo_label_mse(bundle, rays)}
    for k in ("rays_cast", "rays_rejected", "rays_emitted", "sh_vertices", "fallback_vertices",
              "interpolated_vertices", "vertices_skipped", "training_views"):
        out[k] = int(report_counts.get(k, 0))
    out.update(depth_rows(bundle, depth_maps))
    out.update(renders if renders is not None else render_rows(bundle))
    return out


# ---------------------------------------------------------------- commands


def cmd_gen_scene(args) -> int:
    bundle = build_scene(args.scene, workers=workers())
    manifest = save_bundle(bundle, args.out)
    print(f"wrote {len(bundle.cameras)} views to {args.out} ({manifest.name})")
    return EXIT_OK


def _config_from_args(args) -> AugmentConfig:
    return AugmentConfig(
        rays_per_vertex=args.rays_per_vertex,
        n_v_threshold=args.n_v,
        l_max=args.l_max,
        ridge=args.ridge,
        seed=args.seed,
        use_sh=not args.no_sh,
        use_visibility_check=not args.no_visibility,
        casting=args.casting,
        use_depth_warp=not args.no_depth_warp,
        resolution=args.resolution,
        max_vertices=args.max_vertices,
        coarse_noise=args.coarse_noise,
    )


def _sparsity(args, bundle: SceneBundle) -> int:
    return args.sparsity if args.sparsity is not None else bundle.scene.trajectory.sparsity


def cmd_augment(args) -> int:
    bundle = load_bundle(args.bundle)
    config = _config_from_args(args)
    k = _sparsity(args, bundle)
    rays, report = run_augmentation(bundle, config, k)
    check_report(report)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "rays.txt").write_text(rays.to_text())
    (out / "report.txt").write_text(report.to_text())
    meta = {"condition": condition_name(config), "sparsity": k, "config": config.to_dict()}
    (out / "config.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    cond = condition_name(config)
    write_rows(out / "report.csv", [(cond, k, m, v) for m, v in report.counts().items()])
    depth_dir = out / "depth"
    if report.depth_maps:
        depth_dir.mkdir(exist_ok=True)
        for t, res in sorted(report.depth_maps.items()):
            gio.write_depth(depth_dir / f"{t:03d}.depth", res.depth)
    print(f"{cond} k={k}: emitted {report.rays_emitted} of {report.rays_cast} rays "
          f"({report.sh_vertices} SH, {report.fallback_vertices} single-view vertices)")
    return EXIT_OK


def cmd_eval(args) -> int:
    bundle = load_bundle(args.bundle)
    aug = Path(args.augment_dir)
    if not (aug / "config.json").exists() or not (aug / "rays.txt").exists():
        raise FileNotFoundError(f"{aug}: not an augmentation output directory")
    meta = json.loads((aug / "config.json").read_text())
    rays = AugmentedRays.from_text((aug / "rays.txt").read_text())
    counts = {}
    for ln in (aug / "report.txt").read_text().splitlines():
        key, _, val = ln.partition(" ")
        if key != "wall_time_s":
            counts[key] = int(val)
    depth_maps = {}
    if (aug / "depth").is_dir():
        for p in sorted((aug / "depth").glob("*.depth")):
            depth_maps[int(p.stem)] = gio.read_depth(p)
    metrics = evaluate(bundle, rays, counts, depth_maps)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cond, k = meta["condition"], meta["sparsity"]
    write_rows(out / "metrics.csv", [(cond, k, m, v) for m, v in metrics.items()])
    print(f"{cond} k={k}: pseudo-label MSE {metrics['pseudo_label_mse']:.6g}")
    return EXIT_OK


def run_ablation(bundle: SceneBundle, base: AugmentConfig, sparse: int = DEFAULT_SPARSE) -> list[tuple]:
    """Every condition at dense (k=1) and sparse (k=``sparse``) coverage.

    Returns ``(condition, k, metrics)`` tuples in grid order."""
    renders = render_rows(bundle)
    results = []
    for k in (1, sparse):
        prepared: PreparedScene = prepare_scene(bundle, base, k)
        for name in CONDITIONS:
            cfg = condition_config(name, base)
            rays, report = run_augmentation(bundle, cfg, k, prepared=prepared)
            check_report(report)
            maps = {t: r.depth for t, r in report.depth_maps.items()}
            results.append((name, k, evaluate(bundle, rays, report.counts(), maps, renders)))
    return results


def cmd_ablate(args) -> int:
    bundle = load_bundle(args.bundle)
    base = AugmentConfig(seed=args.seed, max_vertices=args.max_vertices)
    results = run_ablation(bundle, base, args.sparsity)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_rows(out / "ablation.csv", [(c, k, m, v) for c, k, met in results for m, v in met.items()])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("condition", "sparsity") + GRID_METRICS)
    for c, k, met in results:
        w.writerow([c, k] + [fmt(met[m]) for m in GRID_METRICS])
    (out / "ablation_grid.csv").write_text(buf.getvalue())
    for c, k, met in results:
        print(f"{c:>15} k={k}: mse {met['pseudo_label_mse']:.6f} rays {met['rays_emitted']}")
    return EXIT_OK


def bundle_radiance_points(bundle: SceneBundle, n_samples: int, max_points: int, seed: int) -> list[RadianceSampleSet]:
    """Observed radiance sets of surface vertices with at least ``n_samples``
    views, each trimmed to exactly ``n_samples`` randomly chosen views."""
    cfg = AugmentConfig(seed=seed, max_vertices=max_points)
    prepared = prepare_scene(bundle, cfg)
    idx = list(range(len(bundle.cameras)))
    obs = gather_batch(prepared.field, prepared.positions, prepared.normals,
                       [bundle.cameras[i] for i in idx], [bundle.images[i] for i in idx])
    rng = np.random.default_rng(seed)
    points = []
    for i in np.flatnonzero(obs.counts >= n_samples):
        avail = np.flatnonzero(obs.mask[i])
        pick = np.sort(rng.choice(avail, n_samples, replace=False))
        points.append(RadianceSampleSet(obs.colors[i, pick], obs.directions[i, pick]))
    return points


def cmd_radiance_table(args) -> int:
    if args.bundle:
        bundle = load_bundle(args.bundle)
        points = bundle_radiance_points(bundle, args.samples, args.points, args.seed)
        source = "bundle"
    else:
        points = synthetic_radiance_points(args.points, args.samples, seed=args.seed,
                                           constant=args.generator == "constant")
        source = args.generator
    if not points:
        raise EmptyOverlapError("no surface point has enough observations")
    res = radiance_split_experiment(points, config=AugmentConfig(seed=args.seed), seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = [(method, ratio, "novel_view_mse", v) for method, ratio, v in res.rows()]
    rows.append((source, "all", "points", len(points)))
    write_rows(out / "radiance_table.csv", rows)
    for method in ("interpolation", "sh"):
        vals = [v for m, _, v in res.rows() if m == method]
        print(f"{method:>13}: " + "  ".join(f"{r[0]}:{r[1]} {v:.6f}" for r, v in zip(res.ratios, vals)))
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="geoaug", description="Geometry-informed ray augmentation on synthetic scenes.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-scene", help="build and render a scene bundle")
    g.add_argument("scene", help="scene JSON file or preset name (sphere_ring, street, occluder_pair)")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_scene)

    a = sub.add_parser("augment", help="run the augmentation pipeline on a bundle")
    a.add_argument("bundle")
    a.add_argument("--out", required=True)
    a.add_argument("--no-sh", action="store_true")
    a.add_argument("--no-visibility", action="store_true")
    a.add_argument("--casting", choices=("surface_guided", "random"), default="surface_guided")
    a.add_argument("--no-depth-warp", action="store_true")
    a.add_argument("--seed", type=int, default=42)
    a.add_argument("--sparsity", type=int, default=None, help="keep every k-th training view")
    a.add_argument("--rays-per-vertex", type=int, default=16)
    a.add_argument("--n-v", type=int, default=10, help="views needed for an SH fit")
    a.add_argument("--l-max", type=int, default=2)
    a.add_argument("--ridge", type=float, default=AugmentConfig.ridge)
    a.add_argument("--resolution", type=int, default=64)
    a.add_argument("--max-vertices", type=int, default=10000)
    a.add_argument("--coarse-noise", type=float, default=0.0)
    a.set_defaults(func=cmd_augment)

    e = sub.add_parser("eval", help="score an augmentation run")
    e.add_argument("bundle")
    e.add_argument("augment_dir")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("ablate", help="all ablation conditions, dense and sparse")
    b.add_argument("bundle")
    b.add_argument("--out", required=True)
    b.add_argument("--seed", type=int, default=42)
    b.add_argument("--sparsity", type=int, default=DEFAULT_SPARSE)
    b.add_argument("--max-vertices", type=int, default=10000)
    b.set_defaults(func=cmd_ablate)

    r = sub.add_parser("radiance-table", help="SH fitting vs interpolation on held-out views")
    src = r.add_mutually_exclusive_group()
    src.add_argument("--bundle")
    src.add_argument("--generator", choices=("band_limited", "constant"), default="band_limited")
    r.add_argument("--out", required=True)
    r.add_argument("--points", type=int, default=10000)
    r.add_argument("--samples", type=int, default=40)
    r.add_argument("--seed", type=int, default=42)
    r.set_defaults(func=cmd_radiance_table)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name in ("sparsity", "points", "samples", "rays_per_vertex", "max_vertices"):
        v = getattr(args, name, None)
        if v is not None and v < 1:
            parser.error(f"--{name.replace('_', '-')} must be >= 1")
    try:
        return args.func(args)
    except InvariantViolation as e:
        print(f"geoaug: invariant violated: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except (GeoAugError, ValueError, OSError, KeyError, json.JSONDecodeError) as e:
        print(f"geoaug: error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
