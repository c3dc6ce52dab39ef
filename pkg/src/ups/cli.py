"""Command-line interface.

Subcommands: render, solve, eval, sweep-noise, theorem2, degeneracy,
lorentz-demo.  Dataset manifests are JSON files; UPS_THREADS caps the
noise-sweep worker count without changing any output byte.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import BadSignatureError, DegenerateSurfaceError, UpsError
from .geometry import SHAPE_KINDS, NormalField, synth_depth, normals_orthographic, normals_perspective
from .grid import ORTHOGRAPHIC, PERSPECTIVE, CameraModel, PixelGrid
from .harness import (
    ALBEDO_KINDS,
    DatasetManifest,
    emit_theorem2_report,
    generate_dataset,
    load_dataset,
    make_albedo,
    mean_angular_error,
    resolve_ortho_twin,
    run_noise_sweep,
    run_theorem2_experiment,
)
from .integrability import build_ortho_matrix, build_persp_matrix, c_fields, degeneracy_report
from .io import read_psg, write_matrix_csv, write_psg
from .lorentz import classify, decompose, realize, sample_scaled_lorentz
from .shading import build_mfield
from .solver import solve_ups_perspective

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DEGENERATE = 2
EXIT_SIGNATURE = 3


def _manifest_from_args(args) -> DatasetManifest:
    from dataclasses import asdict

    base = DatasetManifest.load(args.manifest) if args.manifest else DatasetManifest()
    d = asdict(base)
    if getattr(args, "shape", None) and args.shape != d["shape_kind"]:
        d["shape_kind"] = args.shape
        d["shape_params"] = {}  # refilled with the kind's defaults
    if getattr(args, "albedo", None):
        d["albedo_kind"] = args.albedo
    if getattr(args, "size", None):
        d["size"] = (args.size, args.size)
    if getattr(args, "focal", None):
        d["focal"] = args.focal
    if getattr(args, "seed", None) is not None:
        d["lighting_seed"] = args.seed
    if getattr(args, "noise", None) is not None:
        d["noise_sigma_pct"] = args.noise
    return DatasetManifest.from_dict(d)


def cmd_render(args) -> int:
    manifest = _manifest_from_args(args)
    generate_dataset(manifest, args.out)
    print(f"dataset written to {args.out} ({manifest.m_images} images, "
          f"shape={manifest.shape_kind}, albedo={manifest.albedo_kind})")
    if manifest.degenerate_shape:
        print("note: shape is in the degenerate family")
    return EXIT_OK


def cmd_solve(args) -> int:
    stack, camera, _, _ = load_dataset(args.images)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        report = solve_ups_perspective(stack, camera)
    except DegenerateSurfaceError as e:
        print(f"degenerate surface: {e}", file=sys.stderr)
        return EXIT_DEGENERATE
    except BadSignatureError as e:
        print(f"signature failure: {e}", file=sys.stderr)
        return EXIT_SIGNATURE
    write_psg(out / "normals_est.psg", report.normals.grid.values)
    write_psg(out / "albedo_est.psg", report.albedo.grid.values)
    (out / "diagnostics.json").write_text(
        json.dumps(report.diagnostics, sort_keys=True, indent=2) + "\n"
    )
    print(f"solved: outputs in {out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    stack, _, gt, _ = load_dataset(args.manifest)
    est_vals = read_psg(args.est)
    est = NormalField(PixelGrid(est_vals, stack.mask), strict=False)
    if args.resolve_twin:
        est = resolve_ortho_twin(est, gt)
    result = mean_angular_error(est, gt)
    print(f"mean angular error: {result.mae_degrees:.6f} degrees")
    if args.out:
        Path(args.out).write_text(
            json.dumps({"mae_degrees": result.mae_degrees}, indent=2) + "\n"
        )
    return EXIT_OK


def cmd_sweep_noise(args) -> int:
    manifest = _manifest_from_args(args)
    sigmas = [float(s) for s in args.sigmas.split(",")]
    seeds = [int(s) for s in args.seeds.split(",")]
    result = run_noise_sweep(manifest, sigmas, seeds, out_dir=args.out)
    for sigma, med in result.medians.items():
        print(f"sigma={sigma}% -> median MAE {med:.3f} deg")
    print(f"breakdown sigma: {result.breakdown_sigma}")
    return EXIT_OK


def cmd_theorem2(args) -> int:
    try:
        report = run_theorem2_experiment(
            shape_kind=args.shape, size=args.size, n_transforms=args.transforms, seed=args.seed
        )
    except DegenerateSurfaceError as e:
        print(f"degenerate surface: {e}", file=sys.stderr)
        return EXIT_DEGENERATE
    emit_theorem2_report(report, args.out)
    print(f"residual floor {report.floor:.3e}; admissible-form max {report.max_form:.3e}; "
          f"generic min {report.min_generic:.3e}; separation {report.separation:.1f}x")
    return EXIT_OK


def cmd_degeneracy(args) -> int:
    if args.projection == PERSPECTIVE:
        camera = CameraModel.perspective(args.focal)
    else:
        camera = CameraModel.orthographic()
    depth = synth_depth(args.shape, None, args.size, camera)
    normals = normals_perspective(depth) if camera.is_perspective else normals_orthographic(depth)
    albedo = make_albedo("white", normals.grid.mask)
    cf = c_fields(build_mfield(albedo, normals))
    if camera.is_perspective:
        im = build_persp_matrix(cf, camera)
    else:
        im = build_ortho_matrix(cf)
    report = degeneracy_report(im)
    payload = {
        "shape": args.shape,
        "projection": args.projection,
        "degenerate": bool(report.degenerate),
        "condition_ratio": report.condition_ratio,
        "matched_pattern": report.matched_pattern,
        "singular_values": [float(s) for s in report.singular_values],
    }
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")
    return EXIT_DEGENERATE if report.degenerate else EXIT_OK


def cmd_lorentz_demo(args) -> int:
    rng = np.random.default_rng(args.seed)
    sample = sample_scaled_lorentz(rng)
    A = realize(sample)
    info = classify(A)
    back = decompose(A)
    err = np.abs(realize(back) - A).max()
    print(f"sample: s={sample.s:.4f} |v|={np.linalg.norm(sample.v):.4f} "
          f"proper={sample.proper} orthochronous={sample.orthochronous}")
    print(f"classified: scaled_lorentz={info.is_scaled_lorentz} s={info.s:.4f} "
          f"residual={info.residual:.3e}")
    print(f"realize(decompose(A)) max error: {err:.3e}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_matrix_csv(out / "lorentz_matrix.csv", A)
        write_matrix_csv(out / "lorentz_rotation.csv", back.O)
        write_matrix_csv(out / "lorentz_boost.csv", back.v[None, :])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ups",
        description="Uncalibrated photometric stereo under first-order spherical-harmonics lighting",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="generate a synthetic dataset")
    p.add_argument("--manifest", help="JSON manifest with scene parameters")
    p.add_argument("--out", required=True)
    p.add_argument("--shape", choices=SHAPE_KINDS)
    p.add_argument("--albedo", choices=ALBEDO_KINDS)
    p.add_argument("--size", type=int)
    p.add_argument("--focal", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--noise", type=float, help="sigma in percent of max intensity")
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("solve", help="run the perspective pipeline on a dataset")
    p.add_argument("--images", required=True, help="dataset manifest JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("eval", help="mean angular error of estimated normals")
    p.add_argument("--est", required=True, help="estimated normals PSG")
    p.add_argument("--manifest", required=True, help="dataset manifest JSON")
    p.add_argument("--resolve-twin", action="store_true",
                   help="allow the orthographic concave/convex twin")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("sweep-noise", help="MAE vs noise level table")
    p.add_argument("--manifest", help="clean dataset manifest JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--sigmas", default="0,0.01,0.05,0.1,0.2,0.5")
    p.add_argument("--seeds", default="0,1,2,3,4")
    p.add_argument("--shape", choices=SHAPE_KINDS)
    p.add_argument("--albedo", choices=ALBEDO_KINDS)
    p.add_argument("--size", type=int)
    p.add_argument("--focal", type=float)
    p.add_argument("--seed", type=int)
    p.set_defaults(fn=cmd_sweep_noise)

    p = sub.add_parser("theorem2", help="orthographic ambiguity separation experiment")
    p.add_argument("--out", required=True)
    p.add_argument("--shape", default="multi_bump", choices=SHAPE_KINDS)
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--transforms", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_theorem2)

    p = sub.add_parser("degeneracy", help="rank diagnostics of the integrability matrix")
    p.add_argument("--shape", required=True, choices=SHAPE_KINDS)
    p.add_argument("--projection", default=PERSPECTIVE, choices=[ORTHOGRAPHIC, PERSPECTIVE])
    p.add_argument("--size", type=int, default=96)
    p.add_argument("--focal", type=float, default=450.0)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_degeneracy)

    p = sub.add_parser("lorentz-demo", help="sample, classify and decompose a transform")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_lorentz_demo)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except UpsError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
