"""Command-line entry points: render, import-sample, export-pose,
evaluate, serve."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .dataset_io import (
    build_scene,
    export_pose,
    load_sample,
    load_workspace,
    save_workspace,
)
from .raster import rasterize, save_frame_png, save_mask_png
from .server import DEFAULT_PORT, PORT_ENV_VAR, run_server
from .study import (
    SUS_STANDARD_POLARITY,
    inter_personal_stats,
    intra_personal_stats,
    population_std,
    read_annotation_log,
    sus_adjust,
    time_table,
    tlx_summary,
)


def _cmd_render(args) -> int:
    scene = load_workspace(args.workspace)
    frame = rasterize(scene, camera=args.camera, workers=args.workers)
    save_frame_png(frame, args.out)
    if args.mask:
        save_mask_png(frame.mask, args.mask)
    print(f"wrote {args.out}")
    return 0


def _cmd_import_sample(args) -> int:
    sample = load_sample(args.dataset, args.sample)
    scene = build_scene(sample, use_gt=args.use_gt)
    save_workspace(scene, args.out)
    print(f"imported sample {sample.sample_id} with {len(scene.objects)} objects -> {args.out}")
    return 0


def _cmd_export_pose(args) -> int:
    scene = load_workspace(args.workspace)
    text = export_pose(scene.get_pose(args.id))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _load_study_inputs(logs_path, dataset_root, max_points=None):
    import numpy as np

    from .dataset_io import load_mesh
    from .geometry import RigidTransform

    records = read_annotation_log(logs_path)
    meshes = {}
    gts: dict[tuple[str, str], RigidTransform] = {}
    for sample_id in sorted({r.sample for r in records}):
        sample = load_sample(dataset_root, sample_id)
        for entry in sample.objects:
            mesh = load_mesh(entry.mesh_path)
            vertices = mesh.vertices
            if max_points is not None and len(vertices) > max_points:
                # deterministic uniform subsample for huge meshes
                idx = np.unique(np.linspace(0, len(vertices) - 1, max_points).round().astype(int))
                vertices = vertices[idx]
            meshes.setdefault(mesh.mesh_id, vertices)
            if entry.gt is not None:
                gts[(sample_id, mesh.mesh_id)] = entry.gt
    return records, meshes, gts


def _emit_tables(rows, header, out_dir, mode):
    lines = ["\t".join(header)]
    lines += ["\t".join(str(v) for v in row) for row in rows]
    table = "\n".join(lines) + "\n"
    sys.stdout.write(table)
    if out_dir:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / f"{mode}_table.tsv").write_text(table, encoding="utf-8")


def _emit_summary(summary, out_dir, mode):
    if out_dir:
        path = Path(out_dir) / f"{mode}_summary.json"
        path.write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n", "utf-8")
        print(f"wrote {path}")


def _cmd_evaluate(args) -> int:
    mode = args.mode
    if mode in ("inter", "intra", "time"):
        records, meshes, gts = _load_study_inputs(
            args.logs, args.dataset, max_points=args.max_points
        )
        if mode == "time":
            table = time_table(records)
            rows = [
                (user, f"{s.mean:.4f}", f"{s.std:.4f}", s.count)
                for user, s in table.per_user.items()
            ]
            _emit_tables(rows, ("user", "mean_s", "std_s", "trials"), args.out_dir, mode)
            print(f"aggregate: {table.aggregate_mean:.2f} +/- {table.aggregate_std:.2f} s")
            summary = {
                "mode": "time",
                "per_user": {u: vars(s) for u, s in table.per_user.items()},
                "aggregate": {"mean": table.aggregate_mean, "std": table.aggregate_std},
            }
        else:
            stats = (
                inter_personal_stats(records, meshes, gts)
                if mode == "inter"
                else intra_personal_stats(records, meshes)
            )
            rows = []
            for group, metrics in sorted(stats.groups.items()):
                for key, s in metrics.items():
                    rows.append((group, key, f"{s.mean:.6f}", f"{s.std:.6f}", s.count))
            _emit_tables(
                rows, (stats.grouping, "metric", "mean", "std", "count"),
                args.out_dir, mode,
            )
            summary = {
                "mode": mode,
                "grouping": stats.grouping,
                "groups": {
                    g: {k: vars(s) for k, s in metrics.items()}
                    for g, metrics in stats.groups.items()
                },
            }
        _emit_summary(summary, args.out_dir, mode)
        return 0

    if not args.responses:
        print("--responses is required for sus/tlx modes", file=sys.stderr)
        return 2
    doc = json.loads(Path(args.responses).read_text(encoding="utf-8"))
    responses = doc["responses"]
    if mode == "sus":
        polarity = tuple(doc.get("polarity", SUS_STANDARD_POLARITY))
        adjusted = {user: sus_adjust(scores, polarity) for user, scores in responses.items()}
        per_question = list(zip(*adjusted.values()))
        rows = [
            (f"q{i + 1}", f"{sum(q) / len(q):.4f}", f"{population_std(q):.4f}", len(q))
            for i, q in enumerate(per_question)
        ]
        _emit_tables(rows, ("question", "mean", "std", "users"), args.out_dir, mode)
        summary = {"mode": "sus", "adjusted": adjusted}
    else:
        stats = tlx_summary(list(responses.values()))
        rows = [
            (dim, f"{s.mean:.4f}", f"{s.std:.4f}", s.count) for dim, s in stats.items()
        ]
        _emit_tables(rows, ("dimension", "mean", "std", "users"), args.out_dir, mode)
        summary = {"mode": "tlx", "dimensions": {d: vars(s) for d, s in stats.items()}}
    _emit_summary(summary, args.out_dir, mode)
    return 0


def _cmd_serve(args) -> int:
    port = args.port or int(os.environ.get(PORT_ENV_VAR, DEFAULT_PORT))
    run_server(args.dataset, port=port, log_dir=args.log_dir, host=args.host)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="poseforge")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render a workspace overlay to PNG")
    p.add_argument("--workspace", required=True)
    p.add_argument("--camera", choices=("original", "scene"), default="original")
    p.add_argument("--out", required=True)
    p.add_argument("--mask", help="also write the object-index mask PNG")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("import-sample", help="build a workspace from a dataset sample")
    p.add_argument("--dataset", required=True)
    p.add_argument("--sample", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--use-gt", action="store_true", help="start at ground-truth poses")
    p.set_defaults(func=_cmd_import_sample)

    p = sub.add_parser("export-pose", help="print an object's pose matrix")
    p.add_argument("--workspace", required=True)
    p.add_argument("--id", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_export_pose)

    p = sub.add_parser("evaluate", help="aggregate annotation logs or questionnaires")
    p.add_argument("--logs", help="annotation log (one JSON record per line)")
    p.add_argument("--dataset", help="dataset root with meshes and ground truth")
    p.add_argument("--mode", required=True, choices=("inter", "intra", "time", "sus", "tlx"))
    p.add_argument("--responses", help="questionnaire responses JSON (sus/tlx)")
    p.add_argument("--out-dir", help="where to write tables and the JSON summary")
    p.add_argument(
        "--max-points", type=int, default=None,
        help="uniformly subsample mesh vertices for the distance metrics "
             "(default: use every vertex)",
    )
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("serve", help="run the local annotation service")
    p.add_argument("--dataset", required=True)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--log-dir", help="directory for per-session annotation logs")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
