"""Command-line front end.

Subcommands: gen-scenes, run, eval, ablate, trace. Exit codes: 0 success,
2 configuration error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from .config import RunConfig, load_config
from .errors import ConfigInvalid, RelnavError
from .metrics import compute_metrics, result_from_json
from .prompts import SINGLE_SLOT_TEMPLATES
from .runner import run_batch
from .scenegen import generate_scene, save_episode

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _cmd_gen_scenes(args) -> int:
    config = load_config(args.config)
    os.makedirs(args.out, exist_ok=True)
    for seed in config.seeds:
        episode = generate_scene(seed, config.scene)
        save_episode(episode, os.path.join(args.out, f"scene_{seed}.json"))
    print(f"wrote {len(config.seeds)} scenes to {args.out}")
    return EXIT_OK


def _cmd_run(args) -> int:
    config = load_config(args.config)
    summary = run_batch(config, args.out, scenes_dir=args.scenes)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def _load_results(results_dir: str):
    path = os.path.join(results_dir, "results.jsonl")
    if not os.path.exists(path):
        raise RelnavError(f"no results.jsonl under {results_dir}")
    with open(path) as fh:
        return [result_from_json(json.loads(line)) for line in fh if line.strip()]


def _print_table(rows: list[dict], csv: bool = False) -> None:
    if not rows:
        return
    headers = list(rows[0].keys())
    if csv:
        print(",".join(headers))
        for row in rows:
            print(",".join(str(row[h]) for h in headers))
        return
    widths = {h: max(len(h), *(len(str(r[h])) for r in rows)) for h in headers}
    print("  ".join(h.ljust(widths[h]) for h in headers))
    print("  ".join("-" * widths[h] for h in headers))
    for row in rows:
        print("  ".join(str(row[h]).ljust(widths[h]) for h in headers))


def _metrics_row(name: str, metrics: dict) -> dict:
    return {
        "variant": name,
        "n": metrics["n"],
        "SR": f"{metrics['sr']:.3f}",
        "SPL": f"{metrics['spl']:.3f}",
        "avg_steps": f"{metrics['avg_steps_success']:.1f}",
    }


def _cmd_eval(args) -> int:
    results = _load_results(args.results)
    metrics = compute_metrics(results)
    _print_table([_metrics_row(os.path.basename(os.path.normpath(args.results)), metrics)],
                 csv=args.csv)
    return EXIT_OK


def _ablation_variants(config: RunConfig, axis: str):
    if axis == "modules":
        yield "base", replace(config, modules=replace(
            config.modules, drpm_object=False, drpm_region=False, ramm_enabled=False))
        yield "object", replace(config, modules=replace(
            config.modules, drpm_object=True, drpm_region=False, ramm_enabled=False))
        yield "object+region", replace(config, modules=replace(
            config.modules, drpm_object=True, drpm_region=True, ramm_enabled=False))
        yield "full", replace(config, modules=replace(
            config.modules, drpm_object=True, drpm_region=True, ramm_enabled=True))
    elif axis == "templates":
        yield config.template_id, config
        for template_id in SINGLE_SLOT_TEMPLATES:
            yield template_id, replace(config, template_id=template_id)
    elif axis == "relations":
        yield "w/o distance", replace(config, relations=replace(
            config.relations, use_distance=False))
        yield "w/o directional", replace(config, relations=replace(
            config.relations, use_directional=False))
        yield "w/o topological", replace(config, relations=replace(
            config.relations, use_topological=False))
        yield "full", config
    else:
        raise ConfigInvalid(f"unknown ablation axis {axis!r}")


def _cmd_ablate(args) -> int:
    config = load_config(args.config)
    rows = []
    for name, variant in _ablation_variants(config, args.axis):
        out_dir = os.path.join(args.out, name.replace("/", "_").replace(" ", "_"))
        summary = run_batch(variant, out_dir)
        rows.append(_metrics_row(name, summary))
    _print_table(rows, csv=args.csv)
    return EXIT_OK


def _cmd_trace(args) -> int:
    with open(args.episode) as fh:
        records = [json.loads(line) for line in fh if line.strip()]
    for rec in records:
        verdicts = ",".join(rec.get("verdicts") or []) or "-"
        guidance = rec.get("guidance") or "-"
        locked = rec.get("target_locked") or "-"
        print(f"step {rec['step']:>4}  {rec['action']:<9} "
              f"pos=({rec['pos'][0]:7.2f},{rec['pos'][1]:7.2f}) "
              f"hdg={rec['heading']:>5.0f}  region={rec['region']:<12} "
              f"det={len(rec.get('detections', []))} verdicts={verdicts:<8} "
              f"lock={locked}  {guidance}")
    print(f"{len(records)} steps")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relnav",
                                     description="Relation-guided navigation engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-scenes", help="generate scene files for every seed")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_scenes)

    p = sub.add_parser("run", help="run a batch and write results")
    p.add_argument("--config", required=True)
    p.add_argument("--scenes", help="directory of pre-generated scene files; "
                                    "omitted scenes regenerate from their seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("eval", help="print metrics for a results directory")
    p.add_argument("--results", required=True)
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("ablate", help="run an ablation sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--axis", required=True, choices=["modules", "templates", "relations"])
    p.add_argument("--out", required=True)
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("trace", help="replay a trajectory file as text")
    p.add_argument("--episode", required=True)
    p.set_defaults(func=_cmd_trace)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigInvalid as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (RelnavError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
