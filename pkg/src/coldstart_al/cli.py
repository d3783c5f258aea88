"""Command-line entry points.

    coldstart-al run   --config cfg.json [--variants NN-EOE-2,random] [--out dir] [--seed s]
    coldstart-al synth --spec spec.json --out dir
    coldstart-al serve --config cfg.json --port 8000 [--sessions-dir dir]
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .dataset import SyntheticSpec, generate_synthetic, save_dataset, save_labels
from .harness import ExperimentConfig, emit_results, run_experiment


def _cmd_run(args) -> int:
    config = ExperimentConfig.from_json(args.config)
    variants = args.variants.split(",") if args.variants else None
    result = run_experiment(config, variants=variants, root_seed=args.seed)
    out_dir = args.out or config.output
    written = emit_results(result, out_dir)
    for path in written:
        print(f"wrote {path}")
    for name, vr in result.variants.items():
        print(f"{name}: final recall {vr.mean_curve.values[-1]:.4f} "
              f"after {vr.mean_curve.iterations[-1]} iterations")
    if not result.ok:
        for name, messages in result.errors.items():
            for msg in messages:
                print(f"ERROR {name}: {msg}", file=sys.stderr)
        return 1
    return 0


def _cmd_synth(args) -> int:
    with open(args.spec, encoding="utf-8") as fh:
        spec = SyntheticSpec.from_dict(json.load(fh))
    dataset, truth = generate_synthetic(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(dataset, out / "dataset.csv")
    save_labels(truth, dataset, out / "labels.csv")
    counts = {c: int((truth.labels == c).sum()) for c in range(1, spec.num_classes + 1)}
    print(f"wrote {out / 'dataset.csv'} and {out / 'labels.csv'} "
          f"(n={dataset.n}, dims={dataset.dims}, class counts {counts})")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import SessionManager, create_app

    default_config = None
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            default_config = json.load(fh)
    manager = SessionManager(sessions_dir=args.sessions_dir, default_config=default_config)
    app = create_app(manager)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coldstart-al")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run active-learning experiments from a config")
    run.add_argument("--config", required=True)
    run.add_argument("--variants", help="comma-separated variant names, e.g. NN-EOE-2,random")
    run.add_argument("--out", help="output directory (default: config's output field)")
    run.add_argument("--seed", type=int, help="root seed (default: strategy seed)")
    run.set_defaults(func=_cmd_run)

    synth = sub.add_parser("synth", help="generate a synthetic dataset + ground truth")
    synth.add_argument("--spec", required=True)
    synth.add_argument("--out", required=True)
    synth.set_defaults(func=_cmd_synth)

    serve = sub.add_parser("serve", help="start the annotation service")
    serve.add_argument("--config", help="default experiment config for new sessions")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--sessions-dir", default="sessions")
    serve.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
