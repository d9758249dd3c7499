"""Command-line surface: run suites and sweeps, generate affordance
datasets, and plot episode traces.

Exit codes are a stable contract: 0 success, 1 usage error, 2 input or
schema error, 3 backend/transport error.  Remote credentials come from the
environment only (see ``hiernav.remote.DEFAULT_TOKEN_ENV``), never flags.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from .affordance import generate_samples, load_annotated_frames, write_samples
from .errors import BackendError, HiernavError, InputError, PhraseError
from .evaluation import (
    SWEEP_AXES,
    BackendSelection,
    EpisodeConfig,
    load_suite,
    run_suite,
    sweep,
)
from .plotting import plot_trace
from .remote import RemoteEndpointConfig
from .seeding import stable_hash

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_BACKEND = 3


@dataclass(frozen=True)
class RunConfig:
    """A fully resolved `run` invocation."""

    suite_path: Path
    output_dir: Path
    selection: BackendSelection
    episode: EpisodeConfig
    sweep_axis: str | None = None
    sweep_values: tuple | None = None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="hiernav", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a benchmark suite or a sweep")
    run.add_argument("--suite", required=True, help="suite file path")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--reasoning", choices=["oracle", "remote"], default="oracle")
    run.add_argument("--pointing", choices=["oracle", "noisy", "remote"], default="oracle")
    run.add_argument("--sigma", type=float, default=0.0, help="pixel jitter (noisy pointing)")
    run.add_argument("--p-fp", type=float, default=0.0, help="false-positive rate (noisy)")
    run.add_argument("--p-fn", type=float, default=0.0, help="false-negative rate (noisy)")
    run.add_argument("--annotation-mode", default="full",
                     choices=["full", "no_room_level", "none", "no_map"])
    run.add_argument("--n-headings", type=int, default=12)
    run.add_argument("--max-range", type=float, default=10.0)
    run.add_argument("--continue-threshold", type=int, default=3, metavar="K")
    run.add_argument("--step-budget", type=int, default=500)
    run.add_argument("--rollouts", type=int, default=None,
                     help="rollouts per task (default: suite setting)")
    run.add_argument("--seed", type=int, default=0, help="master seed")
    run.add_argument("--sweep", choices=list(SWEEP_AXES), default=None)
    run.add_argument("--values", default=None,
                     help="comma-separated sweep values, e.g. 0,1,2,4,8")
    run.add_argument("--endpoint", default=None, help="remote chat endpoint URL")
    run.add_argument("--model", default=None, help="remote model name")
    run.add_argument("--timeout", type=float, default=10.0, help="remote timeout (s)")
    run.add_argument("--retries", type=int, default=2, help="remote reply retries")

    gen = sub.add_parser("gen-dataset", help="generate an affordance dataset")
    gen.add_argument("--annotations", required=True, help="COCO-style annotation file")
    gen.add_argument("--free-regions", default=None, help="free-space sidecar file")
    gen.add_argument("--out", required=True, help="output JSONL path")
    gen.add_argument("--seed", type=int, default=0)

    plot = sub.add_parser("plot", help="plot an episode trace")
    plot.add_argument("--trace", required=True, help="trace JSONL path")
    plot.add_argument("--out", required=True, help="output image path (SVG)")
    plot.add_argument("--scene", default=None, help="scene file override")
    return parser


def _parse_sweep_values(axis: str, raw: str):
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise ValueError("empty sweep value list")
    if axis == "annotation_mode":
        return tuple(parts)
    if axis == "pointing_noise":
        return tuple(float(p) for p in parts)
    return tuple(int(p) for p in parts)


def _run_config(args) -> RunConfig:
    endpoint = None
    if args.reasoning == "remote" or args.pointing == "remote":
        if not args.endpoint or not args.model:
            raise ValueError("remote backends need --endpoint and --model")
        endpoint = RemoteEndpointConfig(
            url=args.endpoint, model=args.model,
            timeout_s=args.timeout, retries=args.retries,
        )
    for name, value, low in (
        ("--sigma", args.sigma, 0.0),
        ("--p-fp", args.p_fp, 0.0),
        ("--p-fn", args.p_fn, 0.0),
        ("--n-headings", args.n_headings, 1),
        ("--continue-threshold", args.continue_threshold, 1),
        ("--step-budget", args.step_budget, 1),
    ):
        if value < low:
            raise ValueError(f"{name} must be >= {low}")
    if args.p_fp > 1.0 or args.p_fn > 1.0:
        raise ValueError("--p-fp and --p-fn are probabilities (<= 1)")
    selection = BackendSelection(
        reasoning=args.reasoning,
        pointing=args.pointing,
        sigma=args.sigma,
        p_fp=args.p_fp,
        p_fn=args.p_fn,
        reasoning_endpoint=endpoint if args.reasoning == "remote" else None,
        pointing_endpoint=endpoint if args.pointing == "remote" else None,
    )
    sweep_values = None
    if args.sweep:
        if not args.values:
            raise ValueError("--sweep needs --values")
        sweep_values = _parse_sweep_values(args.sweep, args.values)
    return RunConfig(
        suite_path=Path(args.suite),
        output_dir=Path(args.out),
        selection=selection,
        episode=EpisodeConfig(
            annotation_mode=args.annotation_mode,
            n_headings=args.n_headings,
            max_range=args.max_range,
            continue_threshold=args.continue_threshold,
            step_budget=args.step_budget,
            rollouts=args.rollouts if args.rollouts is not None else 10,
            master_seed=args.seed,
        ),
        sweep_axis=args.sweep,
        sweep_values=sweep_values,
    )


def _preflight_remote(selection: BackendSelection) -> None:
    """Reachability check before a long run; malformed replies are fine."""
    from .errors import MalformedReplyError
    from .remote import chat

    seen = []
    for config in (selection.reasoning_endpoint, selection.pointing_endpoint):
        if config is None or config.url in seen:
            continue
        seen.append(config.url)
        try:
            chat(config, [{"role": "user", "content": "ping"}])
        except MalformedReplyError:
            pass  # endpoint is alive; reply shape does not matter here


def cmd_run(args) -> int:
    config = _run_config(args)
    _preflight_remote(config.selection)
    suite = load_suite(config.suite_path)
    episode = config.episode
    if args.rollouts is None:
        episode = dataclasses.replace(episode, rollouts=suite.default_rollouts)
    config.output_dir.mkdir(parents=True, exist_ok=True)
    if config.sweep_axis:
        table = sweep(
            suite, config.sweep_axis, list(config.sweep_values),
            config.selection, episode, output_dir=config.output_dir,
        )
        (config.output_dir / "sweep.json").write_text(
            json.dumps(table.to_dict(), sort_keys=True, indent=2) + "\n"
        )
        (config.output_dir / "sweep.txt").write_text(table.to_text())
        print(table.to_text(), end="")
    else:
        result = run_suite(suite, config.selection, episode, output_dir=config.output_dir)
        (config.output_dir / "report.json").write_text(
            json.dumps(result.to_dict(), sort_keys=True, indent=2) + "\n"
        )
        (config.output_dir / "report.txt").write_text(result.to_text())
        print(result.to_text(), end="")
    return EXIT_OK


def cmd_gen_dataset(args) -> int:
    frames, depths = load_annotated_frames(args.annotations, args.free_regions)
    samples = []
    for frame in frames:
        samples.extend(
            generate_samples(
                frame,
                seed=stable_hash(args.seed, frame.id),
                depths=depths.get(frame.id),
            )
        )
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    write_samples(samples, out)
    by_kind = {"object": 0, "spatial": 0}
    for sample in samples:
        by_kind[sample.kind] += 1
    print(
        f"{len(samples)} samples from {len(frames)} frames "
        f"(object: {by_kind['object']}, spatial: {by_kind['spatial']}) -> {out}"
    )
    return EXIT_OK


def cmd_plot(args) -> int:
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    plot_trace(args.trace, out, scene_path=args.scene)
    print(f"plot written to {out}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {"run": cmd_run, "gen-dataset": cmd_gen_dataset, "plot": cmd_plot}
    try:
        return handlers[args.command](args)
    except ValueError as exc:
        print(f"hiernav: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, PhraseError) as exc:
        print(f"hiernav: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BackendError as exc:
        print(f"hiernav: backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except HiernavError as exc:
        print(f"hiernav: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
