"""
Command-line interface: space, cost, search, eval, report and schemas.

Exit codes: 0 success, 1 runtime error, 2 usage or config error. Results go
to standard output, logs to standard error.
"""

import argparse
import json
import logging
import sys
from typing import Callable, Dict, List, Optional

from src.config import (
    OUTPUT_DOCUMENTS,
    BaselineComparisonDocument,
    ConfigDocumentError,
    CostBreakdownDocument,
    EvalRecordDocument,
    NasSettings,
    SearchReportDocument,
    load_model_config,
    load_search_config,
    load_space,
    output_schema,
)
from src.costmodel import MacsQuery, cost_report, render_table
from src.search import (
    build_dataset,
    compare_search_space,
    evaluate_named_baselines,
    render_search_report,
    run_gbdt_nas,
    run_random_search,
    train_for_search,
)
from src.searchspace import (
    DEFAULT_SPACE,
    ArchitectureParseError,
    enumerate_architectures,
    format_arch,
    parse_arch,
    sample_uniform,
    space_size,
)
from src.supernet import EvalLog, SupernetState, evaluate_arch, load_checkpoint, read_manifest, save_checkpoint
from src.utils.file_handler import FileHandler

from .manifest import RunManifest

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2
CHECKPOINT_DIR = "supernet"


class UsageError(ValueError):
    """Argument combinations argparse cannot express."""


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="Random seed (default: config value, else LIGHTSPEECH_SEED)")
    common.add_argument("--workers", type=int, default=None,
                        help="Parallel evaluation workers (default: LIGHTSPEECH_WORKERS)")
    common.add_argument("--log-level", default=None, choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help="Logging level (default: LIGHTSPEECH_LOG_LEVEL)")
    common.add_argument("--out", default=None, help="Output directory (default: LIGHTSPEECH_OUTPUT_DIR)")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(prog="lightspeech-nas",
                                     description="Architecture search and cost profiling for lightweight TTS models")
    sub = parser.add_subparsers(dest="command", required=True)

    space = sub.add_parser("space", parents=[common], help="Inspect the search space")
    space.add_argument("--space", help="Space JSON document (default: built-in 4+4 slot space)")
    mode = space.add_mutually_exclusive_group(required=True)
    mode.add_argument("--size", action="store_true", help="Print the number of architectures")
    mode.add_argument("--sample", type=int, metavar="N", help="Print N uniformly sampled architectures")
    mode.add_argument("--enumerate", type=int, nargs=2, metavar=("OFFSET", "LIMIT"),
                      help="Print one page of the lexicographic enumeration")

    cost = sub.add_parser("cost", parents=[common], help="Parameters, MACs and RTF of a model config")
    cost.add_argument("--model", required=True, help="Model config JSON (or a shipped config name)")
    cost.add_argument("--lengths", type=int, nargs=2, default=[128, 740], metavar=("L_IN", "L_OUT"))
    cost.add_argument("--profile", type=int, default=0, metavar="REPS",
                      help="Profile RTF with REPS timed runs (>= 3)")
    cost.add_argument("--json", action="store_true", help="Print JSON instead of the table")

    search = sub.add_parser("search", parents=[common], help="Run GBDT-guided or random search")
    search.add_argument("--config", required=True, help="Search config JSON")
    search.add_argument("--baseline", choices=["gbdt", "random"], default="gbdt")
    search.add_argument("--random-n", type=int, default=None,
                        help="Architectures for --baseline random (default: n_initial)")

    ev = sub.add_parser("eval", parents=[common], help="Evaluate one architecture on a trained supernet")
    ev.add_argument("--config", required=True, help="Search config JSON the checkpoint was trained with")
    ev.add_argument("--checkpoint", required=True, help="Checkpoint directory")
    ev.add_argument("--arch", required=True, help="Architecture in codec form enc:[...];dec:[...]")

    report = sub.add_parser("report", parents=[common], help="Compare the three named baseline models")
    report.add_argument("--lengths", type=int, nargs=2, default=[128, 740], metavar=("L_IN", "L_OUT"))
    report.add_argument("--profile", type=int, default=0, metavar="REPS")
    report.add_argument("--compare", metavar="CONFIG",
                        help="Also compare manual, random and searched genotypes under this search config")

    schemas = sub.add_parser("schemas", parents=[common], help="Write the JSON schema of every output document")
    schemas.add_argument("directory", help="Directory that receives <document>.schema.json")
    return parser


def _seed(args) -> int:
    return args.seed if args.seed is not None else NasSettings.get_seed()


def _workers(args) -> int:
    workers = args.workers if args.workers is not None else NasSettings.get_workers()
    if workers < 1:
        raise UsageError(f"--workers must be >= 1, got {workers}")
    return workers


def _check_profile(reps: int) -> None:
    if reps and reps < NasSettings.MIN_PROFILE_REPETITIONS:
        raise UsageError(f"--profile needs at least {NasSettings.MIN_PROFILE_REPETITIONS} repetitions")


def cmd_space(args, files: FileHandler, manifest: RunManifest) -> int:
    space = load_space(args.space) if args.space else DEFAULT_SPACE
    manifest.config_path = args.space
    if args.size:
        print(space_size(space))
    elif args.sample is not None:
        if args.sample < 1:
            raise UsageError(f"--sample needs N >= 1, got {args.sample}")
        for arch in sample_uniform(space, _seed(args), args.sample):
            print(format_arch(arch))
    else:
        offset, limit = args.enumerate
        try:
            page = enumerate_architectures(space, offset, limit)
        except ValueError as e:
            raise UsageError(str(e)) from e
        for arch in page:
            print(format_arch(arch))
    return EXIT_OK


def cmd_cost(args, files: FileHandler, manifest: RunManifest) -> int:
    _check_profile(args.profile)
    config = load_model_config(args.model)
    manifest.config_path = args.model
    try:
        query = MacsQuery(input_length=args.lengths[0], output_length=args.lengths[1])
    except ValueError as e:
        raise UsageError(str(e)) from e

    breakdown = cost_report(config, query, repetitions=args.profile, seed=_seed(args))
    data = breakdown.to_dict()
    CostBreakdownDocument.model_validate(data)
    manifest.outputs["cost"] = str(files.write_json(f"cost_{config.name}.json", data))
    print(json.dumps(data, indent=2, sort_keys=True) if args.json else render_table(breakdown))
    return EXIT_OK


def _trained_state(config, dataset, files: FileHandler) -> SupernetState:
    """
    Reuse the checkpoint in the output directory when it was trained under the
    same oracle fingerprint, else train and save a fresh one.
    """
    directory = files.output_dir / CHECKPOINT_DIR
    fingerprint = config.fingerprint()
    if (directory / "supernet.json").exists():
        if read_manifest(directory).get("config_fingerprint") == fingerprint:
            logger.info(f"Reusing trained supernet from {directory}")
            return load_checkpoint(directory)
        logger.warning(f"Checkpoint in {directory} was trained under another configuration; retraining")
    state = train_for_search(config, dataset)
    save_checkpoint(state, directory, fingerprint=fingerprint)
    return state


def cmd_search(args, files: FileHandler, manifest: RunManifest) -> int:
    config = load_search_config(args.config, seed=args.seed)
    manifest.config_path = args.config
    manifest.seed = config.seed
    workers = _workers(args)
    files.ensure_output_dir()

    log = EvalLog(files.output_dir / f"evals_{args.baseline}.jsonl", config.space,
                  fingerprint=config.fingerprint())
    log.load()  # fail fast on a corrupted log

    dataset = build_dataset(config)
    state = _trained_state(config, dataset, files)
    manifest.outputs["checkpoint"] = str(files.output_dir / CHECKPOINT_DIR)

    if args.baseline == "random":
        n = args.random_n if args.random_n is not None else config.n_initial
        report = run_random_search(config, dataset, n, state=state, eval_log=log, workers=workers)
    else:
        report = run_gbdt_nas(config, dataset, state=state, eval_log=log, workers=workers)

    data = report.to_dict()
    SearchReportDocument.model_validate(data)
    manifest.outputs["report"] = str(files.write_json(f"report_{args.baseline}.json", data))
    manifest.outputs["eval_log"] = str(log.path)
    for line in render_search_report(report).splitlines():
        logger.info(line)
    print(format_arch(report.best_arch))
    return EXIT_OK


def cmd_eval(args, files: FileHandler, manifest: RunManifest) -> int:
    config = load_search_config(args.config, seed=args.seed)
    manifest.config_path = args.config
    manifest.seed = config.seed
    state = load_checkpoint(args.checkpoint)
    if read_manifest(args.checkpoint).get("config_fingerprint") not in (None, config.fingerprint()):
        logger.warning(f"Checkpoint {args.checkpoint} was trained under a different config than {args.config}")
    arch = parse_arch(args.arch, state.space)
    dataset = build_dataset(config)
    record = evaluate_arch(state, arch, dataset.dev)
    data = record.to_dict()
    EvalRecordDocument.model_validate(data)
    manifest.outputs["eval"] = str(files.write_json("eval.json", data))
    print(json.dumps(data, sort_keys=True))
    return EXIT_OK


def cmd_report(args, files: FileHandler, manifest: RunManifest) -> int:
    _check_profile(args.profile)
    query = MacsQuery(input_length=args.lengths[0], output_length=args.lengths[1])
    comparison = evaluate_named_baselines(query, repetitions=args.profile, seed=_seed(args))
    data = comparison.to_dict()
    BaselineComparisonDocument.model_validate(data)
    manifest.outputs["baselines"] = str(files.write_json("baselines.json", data))
    print(comparison.render())

    if args.compare:
        config = load_search_config(args.compare, seed=args.seed)
        manifest.config_path = args.compare
        dataset = build_dataset(config)
        rows = compare_search_space(config, dataset, state=_trained_state(config, dataset, files),
                                    workers=_workers(args))
        manifest.outputs["space_comparison"] = str(files.write_json("space_comparison.json", rows))
        print()
        for row in rows:
            print(f"{row['name']:<24}{row['val_loss']:>12.6f}  {row['arch'] or ''}")
    return EXIT_OK


def cmd_schemas(args, files: FileHandler, manifest: RunManifest) -> int:
    target = FileHandler(args.directory)
    for name in sorted(OUTPUT_DOCUMENTS):
        manifest.outputs[name] = str(target.write_json(f"{name}.schema.json", output_schema(name)))
    return EXIT_OK


COMMANDS: Dict[str, Callable] = {
    "space": cmd_space,
    "cost": cmd_cost,
    "search": cmd_search,
    "eval": cmd_eval,
    "report": cmd_report,
    "schemas": cmd_schemas,
}


def configure_logging(level: Optional[str]) -> None:
    logging.basicConfig(
        level=getattr(logging, level) if level else NasSettings.get_log_level(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one command and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE

    try:
        NasSettings.validate()
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    configure_logging(args.log_level)

    files = FileHandler(args.out or NasSettings.OUTPUT_DIR)
    manifest = RunManifest(command=args.command, seed=_seed(args))
    try:
        code = COMMANDS[args.command](args, files, manifest)
    except (UsageError, ConfigDocumentError, ArchitectureParseError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        code = EXIT_USAGE
    except Exception as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        code = EXIT_RUNTIME

    try:
        manifest.finish(files, code)
    except OSError as e:
        logger.error(f"Could not write run manifest: {e}")
        code = code or EXIT_RUNTIME
    return code


if __name__ == "__main__":
    sys.exit(main())
