"""
Command line entry point.

    coherentfl phy-validate    [--config FILE] [--seed N] [--out DIR] [--mutate-shrinkage F]
    coherentfl power-sweep     [--config FILE] [--seed N] [--out DIR]
    coherentfl train           [--config FILE] [--seed N] [--out DIR] [--scheme S] [--fill F]
                               [--lambda L] [--rounds T] [--snr-db DB]
    coherentfl compare-schemes (same flags as train)
    coherentfl scheme-sweep    (same flags as train; --lambda and --snr-db are replaced by the grid)
    coherentfl serve

Exit codes: 0 success, 1 failed checks or runtime failure, 2 configuration error.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

from coherentfl.config import HOST, PORT, configure_logging
from coherentfl.schemas.config import ExperimentConfig, load_config
from coherentfl.schemas.models import FillStrategy, Scheme
from coherentfl.services.experiments.experiment_service import (
    COMPARE_COLUMNS,
    SCHEME_SWEEP_COLUMNS,
    SUMMARY_COLUMNS,
    SWEEP_COLUMNS,
    TRACE_COLUMNS,
    ExperimentService,
)
from coherentfl.utils.errors import CheckFailure, CoherentFLError
from coherentfl.utils.output import write_csv, write_json

logger = logging.getLogger(__name__)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON experiment configuration")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--out", help="output directory")


def _add_training(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scheme", choices=[s.value for s in Scheme])
    parser.add_argument("--fill", choices=[f.value for f in FillStrategy])
    parser.add_argument("--lambda", dest="lambda_target", type=float, help="pilot overhead")
    parser.add_argument("--rounds", type=int)
    parser.add_argument("--snr-db", dest="snr_db", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coherentfl",
        description="Federated learning over downlinks with heterogeneous coherence times",
    )
    parser.add_argument("--log-level", default=None, help="logging level (default from env)")
    commands = parser.add_subparsers(dest="command", required=True)

    validate = commands.add_parser("phy-validate", help="estimator, pilot and power checks")
    _add_common(validate)
    validate.add_argument(
        "--mutate-shrinkage",
        dest="mutate_shrinkage",
        type=float,
        help="scale the MMSE coefficient (negative control)",
    )

    sweep = commands.add_parser("power-sweep", help="allocation and rates over a grid")
    _add_common(sweep)

    train = commands.add_parser("train", help="one federated run plus its bound check")
    _add_common(train)
    _add_training(train)

    compare = commands.add_parser("compare-schemes", help="accuracy versus communication cost")
    _add_common(compare)
    _add_training(compare)

    grid = commands.add_parser(
        "scheme-sweep", help="scheme comparison over the pilot overhead by SNR grid"
    )
    _add_common(grid)
    _add_training(grid)

    serve = commands.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default=HOST)
    serve.add_argument("--port", type=int, default=PORT)
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Configuration file plus command-line overrides."""
    overrides: Dict[str, object] = {
        "seed": args.seed,
        "output_dir": args.out,
        "scheme": getattr(args, "scheme", None),
        "fill_strategy": getattr(args, "fill", None),
        "frame.lambda_target": getattr(args, "lambda_target", None),
        "rounds": getattr(args, "rounds", None),
        "snr_db": getattr(args, "snr_db", None),
    }
    config = load_config(args.config, overrides)
    lambda_target = getattr(args, "lambda_target", None)
    if lambda_target is not None:
        config = ExperimentService.at_overhead(config, lambda_target)
    return config


def cmd_phy_validate(config: ExperimentConfig, mutate_shrinkage: Optional[float]) -> List[Path]:
    report = ExperimentService.phy_validate(config, mutate_shrinkage)
    body = report.summary()
    if mutate_shrinkage is not None:
        body["mutate_shrinkage"] = mutate_shrinkage
    path = write_json(
        Path(config.output_dir) / "phy_validate.json",
        body,
        config.config_hash(),
        config.canonical(),
    )
    if not report.passed:
        raise CheckFailure(
            f"{len(report.failures())} validation checks failed: {', '.join(report.failures())}",
            report.failures(),
        )
    return [path]


def cmd_power_sweep(config: ExperimentConfig) -> List[Path]:
    rows = ExperimentService.power_sweep(config)
    return [
        write_csv(
            Path(config.output_dir) / "power_sweep.csv", rows, SWEEP_COLUMNS, config.config_hash()
        )
    ]


def cmd_train(config: ExperimentConfig) -> List[Path]:
    outcome = ExperimentService.train(config)
    out, digest = Path(config.output_dir), config.config_hash()
    trace = write_csv(out / "trace.csv", outcome.rows, TRACE_COLUMNS, digest)
    analysis = write_json(
        out / "analysis.json",
        {"bound": outcome.bound.model_dump(mode="json") if outcome.bound else None},
        digest,
        config.canonical(),
    )
    return [trace, analysis]


def cmd_compare_schemes(config: ExperimentConfig) -> List[Path]:
    outcome = ExperimentService.compare_schemes(config)
    out, digest = Path(config.output_dir), config.config_hash()
    return [
        write_csv(out / "compare.csv", outcome.rows, COMPARE_COLUMNS, digest),
        write_csv(out / "compare_summary.csv", outcome.summary, SUMMARY_COLUMNS, digest),
    ]


def cmd_scheme_sweep(config: ExperimentConfig) -> List[Path]:
    rows = ExperimentService.scheme_sweep(config)
    return [
        write_csv(
            Path(config.output_dir) / "scheme_sweep.csv",
            rows,
            SCHEME_SWEEP_COLUMNS,
            config.config_hash(),
        )
    ]


def serve(host: str, port: int) -> None:
    import uvicorn

    uvicorn.run("coherentfl.main:app", host=host, port=port, log_level="info")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.log_level:
        configure_logging(args.log_level.upper())
    else:
        configure_logging()

    try:
        if args.command == "serve":
            serve(args.host, args.port)
            return 0
        config = resolve_config(args)
        if args.command == "phy-validate":
            paths = cmd_phy_validate(config, args.mutate_shrinkage)
        elif args.command == "power-sweep":
            paths = cmd_power_sweep(config)
        elif args.command == "train":
            paths = cmd_train(config)
        elif args.command == "scheme-sweep":
            paths = cmd_scheme_sweep(config)
        else:
            paths = cmd_compare_schemes(config)
    except CoherentFLError as e:
        logger.error(f"{args.command} failed: {e.detail}")
        return e.exit_code
    except Exception:
        logger.exception(f"Unexpected error in {args.command}")
        return 1

    for path in paths:
        logger.info(f"{args.command}: wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
