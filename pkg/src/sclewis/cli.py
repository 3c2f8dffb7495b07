"""Command-line front end.

    sclewis train   [--config PATH] [--out DIR] [--seed N] [--epsilon F] [--rounds N]
    sclewis sweep   [--config PATH] [--out DIR] [--seed N] [--rounds N] [--jobs N]
    sclewis classic [--config PATH] [--out DIR] [--seed N] [--n N] [--rounds N]
    sclewis verify  [--config PATH] [--policies PATH] [--out DIR] [--epsilon F]

Exit codes: 0 success, 1 lemma violation (verify), 2 bad config, 3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .experiments import (
    SweepConfig,
    curve_to_csv,
    lemma_reports,
    run_classic_game,
    run_epsilon_sweep,
    run_learning_curve,
)
from .game import RNG_ALGORITHM, ConfigError, GameConfig, uniform_disjoint_config
from .infotheory import joint_from_policies, rate_conditions, srsa
from .policy import (
    TrainParams,
    canonical_policies,
    check_frozen_shapes,
    policies_from_json,
    policies_to_dict,
)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def _dump_json(doc: Any) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def load_document(path: str | None) -> dict[str, Any]:
    if path is None:
        return {}
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    # a bare GameConfig document is accepted as {"game": ...}
    if "n_types" in doc:
        return {"game": doc}
    unknown = set(doc) - {"game", "train", "sweep", "classic"}
    if unknown:
        raise ConfigError(f"{path}: unknown sections: {', '.join(sorted(unknown))}")
    return doc


def game_from_document(doc: dict[str, Any], epsilon: float | None) -> GameConfig:
    game = doc.get("game")
    if game is None:
        config = uniform_disjoint_config(3, 3, 0.0)
    elif isinstance(game, dict) and "n_types" not in game:
        # factory shorthand {"l": .., "m": .., "epsilon": ..}
        unknown = set(game) - {"l", "m", "epsilon"}
        if unknown:
            raise ConfigError(f"unknown game fields: {', '.join(sorted(unknown))}")
        config = uniform_disjoint_config(int(game.get("l", 3)), int(game.get("m", 3)),
                                         float(game.get("epsilon", 0.0)))
    else:
        config = GameConfig.from_dict(game)
    if epsilon is not None:
        config = config.with_epsilon(epsilon)
    return config


def params_from_document(doc: dict[str, Any], seed: int | None, rounds: int | None) -> TrainParams:
    params = TrainParams.from_dict(doc.get("train", {}))
    changes: dict[str, Any] = {}
    if seed is not None:
        changes["seed"] = seed
    if rounds is not None:
        changes["rounds"] = rounds
    return params.replace(**changes) if changes else params


class _Writer:
    def __init__(self, out_dir: Path) -> None:
        self.out_dir = out_dir
        self.files: list[str] = []

    def write(self, name: str, text: str) -> None:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        (self.out_dir / name).write_text(text)
        self.files.append(name)

    def manifest(self, subcommand: str, **fields: Any) -> None:
        doc = {
            "tool": "sclewis",
            "version": __version__,
            "subcommand": subcommand,
            "rng": RNG_ALGORITHM,
            "files": sorted(self.files),
            **fields,
        }
        self.write("manifest.json", _dump_json(doc))


def _write_curve(writer: _Writer, curve, fmt: str) -> None:
    if fmt in ("csv", "both"):
        writer.write("curve.csv", curve_to_csv(curve))
    if fmt in ("json", "both"):
        writer.write("curve.json", _dump_json(
            [{"round": r, "windowed_payoff": v} for r, v in curve]))


def cmd_train(args: argparse.Namespace, writer: _Writer) -> int:
    doc = load_document(args.config)
    config = game_from_document(doc, args.epsilon)
    params = params_from_document(doc, args.seed, args.rounds)
    run = run_learning_curve(config, params)
    _write_curve(writer, run.result.curve, args.format)
    writer.write("policies.json", _dump_json(
        policies_to_dict(run.result.sender_map, run.result.receiver_map)))
    writer.write("lemmas.json", _dump_json({
        "exact_srsa": run.exact_srsa,
        "final_srsa_estimate": run.result.final_srsa_estimate,
        "reports": [r.to_dict() for r in run.reports],
    }))
    writer.manifest("train", config=config.to_dict(), train_params=params.to_dict(),
                    seed=params.seed)
    print(f"final windowed SRSA {run.result.final_srsa_estimate:.4f}, "
          f"exact SRSA of frozen policies {run.exact_srsa:.4f}", file=sys.stderr)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, writer: _Writer) -> int:
    doc = load_document(args.config)
    sweep = SweepConfig.from_dict(doc.get("sweep", {}))
    if "train" in doc:
        sweep = SweepConfig.from_dict({**sweep.to_dict(), "train_params": doc["train"]})
    changes: dict[str, Any] = {}
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.rounds is not None:
        changes["train_params"] = sweep.train_params.replace(rounds=args.rounds).to_dict()
    if changes:
        sweep = SweepConfig.from_dict({**sweep.to_dict(), **changes})
    result = run_epsilon_sweep(sweep, jobs=args.jobs)
    if args.format in ("csv", "both"):
        writer.write("sweep.csv", result.to_csv())
    if args.format in ("json", "both"):
        writer.write("sweep.json", result.to_json() + "\n")
    writer.manifest("sweep", sweep=sweep.to_dict(), seed=sweep.master_seed)
    return EXIT_OK


def cmd_classic(args: argparse.Namespace, writer: _Writer) -> int:
    doc = load_document(args.config)
    n = args.n if args.n is not None else int(doc.get("classic", {}).get("n", 3))
    params = params_from_document(doc, args.seed, args.rounds)
    run = run_classic_game(n, params)
    _write_curve(writer, run.result.curve, args.format)
    writer.write("classic.json", _dump_json(run.to_dict()))
    writer.manifest("classic", n=n, train_params=params.to_dict(), seed=params.seed)
    print(f"classic game n={n}: {run.classification} (exact SRSA {run.exact_srsa:.4f})",
          file=sys.stderr)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, writer: _Writer) -> int:
    doc = load_document(args.config)
    config = game_from_document(doc, args.epsilon)
    if args.policies is None:
        sender, receiver = canonical_policies(config)
        source = "canonical"
    else:
        sender, receiver = policies_from_json(Path(args.policies).read_text())
        check_frozen_shapes(config, sender, receiver)
        source = str(args.policies)
    reports = lemma_reports(config, sender, receiver)
    joint = joint_from_policies(config, sender, receiver)
    writer.write("lemmas.json", _dump_json({
        "policies": {"source": source, **policies_to_dict(sender, receiver)},
        "srsa": srsa(joint),
        "rate_conditions": rate_conditions(config).to_dict(),
        "reports": [r.to_dict() for r in reports],
    }))
    writer.manifest("verify", config=config.to_dict(), policies=source)
    failed = [r.name for r in reports if not r.passed]
    for r in reports:
        status = "ok" if r.satisfied else ("n/a" if not r.applicable else "VIOLATED")
        print(f"{r.name}: lhs={r.lhs:.6g} rhs={r.rhs:.6g} {status}", file=sys.stderr)
    return EXIT_VIOLATION if failed else EXIT_OK


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"{text} is not an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text} must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sclewis", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config document")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--seed", type=_u64)
        p.add_argument("--format", choices=("csv", "json", "both"), default="csv")

    p = sub.add_parser("train", help="train on one knowledge-base game")
    common(p)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--rounds", type=_positive)

    p = sub.add_parser("sweep", help="sweep the knowledge-channel error probability")
    common(p)
    p.add_argument("--rounds", type=_positive)
    p.add_argument("--jobs", type=_positive, default=1)

    p = sub.add_parser("classic", help="train the classic Lewis game")
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--epsilon", type=float, help="accepted for symmetry; unused with L = 1")
    p.add_argument("--rounds", type=_positive)

    p = sub.add_parser("verify", help="check the lemmas for a config and policy pair")
    common(p)
    p.add_argument("--policies", help="frozen policy JSON (default: canonical pair)")
    p.add_argument("--epsilon", type=float)
    return parser


COMMANDS = {"train": cmd_train, "sweep": cmd_sweep, "classic": cmd_classic, "verify": cmd_verify}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    writer = _Writer(Path(args.out))
    try:
        return COMMANDS[args.subcommand](args, writer)
    except OSError as exc:
        print(f"sclewis: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ValueError, TypeError, KeyError) as exc:
        print(f"sclewis: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
