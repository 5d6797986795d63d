"""Command-line interface: ``dualkg train | eval | export``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical divergence.
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .errors import DivergenceDetected, DualKGError
from .evaluate import DEFAULT_KS, TYPING_MODES, evaluate_completion, evaluate_typing
from .synthetic import split_triples
from .train import TrainConfig, fit

log = logging.getLogger("dualkg")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3
TASKS = {"completion-inst": "inst", "completion-onto": "onto", "typing": "cross"}
SPLIT_NAMES = ("train", "valid", "test")

# flag dest -> TrainConfig field
TRAIN_FIELDS = {
    "dim": "dim",
    "lr": "lr",
    "margin_inst": "margin_inst",
    "margin_onto": "margin_onto",
    "margin_cross": "margin_cross",
    "epochs": "epochs",
    "batch": "batch_size",
    "neg_ratio": "neg_ratio",
    "seed": "seed",
    "variant": "variant",
    "space_inst": "inst_space",
    "space_onto": "onto_space",
    "checkpoint_every": "checkpoint_every",
    "shell_norm": "shell_norm",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _ks(text):
    try:
        ks = tuple(int(k) for k in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not ks or min(ks) < 1:
        raise argparse.ArgumentTypeError("every k must be >= 1")
    return ks


def _fractions(text):
    try:
        parts = tuple(float(x) for x in text.split("/"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a/b/c fractions, got {text!r}") from None
    if len(parts) != 3 or min(parts) < 0 or sum(parts) <= 0 or parts[0] <= 0:
        raise argparse.ArgumentTypeError(f"expected three non-negative fractions a/b/c with a > 0, got {text!r}")
    return parts


def _bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {text!r}")


def build_parser():
    parser = _Parser(prog="dualkg", description="Sphere/Poincare-ball embeddings of two-view knowledge graphs.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    parser.subcommands = sub.choices

    tr = sub.add_parser("train", help="train embeddings and write a checkpoint")
    tr.add_argument("--config", help="key = value file mirroring these flags")
    tr.add_argument("--inst", help="entity-entity triple file")
    tr.add_argument("--onto", help="concept-concept triple file")
    tr.add_argument("--cross", help="entity-concept triple file")
    tr.add_argument("--dim", type=int, default=TrainConfig.dim)
    tr.add_argument("--lr", type=float, default=TrainConfig.lr)
    tr.add_argument("--margin-inst", type=float, default=TrainConfig.margin_inst)
    tr.add_argument("--margin-onto", type=float, default=TrainConfig.margin_onto)
    tr.add_argument("--margin-cross", type=float, default=None, help="defaults to --margin-onto")
    tr.add_argument("--epochs", type=int, default=None, help=f"default {TrainConfig.epochs}")
    tr.add_argument("--batch", type=int, default=TrainConfig.batch_size)
    tr.add_argument("--neg-ratio", type=int, default=TrainConfig.neg_ratio)
    tr.add_argument("--seed", type=int, default=TrainConfig.seed)
    tr.add_argument("--variant", choices=("so-fc", "so-lc"), default=TrainConfig.variant)
    tr.add_argument("--space-inst", choices=("sphere", "ball", "flat"), default=TrainConfig.inst_space)
    tr.add_argument("--space-onto", choices=("sphere", "ball", "flat"), default=TrainConfig.onto_space)
    tr.add_argument("--shell-norm", type=float, default=None, help="fix the sphere radius instead of sampling it")
    tr.add_argument("--out", help="checkpoint path")
    tr.add_argument("--checkpoint-every", type=int, default=TrainConfig.checkpoint_every)
    tr.add_argument("--resume", help="continue from this checkpoint (its graph and settings are reused)")
    tr.add_argument(
        "--split",
        type=_fractions,
        help="randomly split every triple file into train/valid/test by a/b/c (synthetic data); "
        "the parts are written next to --out",
    )

    ev = sub.add_parser("eval", help="rank test triples with a trained checkpoint")
    ev.add_argument("--config", help="key = value file mirroring these flags")
    ev.add_argument("--checkpoint")
    ev.add_argument("--task", choices=tuple(TASKS))
    ev.add_argument("--test", help="labeled test triples (default: the training triples)")
    mode = ev.add_mutually_exclusive_group()
    mode.add_argument("--filtered", dest="filtered", action="store_true", default=True)
    mode.add_argument("--raw", dest="filtered", action="store_false")
    ev.add_argument("--k", type=_ks, default=DEFAULT_KS, help="comma-separated cutoffs, e.g. 1,3,10")
    ev.add_argument("--typing-mode", choices=TYPING_MODES, default="relation")
    ev.add_argument("--table", help="tabular metrics file (default: <checkpoint>.<task>.tsv)")

    ex = sub.add_parser("export", help="write embeddings as a tab-separated table")
    ex.add_argument("--config", help="key = value file mirroring these flags")
    ex.add_argument("--checkpoint")
    ex.add_argument("--out")
    return parser


# ---------------------------------------------------------------------------
# config files


def read_config(path):
    """Parse ``key = value`` lines; ``#`` starts a comment. Keys may use dashes."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _apply_config(subparser, argv, path):
    values = read_config(path)
    known = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, value in values.items():
        action = known.get(key)
        if action is None or key in ("help", "config"):
            raise UsageError(f"{path}: unknown key {key!r}")
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            defaults[key] = _bool(value)
        elif action.choices is not None and value not in action.choices:
            raise UsageError(f"{path}: {key} must be one of {sorted(action.choices)}")
        else:
            defaults[key] = value
    subparser.set_defaults(**defaults)
    return subparser.parse_args(argv)


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        # re-parse the subcommand with file values as defaults so flags win
        sub = parser.subcommands[args.command]
        rest = argv[argv.index(args.command) + 1 :]
        command, verbose = args.command, args.verbose
        args = _apply_config(sub, rest, args.config)
        args.command, args.verbose = command, verbose
    return args


def _require(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n, None) in (None, "")]
    if missing:
        raise UsageError(f"missing required option(s): {', '.join(missing)}")


# ---------------------------------------------------------------------------
# commands


def _print_metrics(prefix, metrics, out=None):
    out = sys.stdout if out is None else out
    for key, value in metrics.items():
        out.write(f"{prefix}{key}\t{value:.6g}\n" if isinstance(value, float) else f"{prefix}{key}\t{value}\n")


def _split_files(args):
    fractions = args.split
    out_dir = Path(args.out).with_name(Path(args.out).name + ".splits")
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    for view, src in (("inst", args.inst), ("onto", args.onto), ("cross", args.cross)):
        if src is None:
            continue
        parts = split_triples(io.read_triples(src), fractions, args.seed)
        for name, part in zip(SPLIT_NAMES, parts):
            target = out_dir / f"{view}.{name}.tsv"
            io.write_triples(target, part)
            if name == "train":
                paths[view] = target
    log.info("wrote splits to %s", out_dir)
    return paths.get("inst"), paths.get("onto"), paths.get("cross")


def cmd_train(args):
    _require(args, "out")
    if args.resume:
        ckpt = io.load_checkpoint(args.resume)
        kg = ckpt.kg
        settings = ckpt.config.to_dict()
        if args.epochs is not None:
            settings["epochs"] = args.epochs
        config = TrainConfig.from_dict(settings)
        resume = ckpt.to_state()
    else:
        _require(args, "inst", "onto")
        inst, onto, cross = args.inst, args.onto, args.cross
        if args.split:
            inst, onto, cross = _split_files(args)
        kg = io.load_kg(inst, onto, cross)
        if args.epochs is None:
            args.epochs = TrainConfig.epochs
        try:
            config = TrainConfig(**{field: getattr(args, dest) for dest, field in TRAIN_FIELDS.items()})
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        resume = None
    log.info(
        "graph: %d entities (%d bridge), %d concepts, %d/%d/%d triples",
        kg.n_entities, len(kg.bridge_ids), kg.n_concepts,
        len(kg.inst_triples), len(kg.onto_triples), len(kg.cross_triples),
    )

    def save(state):
        io.save_checkpoint(io.Checkpoint.from_state(config, kg, state), args.out)
        log.info("checkpoint at epoch %d -> %s", state.epoch, args.out)

    result = fit(kg, config, resume=resume, checkpoint_callback=save)
    final = io.Checkpoint(config, result.params, kg, result.rng_state, config.epochs, result.losses)
    io.save_checkpoint(final, args.out)
    if result.losses:
        _print_metrics("loss.", result.losses[-1])
    print(f"checkpoint\t{args.out}")
    return EXIT_OK


def _encode_test(kg, view, labeled):
    """Map labeled test triples to ids, dropping rows with unseen labels."""
    heads = kg.entities if view in ("inst", "cross") else kg.concepts
    tails = kg.entities if view == "inst" else kg.concepts
    hv = {x: i for i, x in enumerate(heads)}
    tv = {x: i for i, x in enumerate(tails)}
    rv = {x: i for i, x in enumerate(kg.relations(view))}
    rows = [(hv[h], rv[r], tv[t]) for h, r, t in labeled if h in hv and r in rv and t in tv]
    return np.array(rows, dtype=np.int64).reshape(-1, 3), len(labeled) - len(rows)


def _write_table(path, task, rows, ks):
    if task == "typing":
        cols = ["MRR", "Acc."] + [f"Hits@{k}" for k in ks if k != 1]
        keys = ["mrr", "accuracy"] + [f"hits@{k}" for k in ks if k != 1]
    else:
        cols = ["MRR"] + [f"Hits@{k}" for k in ks]
        keys = ["mrr"] + [f"hits@{k}" for k in ks]
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(["task", "ranking"] + cols + ["queries"]) + "\n")
        for mode, metrics in rows:
            values = [f"{metrics[k]:.4f}" for k in keys]
            fh.write("\t".join([task, mode] + values + [str(metrics["count"])]) + "\n")


def cmd_eval(args):
    _require(args, "checkpoint", "task")
    ckpt = io.load_checkpoint(args.checkpoint)
    kg, params = ckpt.kg, ckpt.params
    view = TASKS[args.task]
    test, unseen = None, 0
    if args.test:
        test, unseen = _encode_test(kg, view, io.read_triples(args.test))
        if unseen:
            log.warning("skipped %d test triples with labels unseen in training", unseen)
    modes = (True, False) if args.filtered else (False, True)
    rows = []
    for filtered in modes:
        if view == "cross":
            metrics = evaluate_typing(kg, params, test, filtered, args.k, mode=args.typing_mode)
        else:
            metrics = evaluate_completion(kg, params, view, test, filtered, args.k)
        name = "filtered" if filtered else "raw"
        rows.append((name, metrics))
        _print_metrics(f"{name}.", {k: v for k, v in metrics.items() if k not in ("count", "skipped")})
    print(f"queries\t{rows[0][1]['count']}")
    print(f"skipped\t{unseen + rows[0][1].get('skipped', 0)}")
    table = args.table or f"{args.checkpoint}.{args.task}.tsv"
    _write_table(table, args.task, rows, args.k)
    print(f"table\t{table}")
    return EXIT_OK


def cmd_export(args):
    _require(args, "checkpoint", "out")
    ckpt = io.load_checkpoint(args.checkpoint)
    io.export_embeddings(ckpt.params, ckpt.kg, args.out)
    print(f"rows\t{ckpt.kg.n_entities + ckpt.kg.n_concepts}")
    print(f"embeddings\t{args.out}")
    return EXIT_OK


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "export": cmd_export}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except (UsageError, OSError) as exc:
        print(f"dualkg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"dualkg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceDetected as exc:
        print(f"dualkg: training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (DualKGError, OSError, KeyError) as exc:
        print(f"dualkg: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
