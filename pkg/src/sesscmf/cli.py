"""Command-line interface.

Exit codes: 0 on success, 1 on usage/configuration errors, 2 on data errors.
"""

import argparse
import logging
import sys
from dataclasses import replace

from . import config as cfgmod
from .config import ExperimentConfig, apply_overrides, load_config
from .cooc import read_sppmi_tsv, write_sppmi_tsv
from .data import binarize, build_vocab
from .errors import ConfigError, DataError
from .evaluation import evaluate_model, heldout_truth_sets, write_metrics_csv
from .factorization import joint_train, recommend_topk, wmf_train
from .ingest import parse_events, write_canonical_tsv
from .modelio import load_model, save_model
from .pipeline import build_sppmi, run_experiment, split_log

logger = logging.getLogger("sesscmf")


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; the contract here is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_format_flags(p: argparse.ArgumentParser):
    p.add_argument("--delimiter", default="\t", help="field delimiter (default: TAB)")
    p.add_argument("--user-col", type=int, default=0)
    p.add_argument("--item-col", type=int, default=1)
    p.add_argument("--time-col", type=int, default=2)
    p.add_argument(
        "--time-format",
        choices=("epoch-seconds", "iso-8601"),
        default="epoch-seconds",
    )
    p.add_argument("--skip-header", action="store_true")
    p.add_argument("--strict", action="store_true", help="fail on the first malformed line")


def _add_vocab_flags(p: argparse.ArgumentParser):
    p.add_argument("--vocab-from", metavar="TSV", default=None,
                   help="canonical TSV the vocabulary is built from "
                        "(default: the input events file)")
    p.add_argument("--min-user-events", type=int, default=0)
    p.add_argument("--min-item-events", type=int, default=0)


def _config_from_flags(args, keys) -> ExperimentConfig:
    updates = {}
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            updates[key] = value
    cfg = replace(ExperimentConfig(), **updates)
    cfg.validate()
    return cfg


def _load_vocab(args, events_path):
    vocab_path = args.vocab_from or events_path
    log, _ = parse_events(vocab_path)
    return build_vocab(log, args.min_user_events, args.min_item_events)


def _cmd_ingest(args) -> int:
    cfg = _config_from_flags(
        args,
        ("delimiter", "user_col", "item_col", "time_col", "time_format",
         "skip_header", "strict", "split_ratio", "validation_ratio", "seed"),
    )
    spec = cfg.format_spec()
    log, skipped = parse_events(args.input, spec, strict=args.strict)
    if skipped:
        logger.info("skipped %d malformed lines", skipped)
    write_canonical_tsv(log, args.output)
    logger.info("wrote %d events to %s", len(log), args.output)
    if args.train_out or args.test_out:
        if not (args.train_out and args.test_out):
            raise ConfigError("--train-out and --test-out must be given together")
        train, test, validation = split_log(cfg, log)
        write_canonical_tsv(train, args.train_out)
        write_canonical_tsv(test, args.test_out)
        logger.info("split: %d train / %d test events", len(train), len(test))
        if validation is not None:
            if not args.validation_out:
                raise ConfigError("validation_ratio > 0 requires --validation-out")
            write_canonical_tsv(validation, args.validation_out)
    return 0


def _cmd_cooc(args) -> int:
    cfg = _config_from_flags(
        args, ("gap_seconds", "marginals", "shift_k", "min_user_events",
               "min_item_events")
    )
    mode_method = {
        "session": cfgmod.METHOD_SESSION_CMF,
        "user": cfgmod.METHOD_COFACTOR,
    }[args.mode]
    cfg = replace(cfg, method=mode_method)
    vocab = _load_vocab(args, args.events)
    log, _ = parse_events(args.events)
    train_R, _ = binarize(log, vocab)
    sppmi = build_sppmi(cfg, log, vocab, train_R)
    write_sppmi_tsv(sppmi, args.output)
    logger.info("wrote SPPMI (%d entries) to %s", sppmi.nnz, args.output)
    return 0


def _cmd_train(args) -> int:
    cfg = _config_from_flags(
        args,
        ("method", "factors", "lambda_x", "lambda_y", "lambda_z", "alpha",
         "sweeps", "seed", "nonneg", "init_scale", "item_item_weight",
         "shift_k", "tol", "min_user_events", "min_item_events"),
    )
    vocab = _load_vocab(args, args.train)
    log, _ = parse_events(args.train)
    train_R, dropped = binarize(log, vocab)
    if dropped:
        logger.info("dropped %d out-of-vocab events", dropped)
    hyper = cfg.hyperparams()
    if cfg.method == cfgmod.METHOD_WMF:
        model, report = wmf_train(train_R, hyper)
    else:
        if not args.sppmi:
            raise ConfigError(f"method {cfg.method} requires --sppmi")
        sppmi = read_sppmi_tsv(args.sppmi, vocab.n_items, cfg.shift_k)
        model, report = joint_train(train_R, sppmi, hyper)
    logger.info(
        "trained %s: %d sweeps, final loss %.6g, converged=%s",
        cfg.method, report.sweeps_run, report.loss_per_sweep[-1], report.converged,
    )
    save_model(model, vocab, args.output)
    logger.info("wrote model to %s", args.output)
    return 0


def _parse_cutoffs(raw: str) -> tuple[int, ...]:
    try:
        cutoffs = tuple(int(t) for t in raw.split(",") if t.strip())
    except ValueError as exc:
        raise ConfigError(f"bad cutoff list {raw!r}: {exc}") from exc
    if not cutoffs or min(cutoffs) < 1:
        raise ConfigError("cutoffs must be positive integers")
    return cutoffs


def _cmd_eval(args) -> int:
    model, vocab = load_model(args.model)
    train_log, _ = parse_events(args.train)
    train_R, _ = binarize(train_log, vocab)
    test_log, _ = parse_events(args.test)
    truth = heldout_truth_sets(test_log, vocab)
    report = evaluate_model(model, train_R, truth, _parse_cutoffs(args.cutoffs))
    write_metrics_csv(report, args.method_label, args.output)
    logger.info(
        "evaluated %d users (%d skipped); wrote %s",
        report.users_evaluated, report.users_skipped, args.output,
    )
    return 0


def _cmd_run(args) -> int:
    cfg = ExperimentConfig()
    if args.config:
        cfg = load_config(args.config, cfg)
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        overrides[key.strip()] = value
    if args.input:
        overrides["input"] = args.input
    if args.method:
        overrides["method"] = args.method
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    cfg = apply_overrides(cfg, overrides)
    if not cfg.input:
        raise ConfigError("no input file configured (set `input` or pass --input)")

    factor_list = [cfg.factors]
    if args.k:
        try:
            factor_list = [int(t) for t in str(args.k).split(",") if t.strip()]
        except ValueError as exc:
            raise ConfigError(f"--k expects an integer or comma list: {exc}") from exc
        if not factor_list:
            raise ConfigError("--k expects an integer or comma list")
    if len(factor_list) == 1:
        cfg = replace(cfg, factors=factor_list[0]).validate()
        report = run_experiment(cfg)
        _print_report(cfg.method, report)
        return 0

    # factor sweep: one full run per K, merged into a single metrics file
    rows = []
    for k in factor_list:
        sub = replace(
            cfg,
            factors=k,
            model_out=_with_suffix(cfg.model_out, f".K{k}"),
            metrics_out=_with_suffix(cfg.metrics_out, f".K{k}"),
            sppmi_out=_with_suffix(cfg.sppmi_out, f".K{k}"),
        ).validate()
        report = run_experiment(sub)
        _print_report(f"{cfg.method}/K={k}", report)
        with open(sub.metrics_out, encoding="utf-8") as fh:
            body = fh.read().splitlines()[1:]
        rows += [
            f"{cfg.method}/K={k}," + line.split(",", 1)[1] for line in body
        ]
    with open(cfg.metrics_out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("method,metric,k,value,users_evaluated\n")
        for line in rows:
            fh.write(line + "\n")
    logger.info("wrote merged sweep metrics to %s", cfg.metrics_out)
    return 0


def _with_suffix(path: str, suffix: str) -> str:
    root, dot, ext = path.rpartition(".")
    if not dot:
        return path + suffix
    return f"{root}{suffix}.{ext}"


def _print_report(method: str, report) -> None:
    for (metric, k), value in sorted(report.per_metric.items()):
        print(f"{method}\t{metric}@{k}\t{value:.6f}")


def _cmd_recommend(args) -> int:
    model, vocab = load_model(args.model)
    if args.user not in vocab.user_to_index:
        raise DataError(f"unknown user {args.user!r}")
    u = vocab.user_index(args.user)
    exclude = frozenset()
    if args.train:
        train_log, _ = parse_events(args.train)
        train_R, _ = binarize(train_log, vocab)
        exclude = frozenset(int(i) for i in train_R.row_items(u))
    for item, score in recommend_topk(model, u, args.top, exclude=exclude):
        print(f"{vocab.item_id(item)}\t{score:.6f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sesscmf", description=__doc__)
    parser.add_argument("-q", "--quiet", action="store_true", help="suppress progress logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[], help="parse a raw log to canonical TSV, optionally splitting")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True, help="canonical TSV output")
    _add_format_flags(p)
    p.add_argument("--train-out")
    p.add_argument("--test-out")
    p.add_argument("--split-ratio", dest="split_ratio", type=float, default=0.8)
    p.add_argument("--validation-ratio", dest="validation_ratio", type=float, default=0.0)
    p.add_argument("--validation-out")
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("cooc", help="build the SPPMI item-item matrix from events")
    p.add_argument("--events", required=True, help="canonical TSV of training events")
    p.add_argument("--mode", choices=("session", "user"), default="session")
    p.add_argument("--session-gap", dest="gap_seconds", type=int, default=21600)
    p.add_argument("--shift-k", dest="shift_k", type=int, default=1)
    p.add_argument("--marginals", choices=("cooccurrence", "consumption"),
                   default="cooccurrence")
    _add_vocab_flags(p)
    p.add_argument("-o", "--output", required=True, help="SPPMI TSV output")
    p.set_defaults(func=_cmd_cooc)

    p = sub.add_parser("train", help="train a model on canonical training events")
    p.add_argument("--train", required=True, help="canonical TSV of training events")
    p.add_argument("--method", choices=cfgmod.METHODS, default="session-cmf")
    p.add_argument("--sppmi", help="SPPMI TSV (required for cofactor/session-cmf)")
    p.add_argument("--k", dest="factors", type=int, default=10, help="latent dimension")
    p.add_argument("--lambda-x", dest="lambda_x", type=float, default=0.1)
    p.add_argument("--lambda-y", dest="lambda_y", type=float, default=0.1)
    p.add_argument("--lambda-z", dest="lambda_z", type=float, default=0.1)
    p.add_argument("--alpha", type=float, default=10.0)
    p.add_argument("--sweeps", type=int, default=20)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--nonneg", choices=("auto", "true", "false"), default="auto")
    p.add_argument("--init-scale", dest="init_scale", type=float, default=0.1)
    p.add_argument("--item-item-weight", dest="item_item_weight", type=float, default=1.0)
    p.add_argument("--shift-k", dest="shift_k", type=int, default=1)
    p.add_argument("--tol", type=float, default=1e-6)
    _add_vocab_flags(p)
    p.add_argument("-o", "--output", required=True, help="model file output")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a trained model on held-out events")
    p.add_argument("--model", required=True)
    p.add_argument("--train", required=True, help="canonical TSV of training events")
    p.add_argument("--test", required=True, help="canonical TSV of held-out events")
    p.add_argument("--cutoffs", default="20,50")
    p.add_argument("--method-label", default="model", help="method column value in the CSV")
    p.add_argument("-o", "--output", required=True, help="metrics CSV output")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser(
        "run",
        help="run the full pipeline from a config file",
        epilog="config keys and defaults:\n" + cfgmod.default_config_text(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--input", help="override the input log path")
    p.add_argument("--method", choices=cfgmod.METHODS)
    p.add_argument("--seed", type=int)
    p.add_argument("--k", help="latent dimension, or a comma list for a sweep")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any config key (repeatable)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("recommend", help="print top items for a user")
    p.add_argument("--model", required=True)
    p.add_argument("--train", help="canonical TSV whose items are excluded")
    p.add_argument("--user", required=True, help="raw user id")
    p.add_argument("--top", type=int, default=10)
    p.set_defaults(func=_cmd_recommend)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
