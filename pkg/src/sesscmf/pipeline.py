"""End-to-end orchestration: ingest -> split -> cooc -> train -> evaluate."""

import logging
from contextlib import contextmanager

from .config import METHOD_SESSION_CMF, METHOD_WMF, ExperimentConfig
from .cooc import (
    count_session_cooc,
    count_user_cooc,
    pmi_matrix,
    read_sppmi_tsv,
    sessions_from_log,
    sppmi_matrix,
    write_sppmi_tsv,
)
from .data import InteractionLog, Vocab, binarize, build_vocab, split_holdout
from .errors import DataError
from .evaluation import EvalReport, evaluate_model, heldout_truth_sets, write_metrics_csv
from .factorization import joint_train, wmf_train
from .ingest import parse_events, write_canonical_tsv
from .modelio import save_model

logger = logging.getLogger(__name__)


@contextmanager
def _stage(name: str):
    try:
        yield
    except DataError as exc:
        raise DataError(f"{name}: {exc}") from exc


def split_log(config: ExperimentConfig, log: InteractionLog):
    """The configured train/test split, with the optional validation carve-out.

    Returns (train, test, validation); validation is None unless
    validation_ratio > 0.
    """
    pair = split_holdout(log, config.split_ratio, config.split_seed())
    train, validation = pair.train, None
    if config.validation_ratio > 0.0:
        carved = split_holdout(
            train, 1.0 - config.validation_ratio, config.validation_seed()
        )
        train, validation = carved.train, carved.test
    return train, pair.test, validation


def build_sppmi(
    config: ExperimentConfig,
    train_log: InteractionLog,
    vocab: Vocab,
    train_R,
):
    """Session- or user-history co-occurrence SPPMI for the configured method."""
    if config.method == METHOD_SESSION_CMF:
        sessions = sessions_from_log(train_log, vocab, config.gap_seconds)
        counts = count_session_cooc(sessions, vocab.n_items, config.marginals)
    else:
        counts = count_user_cooc(train_R, config.marginals)
    pmi = pmi_matrix(counts)
    return sppmi_matrix(pmi, vocab.n_items, config.shift_k)


def run_experiment(config: ExperimentConfig) -> EvalReport:
    """Run the full pipeline for one configuration; writes all output files.

    All randomness derives from config.seed, so identical configurations
    produce byte-identical model and metrics files. For the joint methods
    the SPPMI matrix is written to config.sppmi_out and read back before
    training, so a staged command-line run reproduces this output exactly.
    """
    config.validate()
    with _stage("ingest"):
        log, skipped = parse_events(
            config.input, config.format_spec(), strict=config.strict
        )
        if skipped:
            logger.info("ingest: skipped %d malformed lines", skipped)
        logger.info("ingest: %d events", len(log))
    with _stage("vocab"):
        vocab = build_vocab(log, config.min_user_events, config.min_item_events)
        logger.info("vocab: N=%d users, M=%d items", vocab.n_users, vocab.n_items)
    with _stage("split"):
        train_log, test_log, validation_log = split_log(config, log)
        logger.info(
            "split: %d train / %d test events (seed %d)",
            len(train_log),
            len(test_log),
            config.split_seed(),
        )
        if validation_log is not None and config.validation_out:
            write_canonical_tsv(validation_log, config.validation_out)
    with _stage("binarize"):
        train_R, dropped = binarize(train_log, vocab)
        if dropped:
            logger.info("binarize: dropped %d out-of-vocab events", dropped)
    hyper = config.hyperparams()
    if config.method == METHOD_WMF:
        with _stage("train"):
            model, report = wmf_train(train_R, hyper)
    else:
        with _stage("cooc"):
            sppmi = build_sppmi(config, train_log, vocab, train_R)
            write_sppmi_tsv(sppmi, config.sppmi_out)
            sppmi = read_sppmi_tsv(config.sppmi_out, vocab.n_items, config.shift_k)
            logger.info("cooc: SPPMI with %d stored entries", sppmi.nnz)
        with _stage("train"):
            model, report = joint_train(train_R, sppmi, hyper)
    logger.info(
        "train: %d sweeps, final loss %.6g, converged=%s",
        report.sweeps_run,
        report.loss_per_sweep[-1],
        report.converged,
    )
    with _stage("save"):
        save_model(model, vocab, config.model_out)
    with _stage("eval"):
        truth = heldout_truth_sets(test_log, vocab)
        eval_report = evaluate_model(model, train_R, truth, config.cutoffs)
        write_metrics_csv(eval_report, config.method, config.metrics_out)
        logger.info(
            "eval: %d users evaluated, %d skipped",
            eval_report.users_evaluated,
            eval_report.users_skipped,
        )
    return eval_report
