"""Text serialization of trained factor models.

Format (LF line endings, floats with 17 significant digits so values
round-trip bit-exactly):

    SESSCMF v1
    K N M has_context
    U <raw_user_id> f1 ... fK     (N lines, vocabulary order)
    I <raw_item_id> f1 ... fK     (M lines)
    C <raw_item_id> f1 ... fK     (M lines, only when has_context is 1)
"""

import os

import numpy as np

from .data import Vocab
from .errors import DataError
from .factorization import FactorModel

MAGIC = "SESSCMF v1"


def _fmt_row(tag: str, raw_id: str, row: np.ndarray) -> str:
    if any(ch.isspace() for ch in raw_id):
        raise DataError(f"id {raw_id!r} contains whitespace; cannot serialize")
    return " ".join([tag, raw_id] + [f"{v:.17g}" for v in row])


def save_model(model: FactorModel, vocab: Vocab, path: str | os.PathLike) -> None:
    if model.n_users != vocab.n_users or model.n_items != vocab.n_items:
        raise ValueError("model and vocabulary sizes do not match")
    has_context = 1 if model.has_context else 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(MAGIC + "\n")
        fh.write(f"{model.factors} {model.n_users} {model.n_items} {has_context}\n")
        for u in range(model.n_users):
            fh.write(_fmt_row("U", vocab.user_id(u), model.X[u]) + "\n")
        for i in range(model.n_items):
            fh.write(_fmt_row("I", vocab.item_id(i), model.Y[i]) + "\n")
        if has_context:
            for i in range(model.n_items):
                fh.write(_fmt_row("C", vocab.item_id(i), model.Z[i]) + "\n")


def _parse_row(line: str, lineno: int, tag: str, k: int, path) -> tuple[str, list[float]]:
    tokens = line.split()
    if len(tokens) != 2 + k or tokens[0] != tag:
        raise DataError(f"{path}:{lineno}: expected '{tag} <id>' with {k} factors")
    try:
        values = [float(t) for t in tokens[2:]]
    except ValueError as exc:
        raise DataError(f"{path}:{lineno}: bad float: {exc}") from exc
    return tokens[1], values


def load_model(path: str | os.PathLike) -> tuple[FactorModel, Vocab]:
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        lines = fh.read().split("\n")
    if not lines or lines[0] != MAGIC:
        raise DataError(f"{path}: not a model file (expected '{MAGIC}' header)")
    try:
        k, n, m, has_context = (int(t) for t in lines[1].split())
    except (IndexError, ValueError) as exc:
        raise DataError(f"{path}:2: bad dimension line") from exc
    if has_context not in (0, 1):
        raise DataError(f"{path}:2: has_context must be 0 or 1")
    expected = 2 + n + m + (m if has_context else 0)
    body = [ln for ln in lines[2:] if ln]
    if len(body) != expected - 2:
        raise DataError(
            f"{path}: truncated or padded model file "
            f"(expected {expected - 2} factor lines, found {len(body)})"
        )
    users, items = [], []
    X = np.empty((n, k))
    Y = np.empty((m, k))
    Z = np.empty((m, k)) if has_context else None
    pos = 0
    for u in range(n):
        raw, vals = _parse_row(body[pos], pos + 3, "U", k, path)
        users.append(raw)
        X[u] = vals
        pos += 1
    for i in range(m):
        raw, vals = _parse_row(body[pos], pos + 3, "I", k, path)
        items.append(raw)
        Y[i] = vals
        pos += 1
    if has_context:
        for i in range(m):
            raw, vals = _parse_row(body[pos], pos + 3, "C", k, path)
            if raw != items[i]:
                raise DataError(
                    f"{path}: context line {i} id {raw!r} does not match item "
                    f"{items[i]!r}"
                )
            Z[i] = vals
            pos += 1
    return FactorModel(X, Y, Z), Vocab(users, items)
