"""Session segmentation, item co-occurrence counting, and PMI/SPPMI matrices.

Two co-occurrence modes exist: session-based (items appearing in the same
session) and user-history-based (items appearing in the same user's
consumption list). Both count each unordered item pair once per context,
after de-duplicating items within the context.
"""

import math
import os
from collections import Counter, defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .data import InteractionLog, SparseBinaryMatrix, Vocab
from .errors import DataError

# Marginal count conventions: "cooccurrence" derives item marginals from the
# pair table (#(i) = sum_j #(i,j), D = sum_i #(i)); "consumption" counts the
# number of contexts each item appears in (D = total item-context incidences).
MARGINALS_COOCCURRENCE = "cooccurrence"
MARGINALS_CONSUMPTION = "consumption"
MARGINALS_MODES = (MARGINALS_COOCCURRENCE, MARGINALS_CONSUMPTION)

DEFAULT_SESSION_GAP = 21600  # 6 hours


@dataclass(frozen=True)
class Session:
    """One user's maximal run of events with consecutive gaps below the threshold."""

    user_index: int
    item_set: frozenset[int]
    start: int
    end: int

    def __post_init__(self):
        if not self.item_set:
            raise ValueError("session item_set must be non-empty")
        if self.start > self.end:
            raise ValueError("session start must be <= end")


class CoocCounts:
    """Symmetric pair counts with item marginals and the total pair count D."""

    __slots__ = ("pair_counts", "marginals", "total_pairs", "n_items")

    def __init__(
        self,
        pair_counts: dict[tuple[int, int], int],
        marginals: np.ndarray,
        total_pairs: int,
        n_items: int,
    ):
        self.pair_counts = pair_counts  # keyed (i, j) with i < j
        self.marginals = marginals
        self.total_pairs = total_pairs
        self.n_items = n_items

    def count(self, i: int, j: int) -> int:
        if i == j:
            return 0
        key = (i, j) if i < j else (j, i)
        return self.pair_counts.get(key, 0)

    def marginal(self, i: int) -> int:
        return int(self.marginals[i])

    def pairs(self) -> Iterable[tuple[int, int, int]]:
        """Yield (i, j, count) with i < j."""
        for (i, j), c in self.pair_counts.items():
            yield i, j, c

    def __repr__(self) -> str:
        return (
            f"CoocCounts({len(self.pair_counts)} pairs, D={self.total_pairs}, "
            f"M={self.n_items})"
        )


class SppmiMatrix:
    """Sparse symmetric shifted-positive-PMI matrix over item pairs."""

    __slots__ = ("matrix", "shift_k")

    def __init__(self, matrix: sparse.csr_matrix, shift_k: int):
        m = sparse.csr_matrix(matrix, dtype=np.float64)
        m.sum_duplicates()
        m.eliminate_zeros()
        if m.shape[0] != m.shape[1]:
            raise ValueError("SPPMI matrix must be square")
        if m.nnz and m.data.min() <= 0.0:
            raise ValueError("SPPMI entries must be strictly positive")
        self.matrix = m
        self.shift_k = int(shift_k)

    @classmethod
    def from_entries(
        cls, entries: dict[tuple[int, int], float], dim: int, shift_k: int
    ):
        """Build from canonical (i < j) entries, materializing both directions."""
        rows, cols, vals = [], [], []
        for (i, j), v in entries.items():
            rows += [i, j]
            cols += [j, i]
            vals += [v, v]
        m = sparse.csr_matrix((vals, (rows, cols)), shape=(dim, dim))
        return cls(m, shift_k)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def value(self, i: int, j: int) -> float:
        return float(self.matrix[i, j])

    def upper_entries(self) -> list[tuple[int, int, float]]:
        """Stored entries with i < j, sorted; diagonal entries are excluded."""
        coo = self.matrix.tocoo()
        out = [
            (int(i), int(j), float(v))
            for i, j, v in zip(coo.row, coo.col, coo.data)
            if i < j
        ]
        out.sort(key=lambda t: (t[0], t[1]))
        return out

    def __repr__(self) -> str:
        return f"SppmiMatrix(M={self.dim}, nnz={self.nnz}, shift_k={self.shift_k})"


def segment_sessions(
    user_index: int, events: Sequence[tuple[int, int]], gap_seconds: int
) -> list[Session]:
    """Segment one user's time-sorted (timestamp, item_index) events.

    Consecutive events belong to the same session iff their time difference
    is strictly less than gap_seconds; a gap of exactly gap_seconds starts a
    new session. Items are de-duplicated within each session.
    """
    if gap_seconds <= 0:
        raise ValueError(f"gap_seconds must be positive, got {gap_seconds}")
    sessions: list[Session] = []
    cur_items: set[int] = set()
    cur_start = cur_end = 0
    prev_ts = None
    for ts, item in events:
        if prev_ts is not None and ts < prev_ts:
            raise ValueError("events must be sorted ascending by timestamp")
        if prev_ts is None or ts - prev_ts < gap_seconds:
            if prev_ts is None:
                cur_start = ts
            cur_items.add(item)
            cur_end = ts
        else:
            sessions.append(
                Session(user_index, frozenset(cur_items), cur_start, cur_end)
            )
            cur_items = {item}
            cur_start = cur_end = ts
        prev_ts = ts
    if cur_items:
        sessions.append(Session(user_index, frozenset(cur_items), cur_start, cur_end))
    return sessions


def sessions_from_log(
    log: InteractionLog, vocab: Vocab, gap_seconds: int = DEFAULT_SESSION_GAP
) -> list[Session]:
    """Segment every user's events into sessions; out-of-vocab events are dropped."""
    per_user: dict[int, list[tuple[int, int]]] = defaultdict(list)
    u2i, v2i = vocab.user_to_index, vocab.item_to_index
    for e in log:
        u = u2i.get(e.user)
        i = v2i.get(e.item)
        if u is None or i is None:
            continue
        per_user[u].append((e.timestamp, i))
    sessions: list[Session] = []
    for u in sorted(per_user):
        events = sorted(per_user[u], key=lambda t: t[0])
        sessions.extend(segment_sessions(u, events, gap_seconds))
    return sessions


def _counts_from_contexts(
    contexts: Iterable[frozenset[int]], n_items: int, marginals_mode: str
) -> CoocCounts:
    if marginals_mode not in MARGINALS_MODES:
        raise ValueError(f"marginals mode must be one of {MARGINALS_MODES}")
    pair_counts: Counter[tuple[int, int]] = Counter()
    incidence = np.zeros(n_items, dtype=np.int64)
    for items in contexts:
        members = sorted(items)
        if members and (members[0] < 0 or members[-1] >= n_items):
            raise ValueError(
                f"item index out of range for n_items={n_items}: "
                f"{members[0] if members[0] < 0 else members[-1]}"
            )
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                pair_counts[(members[a], members[b])] += 1
            incidence[members[a]] += 1
    if marginals_mode == MARGINALS_COOCCURRENCE:
        marginals = np.zeros(n_items, dtype=np.int64)
        for (i, j), c in pair_counts.items():
            marginals[i] += c
            marginals[j] += c
    else:
        marginals = incidence
    total = int(marginals.sum())
    return CoocCounts(dict(pair_counts), marginals, total, n_items)


def count_session_cooc(
    sessions: Iterable[Session],
    n_items: int,
    marginals_mode: str = MARGINALS_COOCCURRENCE,
) -> CoocCounts:
    """Count how many sessions each unordered item pair appears in together."""
    return _counts_from_contexts(
        (s.item_set for s in sessions), n_items, marginals_mode
    )


def count_user_cooc(
    R: SparseBinaryMatrix, marginals_mode: str = MARGINALS_COOCCURRENCE
) -> CoocCounts:
    """Count item pairs co-occurring in the same user's consumption list."""
    contexts = (
        frozenset(int(i) for i in R.row_items(u)) for u in range(R.n_rows)
    )
    return _counts_from_contexts(
        (c for c in contexts if c), R.n_cols, marginals_mode
    )


def pmi_matrix(counts: CoocCounts) -> dict[tuple[int, int], float]:
    """Pointwise mutual information for every pair with a nonzero count.

    p_ij = ln(#(i,j) * D / (#(i) * #(j))). Zero-count pairs are never
    materialized (their PMI is -inf).
    """
    if counts.total_pairs <= 0:
        raise DataError("no co-occurrence observed (D = 0)")
    D = float(counts.total_pairs)
    out: dict[tuple[int, int], float] = {}
    for (i, j), c in counts.pair_counts.items():
        out[(i, j)] = math.log(c * D / (counts.marginal(i) * counts.marginal(j)))
    return out


def sppmi_matrix(
    pmi: dict[tuple[int, int], float], n_items: int, shift_k: int = 1
) -> SppmiMatrix:
    """Shifted positive PMI: keep max(p_ij - ln(shift_k), 0) where positive."""
    if shift_k < 1:
        raise ValueError(f"shift_k must be >= 1, got {shift_k}")
    shift = math.log(shift_k)
    entries = {}
    for (i, j), p in pmi.items():
        v = p - shift
        if v > 0.0:
            entries[(i, j)] = v
    return SppmiMatrix.from_entries(entries, n_items, shift_k)


def write_sppmi_tsv(sppmi: SppmiMatrix, path: str | os.PathLike) -> None:
    """Dump as TSV `i<TAB>j<TAB>value` with i < j, 10 significant digits."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, j, v in sppmi.upper_entries():
            fh.write(f"{i}\t{j}\t{v:.10g}\n")


def read_sppmi_tsv(
    path: str | os.PathLike, n_items: int, shift_k: int = 1
) -> SppmiMatrix:
    """Read a dump produced by write_sppmi_tsv, symmetrizing the entries."""
    entries: dict[tuple[int, int], float] = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            fields = raw.rstrip("\r\n").split("\t")
            try:
                if len(fields) != 3:
                    raise ValueError("expected 3 columns")
                i, j, v = int(fields[0]), int(fields[1]), float(fields[2])
                if not 0 <= i < j < n_items:
                    raise ValueError(f"bad pair ({i}, {j}) for M={n_items}")
                if v <= 0.0:
                    raise ValueError("values must be positive")
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
            entries[(i, j)] = v
    return SppmiMatrix.from_entries(entries, n_items, shift_k)
