"""Raw event containers, id vocabularies, the binary interaction matrix, splits."""

from collections import Counter
from collections.abc import Iterable, Iterator
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import DataError


@dataclass(frozen=True)
class Event:
    """A single (user, item, timestamp) interaction; timestamp in epoch seconds."""

    user: str
    item: str
    timestamp: int

    def __post_init__(self):
        if not self.user:
            raise ValueError("event user must be a non-empty string")
        if not self.item:
            raise ValueError("event item must be a non-empty string")
        if self.timestamp < 0:
            raise ValueError(f"event timestamp must be >= 0, got {self.timestamp}")


class InteractionLog:
    """Ordered stream of events. Duplicates (repeat visits) are allowed."""

    __slots__ = ("events",)

    def __init__(self, events: Iterable[Event]):
        self.events: tuple[Event, ...] = tuple(events)

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events)

    def __getitem__(self, i):
        return self.events[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, InteractionLog) and self.events == other.events

    def __repr__(self) -> str:
        return f"InteractionLog({len(self.events)} events)"


class Vocab:
    """Bijective mapping between raw user/item ids and dense contiguous indices."""

    __slots__ = ("users", "items", "user_to_index", "item_to_index")

    def __init__(self, users: Iterable[str], items: Iterable[str]):
        self.users: tuple[str, ...] = tuple(users)
        self.items: tuple[str, ...] = tuple(items)
        self.user_to_index: dict[str, int] = {u: i for i, u in enumerate(self.users)}
        self.item_to_index: dict[str, int] = {v: i for i, v in enumerate(self.items)}
        if len(self.user_to_index) != len(self.users):
            raise ValueError("duplicate user ids in vocabulary")
        if len(self.item_to_index) != len(self.items):
            raise ValueError("duplicate item ids in vocabulary")

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_items(self) -> int:
        return len(self.items)

    def user_index(self, raw: str) -> int:
        return self.user_to_index[raw]

    def item_index(self, raw: str) -> int:
        return self.item_to_index[raw]

    def user_id(self, index: int) -> str:
        return self.users[index]

    def item_id(self, index: int) -> str:
        return self.items[index]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Vocab)
            and self.users == other.users
            and self.items == other.items
        )

    def __repr__(self) -> str:
        return f"Vocab(N={self.n_users}, M={self.n_items})"


class SparseBinaryMatrix:
    """Binary user-item matrix; the stored support is also the indicator matrix."""

    __slots__ = ("matrix",)

    def __init__(self, matrix: sparse.csr_matrix):
        m = sparse.csr_matrix(matrix, dtype=np.float64)
        m.sum_duplicates()
        m.eliminate_zeros()
        if m.nnz and not np.all(m.data == 1.0):
            raise ValueError("all stored entries must be exactly 1")
        self.matrix = m

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]], n_rows: int, n_cols: int):
        support = set(pairs)
        if support:
            rows, cols = zip(*sorted(support))
        else:
            rows, cols = (), ()
        m = sparse.csr_matrix(
            (np.ones(len(support)), (rows, cols)), shape=(n_rows, n_cols)
        )
        return cls(m)

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_cols(self) -> int:
        return self.matrix.shape[1]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def row_items(self, row: int) -> np.ndarray:
        """Column indices with a 1 in the given row."""
        start, end = self.matrix.indptr[row], self.matrix.indptr[row + 1]
        return self.matrix.indices[start:end]

    def support(self) -> set[tuple[int, int]]:
        coo = self.matrix.tocoo()
        return set(zip(coo.row.tolist(), coo.col.tolist()))

    def __contains__(self, pos: tuple[int, int]) -> bool:
        r, c = pos
        return c in self.row_items(r)

    def __repr__(self) -> str:
        return f"SparseBinaryMatrix({self.n_rows}x{self.n_cols}, nnz={self.nnz})"


@dataclass(frozen=True)
class SplitPair:
    train: InteractionLog
    test: InteractionLog
    seed: int


def build_vocab(
    log: InteractionLog, min_user_events: int = 0, min_item_events: int = 0
) -> Vocab:
    """Build a vocabulary over users and items that meet the frequency thresholds.

    Indices are assigned in order of first appearance in the log, so the
    mapping is deterministic for a given input.
    """
    if len(log) == 0:
        raise DataError("cannot build a vocabulary from an empty log")
    user_counts = Counter(e.user for e in log)
    item_counts = Counter(e.item for e in log)
    users, items = [], []
    seen_u, seen_i = set(), set()
    for e in log:
        if e.user not in seen_u and user_counts[e.user] >= min_user_events:
            seen_u.add(e.user)
            users.append(e.user)
        if e.item not in seen_i and item_counts[e.item] >= min_item_events:
            seen_i.add(e.item)
            items.append(e.item)
    if not users:
        raise DataError(
            f"min_user_events={min_user_events} eliminated every user"
        )
    if not items:
        raise DataError(
            f"min_item_events={min_item_events} eliminated every item"
        )
    return Vocab(users, items)


def binarize(log: InteractionLog, vocab: Vocab) -> tuple[SparseBinaryMatrix, int]:
    """Binarize a log: R[u, i] = 1 iff user u has at least one event on item i.

    Events whose user or item is not in the vocabulary are dropped; the
    second return value counts them.
    """
    pairs = set()
    skipped = 0
    u2i, v2i = vocab.user_to_index, vocab.item_to_index
    for e in log:
        u = u2i.get(e.user)
        i = v2i.get(e.item)
        if u is None or i is None:
            skipped += 1
            continue
        pairs.add((u, i))
    return (
        SparseBinaryMatrix.from_pairs(pairs, vocab.n_users, vocab.n_items),
        skipped,
    )


def split_holdout(log: InteractionLog, ratio: float, seed: int) -> SplitPair:
    """Uniform random event-level split; deterministic for a given seed.

    The train side receives round(ratio * len(log)) events. Relative event
    order is preserved on both sides.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"split ratio must be in (0, 1), got {ratio}")
    if len(log) == 0:
        raise DataError("cannot split an empty log")
    n = len(log)
    n_train = int(round(ratio * n))
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    train = InteractionLog(log[i] for i in train_idx)
    test = InteractionLog(log[i] for i in test_idx)
    return SplitPair(train=train, test=test, seed=seed)
