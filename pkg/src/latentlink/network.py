"""Network representation, edge-list ingestion, and train/dev/test splitting.

Two split protocols are supported. Dense splits treat every ordered
off-diagonal pair as an observation (present = +1, absent = -1) and hold
out a fraction; they fit small, fully observed networks. Sparse splits
keep a fraction of the positive links for training, attach a multiple of
uniformly sampled negatives, and test on the held-out positives plus an
equal number of fresh negatives; they fit large sparse networks.

Self-loops are excluded from every universe.
"""

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, ParameterError, ParseError, UsageError

__all__ = [
    "Network",
    "LinkSplit",
    "load_edge_list",
    "split_dense",
    "split_sparse",
    "per_relation_views",
    "save_split",
    "load_split",
]


@dataclass
class Network:
    """A directed signed link collection over `n_entities` nodes."""

    n_entities: int
    src: np.ndarray
    dst: np.ndarray
    sign: np.ndarray
    rel: np.ndarray | None = None

    def __post_init__(self):
        self.src = np.asarray(self.src, dtype=np.int64)
        self.dst = np.asarray(self.dst, dtype=np.int64)
        self.sign = np.asarray(self.sign, dtype=np.int64)
        if self.rel is not None:
            self.rel = np.asarray(self.rel, dtype=np.int64)
        n = self.n_entities
        if len(self.src) != len(self.dst) or len(self.src) != len(self.sign):
            raise ParameterError("link arrays must have equal length")
        if len(self.src) and (self.src.min() < 0 or self.dst.min() < 0):
            raise ParameterError("negative entity id")
        if len(self.src) and (self.src.max() >= n or self.dst.max() >= n):
            raise ParameterError(f"entity id out of range for n_entities={n}")
        if not np.isin(self.sign, (-1, 1)).all():
            raise ParameterError("signs must be +1 or -1")
        rel = self.rel if self.rel is not None else np.zeros(len(self.src), dtype=np.int64)
        keys = (self.src * self.n_entities + self.dst) + rel * self.n_entities**2
        if len(np.unique(keys)) != len(keys):
            raise ParameterError("duplicate (source, target, relation) triple")

    @property
    def n_links(self):
        return len(self.src)

    def positive_codes(self):
        """Flat i*N+j codes of the positive links (relation ignored)."""
        pos = self.sign > 0
        return np.unique(self.src[pos] * self.n_entities + self.dst[pos])


@dataclass
class LinkSplit:
    """Disjoint train/dev/test observation sets, each rows of (src, dst, sign)."""

    n_entities: int
    train: np.ndarray
    dev: np.ndarray = field(default_factory=lambda: np.zeros((0, 3), dtype=np.int64))
    test: np.ndarray = field(default_factory=lambda: np.zeros((0, 3), dtype=np.int64))

    def __post_init__(self):
        self.train = np.asarray(self.train, dtype=np.int64).reshape(-1, 3)
        self.dev = np.asarray(self.dev, dtype=np.int64).reshape(-1, 3)
        self.test = np.asarray(self.test, dtype=np.int64).reshape(-1, 3)
        n = self.n_entities
        codes = [rows[:, 0] * n + rows[:, 1] for rows in (self.train, self.dev, self.test)]
        merged = np.concatenate(codes)
        if len(np.unique(merged)) != len(merged):
            raise ParameterError("split roles overlap")

    def role(self, name):
        return {"train": self.train, "dev": self.dev, "test": self.test}[name]


def _parse_int(tok, line_no, what):
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"expected integer {what}, got {tok!r}", line_no) from None


def load_edge_list(path, n_entities=None, symmetrize=False):
    """Read positive links from a text file of `src dst [relation]` lines.

    Ids are 0-based integers, whitespace separated; blank lines and lines
    starting with '#' are skipped. When `n_entities` is omitted it is
    inferred as 1 + the largest id seen. `symmetrize` adds the reversed
    copy of every link (for undirected inputs).
    """
    src, dst, rel = [], [], []
    has_rel = None
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            toks = line.split()
            if not toks or toks[0].startswith("#"):
                continue
            if len(toks) not in (2, 3):
                raise ParseError(f"expected 2 or 3 fields, got {len(toks)}", line_no)
            s = _parse_int(toks[0], line_no, "source id")
            d = _parse_int(toks[1], line_no, "target id")
            if has_rel is None:
                has_rel = len(toks) == 3
            elif has_rel != (len(toks) == 3):
                raise ParseError("inconsistent relation column", line_no)
            r = _parse_int(toks[2], line_no, "relation id") if has_rel else 0
            if s < 0 or d < 0:
                raise ParseError(f"negative id in ({s}, {d})", line_no)
            if n_entities is not None and (s >= n_entities or d >= n_entities):
                raise ParseError(f"id out of range for n_entities={n_entities}", line_no)
            src.append(s)
            dst.append(d)
            rel.append(r)
    if n_entities is None:
        n_entities = 1 + max(max(src, default=-1), max(dst, default=-1))
        if n_entities <= 0:
            raise ParseError("empty edge list and no n_entities given")
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    rel = np.asarray(rel, dtype=np.int64)
    if symmetrize:
        src, dst = np.concatenate([src, dst]), np.concatenate([dst, src])
        rel = np.concatenate([rel, rel])
    # Symmetrizing (or a sloppy undirected file) can produce duplicates.
    keys = rel * n_entities**2 + src * n_entities + dst
    _, keep = np.unique(keys, return_index=True)
    keep.sort()
    src, dst, rel = src[keep], dst[keep], rel[keep]
    return Network(
        n_entities=n_entities,
        src=src,
        dst=dst,
        sign=np.ones(len(src), dtype=np.int64),
        rel=rel if has_rel else None,
    )


def _floor_share(total, frac):
    """floor(frac * total), robust to float noise like 0.2 * 100 = 19.9999..."""
    return int(math.floor(round(frac * total, 9)))


def split_dense(net, train_frac, rng, dev_frac=None):
    """Partition all ordered off-diagonal pairs into train/dev/test.

    The test share is floor((1 - train_frac) * total); the dev set is then
    carved out of the training pool with (almost) the test set's size.
    """
    if not 0.0 < train_frac < 1.0:
        raise ParameterError(f"train_frac must lie in (0, 1), got {train_frac}")
    n = net.n_entities
    if not (net.sign > 0).any():
        raise ParameterError("network has no positive links")
    codes = np.arange(n * n, dtype=np.int64)
    codes = codes[codes // n != codes % n]
    signs = np.full(len(codes), -1, dtype=np.int64)
    pos = net.positive_codes()
    signs[np.isin(codes, pos, assume_unique=False)] = 1

    order = rng.permutation(len(codes))
    n_test = _floor_share(len(codes), 1.0 - train_frac)
    n_dev = n_test if dev_frac is None else _floor_share(len(codes), dev_frac)
    n_dev = min(n_dev, len(codes) - n_test - 1)
    test_idx = order[:n_test]
    dev_idx = order[n_test : n_test + n_dev]
    train_idx = order[n_test + n_dev :]

    def rows(idx):
        c = codes[idx]
        return np.column_stack([c // n, c % n, signs[idx]])

    return LinkSplit(n, train=rows(train_idx), dev=rows(dev_idx), test=rows(test_idx))


def _sample_negatives(n, excluded_codes, count, rng):
    """Uniform, without replacement, over off-diagonal non-links."""
    available = n * (n - 1) - len(excluded_codes)
    if count > available:
        raise CapacityError(f"requested {count} negatives but only {available} exist")
    excluded = set(int(c) for c in excluded_codes)
    out = []
    while len(out) < count:
        cand = rng.integers(0, n * n, size=max(64, 2 * (count - len(out))))
        for c in cand:
            c = int(c)
            if c // n == c % n or c in excluded:
                continue
            excluded.add(c)
            out.append(c)
            if len(out) == count:
                break
    return np.asarray(out, dtype=np.int64)


def split_sparse(net, pos_train_frac, neg_train_multiple, rng):
    """Positive-link split with sampled negatives for sparse networks.

    `pos_train_frac` of the positive links go to train along with
    `neg_train_multiple` times as many uniformly sampled negatives; the
    remaining positives plus an equal number of fresh negatives form the
    test set. No negative collides with any positive link or any other
    sampled entry.
    """
    if not 0.0 < pos_train_frac <= 1.0:
        raise ParameterError(f"pos_train_frac must lie in (0, 1], got {pos_train_frac}")
    if neg_train_multiple < 0:
        raise ParameterError("neg_train_multiple must be non-negative")
    n = net.n_entities
    pos_mask = net.sign > 0
    p_src, p_dst = net.src[pos_mask], net.dst[pos_mask]
    n_pos = len(p_src)
    if n_pos == 0:
        raise ParameterError("network has no positive links")

    n_train_pos = _floor_share(n_pos, pos_train_frac)
    n_test_pos = n_pos - n_train_pos
    if n_test_pos == 0:
        raise CapacityError("no positive links left for the test set")
    n_train_neg = int(neg_train_multiple) * n_train_pos
    n_test_neg = n_test_pos

    order = rng.permutation(n_pos)
    train_pos = order[:n_train_pos]
    test_pos = order[n_train_pos:]
    pos_codes = net.positive_codes()
    negatives = _sample_negatives(n, pos_codes, n_train_neg + n_test_neg, rng)
    train_neg, test_neg = negatives[:n_train_neg], negatives[n_train_neg:]

    def pos_rows(idx):
        return np.column_stack([p_src[idx], p_dst[idx], np.ones(len(idx), dtype=np.int64)])

    def neg_rows(codes):
        return np.column_stack([codes // n, codes % n, -np.ones(len(codes), dtype=np.int64)])

    train = np.concatenate([pos_rows(train_pos), neg_rows(train_neg)])
    test = np.concatenate([pos_rows(test_pos), neg_rows(test_neg)])
    return LinkSplit(n, train=train, test=test)


def per_relation_views(net):
    """One single-relation network per distinct relation id, same entity set."""
    if net.rel is None:
        raise UsageError("network carries no relation ids")
    views = []
    for r in np.unique(net.rel):
        mask = net.rel == r
        views.append(
            Network(
                n_entities=net.n_entities,
                src=net.src[mask],
                dst=net.dst[mask],
                sign=net.sign[mask],
            )
        )
    return views


def save_split(split, out_dir):
    """Write one `role src dst sign` text file per role plus a manifest."""
    os.makedirs(out_dir, exist_ok=True)
    for role in ("train", "dev", "test"):
        rows = split.role(role)
        with open(os.path.join(out_dir, f"{role}.txt"), "w") as fh:
            for s, d, y in rows:
                fh.write(f"{role} {s} {d} {y}\n")
    with open(os.path.join(out_dir, "split.json"), "w") as fh:
        json.dump({"n_entities": int(split.n_entities)}, fh)


def load_split(out_dir):
    with open(os.path.join(out_dir, "split.json")) as fh:
        meta = json.load(fh)
    roles = {}
    for role in ("train", "dev", "test"):
        rows = []
        path = os.path.join(out_dir, f"{role}.txt")
        with open(path) as fh:
            for line_no, line in enumerate(fh, start=1):
                toks = line.split()
                if not toks:
                    continue
                if len(toks) != 4 or toks[0] != role:
                    raise ParseError(f"bad split line in {path}", line_no)
                rows.append([int(toks[1]), int(toks[2]), int(toks[3])])
        roles[role] = np.asarray(rows, dtype=np.int64).reshape(-1, 3)
    return LinkSplit(meta["n_entities"], **roles)
