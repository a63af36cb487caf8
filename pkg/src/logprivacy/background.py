"""Background-knowledge candidates: set, multiset and subsequence patterns.

An adversary is assumed to know a size-l piece of a victim's trace: which
activities occurred (set), how often they occurred (multiset), or in which
order some of them occurred (subsequence).  This module enumerates every such
candidate that matches at least one trace of a log, together with the
multiset of traces consistent with it.

Enumeration never ranges over the full activity alphabet: a candidate has a
non-empty projection exactly when some variant contains it, so candidates are
generated per variant (subsets, sub-multisets, distinct subsequences) and
deduplicated globally.  Candidates are encoded as fixed-width packed integers
whenever the ids fit into 63 bits, which keeps indices for real logs compact;
wider candidates fall back to tuple keys.

For very incidence-heavy logs (many long, diverse traces) the index stops
materializing per-candidate variant lists and keeps only the per-candidate
aggregates the risk measures consume; projections are then recomputed on
demand.  Memory is therefore bounded by the candidate cap, not by how many
variants each candidate matches.
"""

from __future__ import annotations

import bisect
import itertools
from array import array
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Mapping, Sequence, TextIO

import numpy as np

from .errors import CandidateLimitError
from .event_log import EventLog, Variant

DEFAULT_CANDIDATE_CAP = 50_000_000

# Incidence buffers are compacted into sorted arrays at the first variant
# boundary past this many entries; bounds transient memory, not candidates.
_COMPACT_CHUNK = 1 << 23

# Past this many total (candidate, variant) incidences the index keeps only
# per-candidate aggregates instead of full variant lists.
_FULL_INCIDENCE_LIMIT = 1 << 25


class BkType(Enum):
    """The three background-knowledge shapes, weakest to strongest."""

    SET = "set"
    MULTISET = "mult"
    SEQUENCE = "seq"


@dataclass(frozen=True)
class Candidate:
    """One concrete piece of background knowledge.

    ``elements`` is canonical for the kind: strictly increasing ids for SET,
    non-decreasing ids (repetition = multiplicity) for MULTISET, and the
    known order for SEQUENCE.  An empty element tuple is the trivial
    constraint that matches every trace; enumeration never produces it.
    """

    kind: BkType
    elements: tuple[int, ...]

    def __post_init__(self):
        if self.kind is BkType.SET:
            if any(a >= b for a, b in zip(self.elements, self.elements[1:])):
                raise ValueError("set candidate ids must be strictly increasing")
        elif self.kind is BkType.MULTISET:
            if any(a > b for a, b in zip(self.elements, self.elements[1:])):
                raise ValueError("multiset candidate ids must be non-decreasing")

    @property
    def size(self) -> int:
        return len(self.elements)


@dataclass(frozen=True)
class Projection:
    """The traces of a log consistent with one candidate."""

    matches: Mapping[Variant, int]
    cardinality: int


def _is_subsequence(pattern: Sequence[int], trace: Sequence[int]) -> bool:
    it = iter(trace)
    return all(a in it for a in pattern)


def matches(candidate: Candidate, v: Variant) -> bool:
    """Does variant ``v`` carry the knowledge described by ``candidate``?"""
    if candidate.kind is BkType.SET:
        return set(candidate.elements).issubset(v)
    if candidate.kind is BkType.MULTISET:
        need = Counter(candidate.elements)
        have = Counter(v)
        return all(have[a] >= c for a, c in need.items())
    return _is_subsequence(candidate.elements, v)


def project(log: EventLog, candidate: Candidate) -> Projection:
    """Collect all log variants matching ``candidate``, with their counts."""
    found = {
        v: c for v, c in zip(log.variants, log.counts) if matches(candidate, v)
    }
    return Projection(matches=found, cardinality=sum(found.values()))


# -- per-variant pattern generation (packed-key fast path) -------------------


class _LimitExceeded(Exception):
    pass


def _emit_sets(v: Variant, size: int, bits: int, out: array, budget: int) -> None:
    distinct = sorted(set(v))
    if len(distinct) < size:
        return
    emitted = 0
    for combo in itertools.combinations(distinct, size):
        key = 0
        for e in combo:
            key = (key << bits) | e
        out.append(key)
        emitted += 1
        if emitted > budget:
            raise _LimitExceeded


def _emit_multisets(v: Variant, size: int, bits: int, out: array, budget: int) -> None:
    items = sorted(Counter(v).items())
    avail = [0] * (len(items) + 1)
    for i in range(len(items) - 1, -1, -1):
        avail[i] = avail[i + 1] + items[i][1]
    if avail[0] < size:
        return
    start = len(out)

    def rec(i: int, remaining: int, key: int) -> None:
        if remaining == 0:
            out.append(key)
            if len(out) - start > budget:
                raise _LimitExceeded
            return
        if i == len(items) or avail[i] < remaining:
            return
        act, mult = items[i]
        k = key
        for t in range(min(mult, remaining) + 1):
            rec(i + 1, remaining - t, k)
            k = (k << bits) | act

    rec(0, size, 0)


def _emit_subsequences(v: Variant, size: int, bits: int, out: array, budget: int) -> None:
    n = len(v)
    if n < size:
        return
    # first_at[p][a] = first position >= p where activity a occurs
    first_at: list[dict[int, int]] = [{} for _ in range(n + 1)]
    cur: dict[int, int] = {}
    for p in range(n - 1, -1, -1):
        cur = dict(cur)
        cur[v[p]] = p
        first_at[p] = cur
    start = len(out)

    def rec(p: int, remaining: int, key: int) -> None:
        if remaining == 1:
            out.extend([(key << bits) | a for a in first_at[p]])
            if len(out) - start > budget:
                raise _LimitExceeded
            return
        for a, i in first_at[p].items():
            if n - i >= remaining:
                rec(i + 1, remaining - 1, (key << bits) | a)

    rec(0, size, 0)


_EMITTERS = {
    BkType.SET: _emit_sets,
    BkType.MULTISET: _emit_multisets,
    BkType.SEQUENCE: _emit_subsequences,
}


# -- per-variant pattern generation (tuple fallback) -------------------------


def _tuple_patterns(v: Variant, bk_type: BkType, size: int) -> Iterator[tuple[int, ...]]:
    if bk_type is BkType.SET:
        yield from itertools.combinations(sorted(set(v)), size)
        return
    if bk_type is BkType.MULTISET:
        items = sorted(Counter(v).items())

        def rec(i: int, remaining: int, prefix: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
            if remaining == 0:
                yield prefix
                return
            if i == len(items):
                return
            act, mult = items[i]
            for t in range(min(mult, remaining) + 1):
                yield from rec(i + 1, remaining - t, prefix + (act,) * t)

        yield from rec(0, size, ())
        return
    n = len(v)
    first_at: list[dict[int, int]] = [{} for _ in range(n + 1)]
    cur: dict[int, int] = {}
    for p in range(n - 1, -1, -1):
        cur = dict(cur)
        cur[v[p]] = p
        first_at[p] = cur

    def seq_rec(p: int, remaining: int, prefix: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
        if remaining == 0:
            yield prefix
            return
        for a, i in first_at[p].items():
            if n - i >= remaining:
                yield from seq_rec(i + 1, remaining - 1, prefix + (a,))

    yield from seq_rec(0, size, ())


# -- the index ---------------------------------------------------------------


class CandidateIndex:
    """All size-l candidates of one type with non-empty projections.

    Candidates live in canonical ascending order.  When the variant-index
    layout was retained, projections come straight from it; otherwise they
    are recomputed by scanning the log.  The per-candidate aggregates that
    the risk measures need (projection cardinality and the entropy sum
    ``sum(count * log2 count)``) are always available in vector form.
    """

    def __init__(
        self,
        log: EventLog,
        bk_type: BkType,
        size: int,
        keys: "np.ndarray | list[tuple[int, ...]]",
        bits: int | None,
        var_idx: np.ndarray | None = None,
        offsets: np.ndarray | None = None,
        cards: np.ndarray | None = None,
        entsums: np.ndarray | None = None,
    ):
        self._log = log
        self.bk_type = bk_type
        self.size = size
        self._keys = keys
        self._bits = bits
        self._var_idx = var_idx
        self._offsets = offsets
        self._cards = cards
        self._entsums = entsums

    @property
    def log(self) -> EventLog:
        return self._log

    @property
    def candidate_count(self) -> int:
        return len(self._keys)

    @property
    def has_variant_lists(self) -> bool:
        return self._var_idx is not None

    def __len__(self) -> int:
        return len(self._keys)

    def _decode(self, pos: int) -> Candidate:
        if self._bits is None:
            elements = self._keys[pos]
        else:
            key = int(self._keys[pos])
            mask = (1 << self._bits) - 1
            elements = tuple(
                (key >> (self._bits * (self.size - 1 - i))) & mask for i in range(self.size)
            )
        return Candidate(self.bk_type, tuple(elements))

    def _position(self, candidate: Candidate) -> int | None:
        if candidate.kind is not self.bk_type or candidate.size != self.size:
            return None
        if self._bits is None:
            pos = bisect.bisect_left(self._keys, candidate.elements)
            if pos < len(self._keys) and self._keys[pos] == candidate.elements:
                return pos
            return None
        key = 0
        for e in candidate.elements:
            if e >= (1 << self._bits):
                return None
            key = (key << self._bits) | e
        pos = int(np.searchsorted(self._keys, key))
        if pos < len(self._keys) and int(self._keys[pos]) == key:
            return pos
        return None

    def __contains__(self, candidate: object) -> bool:
        return isinstance(candidate, Candidate) and self._position(candidate) is not None

    def candidates(self) -> Iterator[Candidate]:
        for pos in range(len(self._keys)):
            yield self._decode(pos)

    def _projection_at(self, pos: int) -> Projection:
        if self._var_idx is None:
            return project(self._log, self._decode(pos))
        lo, hi = int(self._offsets[pos]), int(self._offsets[pos + 1])
        found = {}
        card = 0
        for vi in self._var_idx[lo:hi]:
            v = self._log.variants[vi]
            c = self._log.counts[vi]
            found[v] = c
            card += c
        return Projection(matches=found, cardinality=card)

    def projection(self, candidate: Candidate) -> Projection:
        pos = self._position(candidate)
        if pos is None:
            raise KeyError(f"candidate {candidate!r} is not in this index")
        return self._projection_at(pos)

    def items(self) -> Iterator[tuple[Candidate, Projection]]:
        for pos in range(len(self._keys)):
            yield self._decode(pos), self._projection_at(pos)

    def cardinalities(self) -> np.ndarray:
        """Multiplicity-weighted projection size per candidate, canonical order."""
        if self._cards is None:
            if len(self._keys) == 0:
                self._cards = np.zeros(0, dtype=np.int64)
            else:
                counts = np.asarray(self._log.counts, dtype=np.int64)
                self._cards = np.add.reduceat(counts[self._var_idx], self._offsets[:-1])
        return self._cards

    def entropy_sums(self) -> np.ndarray:
        """Per candidate: sum over matching variants of count*log2(count)."""
        if self._entsums is None:
            if len(self._keys) == 0:
                self._entsums = np.zeros(0, dtype=np.float64)
            else:
                counts = np.asarray(self._log.counts, dtype=np.float64)
                clog = counts * np.log2(counts)
                self._entsums = np.add.reduceat(clog[self._var_idx], self._offsets[:-1])
        return self._entsums

    def to_dict(self) -> dict[Candidate, dict[Variant, int]]:
        """Materialize the full index; intended for tests and small logs."""
        return {cand: dict(proj.matches) for cand, proj in self.items()}

    def write_csv(self, out: TextIO) -> None:
        """Debug dump: one ``candidate,cardinality`` line in canonical order."""
        labels = self._log.labels
        out.write("candidate,cardinality\n")
        for pos, card in enumerate(self.cardinalities()):
            cand = self._decode(pos)
            name = "|".join(labels[a] for a in cand.elements)
            out.write(f"{name},{int(card)}\n")


# -- enumeration -------------------------------------------------------------


class _IncidenceCollector:
    """Accumulates (candidate key, variant index) incidences chunk by chunk.

    Starts in *full* mode, retaining a CSR of variant indices per candidate.
    Once total incidences exceed the retention limit it demotes itself to
    *aggregate* mode, keeping only per-candidate cardinality and entropy
    sums, merged associatively.  Either way the exact number of distinct
    candidates is known at every variant boundary, so the cap check is exact.
    """

    def __init__(self, log: EventLog, bk_type: BkType, size: int, cap: int):
        self._bk_type = bk_type
        self._size = size
        self._cap = cap
        counts = np.asarray(log.counts, dtype=np.int64)
        self._counts = counts
        self._clog = counts.astype(np.float64) * np.log2(counts.astype(np.float64))
        self.keys_buf = array("q")
        self.vars_buf = array("q")
        self._full_parts: list[tuple[np.ndarray, np.ndarray, np.ndarray]] | None = []
        self._incidences = 0
        self._seen: np.ndarray | None = None
        self._agg: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None

    def _check_cap(self, count: int) -> None:
        if count > self._cap:
            raise CandidateLimitError(self._bk_type, self._size, count=count, cap=self._cap)

    def _sorted_chunk(self) -> tuple[np.ndarray, np.ndarray]:
        keys = np.frombuffer(self.keys_buf, dtype=np.int64).copy()
        vids = np.frombuffer(self.vars_buf, dtype=np.int64).copy()
        order = np.argsort(keys, kind="stable")
        del self.keys_buf[:], self.vars_buf[:]
        return keys[order], vids[order]

    def _chunk_aggregate(self, keys: np.ndarray, vids: np.ndarray):
        uniq, group_sizes = np.unique(keys, return_counts=True)
        starts = np.concatenate([[0], np.cumsum(group_sizes)])[:-1]
        cards = np.add.reduceat(self._counts[vids], starts)
        ents = np.add.reduceat(self._clog[vids], starts)
        return uniq, cards, ents

    def _merge_aggregate(self, other) -> None:
        if self._agg is None:
            self._agg = other
        else:
            keys = np.concatenate([self._agg[0], other[0]])
            cards = np.concatenate([self._agg[1], other[1]])
            ents = np.concatenate([self._agg[2], other[2]])
            order = np.argsort(keys, kind="stable")
            keys, cards, ents = keys[order], cards[order], ents[order]
            uniq, group_sizes = np.unique(keys, return_counts=True)
            starts = np.concatenate([[0], np.cumsum(group_sizes)])[:-1]
            self._agg = (
                uniq,
                np.add.reduceat(cards, starts),
                np.add.reduceat(ents, starts),
            )
        self._check_cap(len(self._agg[0]))

    def _demote_to_aggregates(self) -> None:
        parts, self._full_parts = self._full_parts, None
        self._seen = None
        for uniq, vids, offsets in parts:
            cards = np.add.reduceat(self._counts[vids], offsets[:-1])
            ents = np.add.reduceat(self._clog[vids], offsets[:-1])
            self._merge_aggregate((uniq, cards, ents))

    def compact(self) -> None:
        if not self.keys_buf:
            return
        self._incidences += len(self.keys_buf)
        keys, vids = self._sorted_chunk()
        if self._full_parts is not None and self._incidences > _FULL_INCIDENCE_LIMIT:
            self._demote_to_aggregates()
        if self._full_parts is None:
            self._merge_aggregate(self._chunk_aggregate(keys, vids))
            return
        uniq, group_sizes = np.unique(keys, return_counts=True)
        offsets = np.concatenate([[0], np.cumsum(group_sizes)])
        self._full_parts.append((uniq, vids, offsets))
        self._seen = uniq if self._seen is None else np.union1d(self._seen, uniq)
        self._check_cap(len(self._seen))

    def finish(self, log: EventLog, bits: int) -> CandidateIndex:
        self.compact()
        if self._full_parts is not None:
            parts = self._full_parts
            if not parts:
                keys = np.zeros(0, dtype=np.int64)
                var_idx = np.zeros(0, dtype=np.int64)
                offsets = np.zeros(1, dtype=np.int64)
            elif len(parts) == 1:
                keys, var_idx, offsets = parts[0]
            else:
                all_keys = np.concatenate(
                    [np.repeat(u, np.diff(off)) for u, _, off in parts]
                )
                all_vids = np.concatenate([vids for _, vids, _ in parts])
                order = np.argsort(all_keys, kind="stable")
                skeys = all_keys[order]
                var_idx = all_vids[order]
                keys, group_sizes = np.unique(skeys, return_counts=True)
                offsets = np.concatenate([[0], np.cumsum(group_sizes)])
            self._check_cap(len(keys))
            return CandidateIndex(
                log, self._bk_type, self._size, keys, bits, var_idx=var_idx, offsets=offsets
            )
        keys, cards, ents = self._agg
        return CandidateIndex(
            log, self._bk_type, self._size, keys, bits, cards=cards, entsums=ents
        )


def enumerate_candidates(
    log: EventLog,
    bk_type: BkType,
    size: int,
    cap: int = DEFAULT_CANDIDATE_CAP,
) -> CandidateIndex:
    """Build the index of all size-``size`` candidates with matching traces.

    Generation is per variant with global deduplication, so only candidates
    with non-empty projections are ever produced, and each variant
    contributes its full trace count to a candidate exactly once.  Exceeding
    ``cap`` distinct candidates aborts with :class:`CandidateLimitError`
    rather than returning a partial index.
    """
    if size < 1:
        raise ValueError("candidate size must be >= 1")
    if cap < 1:
        raise ValueError("candidate cap must be >= 1")

    n_labels = len(log.labels)
    bits = max(1, (n_labels - 1).bit_length())
    if bits * size > 63:
        return _enumerate_tuple_path(log, bk_type, size, cap)

    emit = _EMITTERS[bk_type]
    collector = _IncidenceCollector(log, bk_type, size, cap)
    keys_buf = collector.keys_buf
    vars_buf = collector.vars_buf
    for vi, variant in enumerate(log.variants):
        before = len(keys_buf)
        try:
            emit(variant, size, bits, keys_buf, cap)
        except _LimitExceeded:
            raise CandidateLimitError(
                bk_type, size, count=len(keys_buf) - before, cap=cap
            ) from None
        vars_buf.extend([vi] * (len(keys_buf) - before))
        if len(keys_buf) >= _COMPACT_CHUNK:
            collector.compact()
    return collector.finish(log, bits)


def _enumerate_tuple_path(log: EventLog, bk_type: BkType, size: int, cap: int) -> CandidateIndex:
    acc: dict[tuple[int, ...], list[int]] = {}
    for vi, variant in enumerate(log.variants):
        for pattern in _tuple_patterns(variant, bk_type, size):
            hit = acc.get(pattern)
            if hit is None:
                acc[pattern] = [vi]
            else:
                hit.append(vi)
        if len(acc) > cap:
            raise CandidateLimitError(bk_type, size, count=len(acc), cap=cap)
    keys = sorted(acc)
    var_idx = np.fromiter(
        (vi for k in keys for vi in acc[k]),
        dtype=np.int64,
        count=sum(len(acc[k]) for k in keys),
    )
    offsets = np.concatenate([[0], np.cumsum([len(acc[k]) for k in keys], dtype=np.int64)])
    return CandidateIndex(log, bk_type, size, keys, None, var_idx=var_idx, offsets=offsets)


def dump_candidates_csv(index: CandidateIndex, out: TextIO) -> None:
    """Convenience wrapper used by the CLI's debug dump."""
    index.write_csv(out)
