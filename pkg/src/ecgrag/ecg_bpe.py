"""Byte-pair-encoding tokenizer over quantized ECG signals.

A record is min-max normalized (jointly over all leads), binned into a small
symbol alphabet, and flattened lead-major into one symbol sequence. Merges
are then learned exactly like text BPE: repeatedly replace the most frequent
adjacent pair with a fresh token, ties broken by the lexicographically
smallest (left, right) pair.

Training keeps pair counts incrementally (doubly linked symbol list plus a
lazy max-heap), so the cost is bounded by the corpus length instead of
``num_merges * corpus``. Encoding applies merges by ascending rank with a
heap over candidate positions, which reproduces sequential left-to-right
replacement.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyCorpusError, SymbolOutOfRangeError, UnknownTokenError
from .ingest import EcgRecord

DEFAULT_ALPHABET = 26
DEFAULT_MERGES = 3500


@dataclass
class BpeVocab:
    """Learned merge table; token ids are dense, base symbols first."""

    alphabet_size: int
    merges: list[tuple[int, int]]
    token_strings: dict[int, tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.token_strings:
            self.token_strings = _expand_token_strings(self.alphabet_size, self.merges)
        seen = set()
        for left, right in self.merges:
            if (left, right) in seen:
                raise ValueError(f"duplicate merge {(left, right)}")
            seen.add((left, right))

    @property
    def vocab_size(self) -> int:
        return self.alphabet_size + len(self.merges)

    def merge_ranks(self) -> dict[tuple[int, int], int]:
        return {pair: i for i, pair in enumerate(self.merges)}

    def to_json(self) -> str:
        return json.dumps({
            "alphabet_size": self.alphabet_size,
            "merges": [[left, right] for left, right in self.merges],
        }, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "BpeVocab":
        obj = json.loads(text)
        return cls(alphabet_size=int(obj["alphabet_size"]),
                   merges=[(int(l), int(r)) for l, r in obj["merges"]])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "BpeVocab":
        return cls.from_json(Path(path).read_text())


def _expand_token_strings(alphabet_size: int,
                          merges: list[tuple[int, int]]) -> dict[int, tuple[int, ...]]:
    strings: dict[int, tuple[int, ...]] = {i: (i,) for i in range(alphabet_size)}
    for i, (left, right) in enumerate(merges):
        token = alphabet_size + i
        if left not in strings or right not in strings:
            raise ValueError(f"merge {i} references undefined token")
        strings[token] = strings[left] + strings[right]
    return strings


@dataclass
class TokenSequence:
    ids: list[int]
    source_record_id: str = ""

    def __len__(self) -> int:
        return len(self.ids)


def quantize(record: EcgRecord, alphabet_size: int = DEFAULT_ALPHABET) -> np.ndarray:
    """Quantize a preprocessed record into symbols 0..alphabet_size-1.

    Min-max normalization is joint over all leads; leads are concatenated
    lead-major. A degenerate (constant) record maps to all-zero symbols.
    """
    if alphabet_size < 2:
        raise ValueError("alphabet_size must be >= 2")
    flat = record.data.reshape(-1)
    lo, hi = float(np.min(flat)), float(np.max(flat))
    if hi == lo:
        return np.zeros(flat.size, dtype=np.int32)
    norm = (flat - lo) / (hi - lo)
    symbols = np.minimum((norm * alphabet_size).astype(np.int32), alphabet_size - 1)
    return symbols


def train_bpe(corpus, num_merges: int = DEFAULT_MERGES,
              alphabet_size: int = DEFAULT_ALPHABET) -> BpeVocab:
    """Learn up to ``num_merges`` merges over integer symbol sequences.

    Stops early once no adjacent pair occurs at least twice. Pairs never
    span sequence boundaries. Fully deterministic.
    """
    sequences = [np.asarray(s, dtype=np.int64) for s in corpus]
    if not sequences or all(len(s) == 0 for s in sequences):
        raise EmptyCorpusError("BPE training corpus is empty")
    for s in sequences:
        if len(s) and (s.min() < 0 or s.max() >= alphabet_size):
            raise SymbolOutOfRangeError(
                f"corpus symbols must be in [0, {alphabet_size})")

    # Flat symbol buffer with per-sequence boundary breaks in the links.
    sym: list[int] = []
    nxt: list[int] = []
    prv: list[int] = []
    for s in sequences:
        start = len(sym)
        sym.extend(int(v) for v in s)
        nxt.extend(range(start + 1, start + len(s)))
        nxt.append(-1)
        prv.append(-1)
        prv.extend(range(start, start + len(s) - 1))
    dead = -1  # marker written into sym for consumed nodes

    counts: dict[tuple[int, int], int] = {}
    occ: dict[tuple[int, int], list[int]] = {}
    for p in range(len(sym)):
        q = nxt[p]
        if q == -1:
            continue
        pair = (sym[p], sym[q])
        counts[pair] = counts.get(pair, 0) + 1
        occ.setdefault(pair, []).append(p)

    heap: list[tuple[int, int, int]] = [(-c, a, b) for (a, b), c in counts.items()]
    heapq.heapify(heap)

    def dec(pair: tuple[int, int]) -> None:
        c = counts.get(pair, 0) - 1
        if c > 0:
            counts[pair] = c
        else:
            counts.pop(pair, None)

    def inc(pair: tuple[int, int], pos: int) -> None:
        c = counts.get(pair, 0) + 1
        counts[pair] = c
        occ.setdefault(pair, []).append(pos)
        heapq.heappush(heap, (-c, pair[0], pair[1]))

    merges: list[tuple[int, int]] = []
    while len(merges) < num_merges:
        best = None
        while heap:
            neg, a, b = heapq.heappop(heap)
            actual = counts.get((a, b), 0)
            if actual != -neg:
                if actual >= 2:  # stale entry, refresh with the live count
                    heapq.heappush(heap, (-actual, a, b))
                continue
            best = (a, b)
            break
        if best is None or counts.get(best, 0) < 2:
            break  # no pair occurs at least twice anymore
        a, b = best
        token = alphabet_size + len(merges)
        for p in sorted(occ.pop(best, [])):
            if sym[p] != a:
                continue
            q = nxt[p]
            if q == -1 or sym[q] != b:
                continue
            left, right = prv[p], nxt[q]
            if left != -1:
                dec((sym[left], a))
            if right != -1:
                dec((b, sym[right]))
            dec((a, b))
            sym[p] = token
            sym[q] = dead
            nxt[p] = right
            if right != -1:
                prv[right] = p
            if left != -1:
                inc((sym[left], token), left)
            if right != -1:
                inc((token, sym[right]), p)
        counts.pop(best, None)
        merges.append(best)

    return BpeVocab(alphabet_size=alphabet_size, merges=merges)


def encode(symbols, vocab: BpeVocab, source_record_id: str = "") -> TokenSequence:
    """Apply learned merges (in rank order, leftmost first within a rank)."""
    seq = [int(v) for v in symbols]
    for v in seq:
        if v < 0 or v >= vocab.alphabet_size:
            raise SymbolOutOfRangeError(f"symbol {v} outside alphabet")
    if len(seq) < 2:
        return TokenSequence(ids=seq, source_record_id=source_record_id)

    ranks = vocab.merge_ranks()
    sym = seq[:]
    nxt = list(range(1, len(sym))) + [-1]
    prv = [-1] + list(range(len(sym) - 1))
    heap: list[tuple[int, int, int, int]] = []
    for p in range(len(sym) - 1):
        r = ranks.get((sym[p], sym[p + 1]))
        if r is not None:
            heap.append((r, p, sym[p], sym[p + 1]))
    heapq.heapify(heap)

    def push(p: int) -> None:
        q = nxt[p]
        if p == -1 or q == -1:
            return
        r = ranks.get((sym[p], sym[q]))
        if r is not None:
            heapq.heappush(heap, (r, p, sym[p], sym[q]))

    while heap:
        r, p, a, b = heapq.heappop(heap)
        if sym[p] != a:
            continue
        q = nxt[p]
        if q == -1 or sym[q] != b:
            continue
        sym[p] = vocab.alphabet_size + r
        sym[q] = -1
        nxt[p] = nxt[q]
        if nxt[p] != -1:
            prv[nxt[p]] = p
        if prv[p] != -1:
            push(prv[p])
        push(p)

    ids = [v for v in sym if v != -1]
    return TokenSequence(ids=ids, source_record_id=source_record_id)


def decode(tokens: TokenSequence, vocab: BpeVocab) -> np.ndarray:
    """Exact inverse of :func:`encode`."""
    out: list[int] = []
    for tid in tokens.ids:
        try:
            out.extend(vocab.token_strings[tid])
        except KeyError:
            raise UnknownTokenError(f"token id {tid} not in vocabulary") from None
    return np.asarray(out, dtype=np.int32)
