"""Codes that spread one message over a set of fixed-length strands.

Two constructions.  The wrapped family encodes once at the superstring
length ``k * (n - L_over) + L_over`` with the single-strand overlapping
code and slices the result into ``k`` length-``n`` windows at stride
``n - L_over``; consecutive strands then repeat each other's seam verbatim,
so the union of the per-strand read sets is itself a legal trace of the
superstring and decodes with the ordinary machinery.  The interleaved
family keeps the strands disjoint and instead gives every block of every
strand an absolute index from one shared book, so a single read names its
(strand, offset) pair outright; an outer MDS layer across strands then
buys back wholly corrupted or missing strands.

Strand sets are multisets: order never matters, duplicates are counted.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .bitseq import BitSeq
from .channel import ChannelConfig, Fragment, Trace, fragment
from .constrained import auto_cyclic
from .errors import DecodeFailure, InfeasibleParameters, LayoutError, SearchExhausted
from .positioning import IndexBook, build_index_book, default_r_I, find_marker, locate_index
from .trace_codes import (
    ReconReport,
    TraceParams,
    encode_trace,
    encode_trace_nondiv,
    reconstruct_trace,
    _C,
    _MARK,
    _V,
    _block_bytes,
    _build_layout,
    _check_book,
    _codec,
    _Layout,
    _marker_offenders,
    _merge_placed,
    _rs_decode,
    _rs_encode,
    _split_index_window,
)

__all__ = [
    "StrandSet",
    "strandset_to_json",
    "strandset_from_json",
    "fragment_strands",
    "wrap_length",
    "wrap_remainder",
    "wrap_attribute",
    "wrap_encode",
    "wrap_reconstruct",
    "wrap_decode",
    "MultiGamma0Params",
    "derive_multi_gamma0_params",
    "multi_gamma0_message_len",
    "multi_gamma0_book",
    "multi_gamma0_encode",
    "multi_gamma0_locate",
    "multi_gamma0_decode",
    "multi_gamma0_rs_message_len",
    "encode_multi_gamma0_rs",
    "reconstruct_multi_gamma0_rs",
]


# ---------------------------------------------------------------------------
# Strand sets


@dataclass(frozen=True, eq=False)
class StrandSet:
    """A multiset of equal-length strands.

    Equality is order free: two sets are equal when they hold the same
    strands with the same multiplicities.  Serialization sorts the strands
    lexicographically so equal sets print identically.
    """

    n: int
    strands: tuple[BitSeq, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "strands", tuple(self.strands))
        if not self.strands:
            raise ValueError("a strand set needs at least one strand")
        for i, s in enumerate(self.strands):
            if len(s) != self.n:
                raise LayoutError(f"strand {i} has {len(s)} bits, expected n={self.n}")

    @property
    def k(self) -> int:
        return len(self.strands)

    def canonical(self) -> "StrandSet":
        """The same multiset with strands in lexicographic order."""
        return StrandSet(self.n, tuple(sorted(self.strands, key=lambda s: s.to_text())))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StrandSet):
            return NotImplemented
        return self.n == other.n and sorted(s.to_text() for s in self.strands) == sorted(
            s.to_text() for s in other.strands
        )

    def __hash__(self) -> int:
        return hash((self.n, tuple(sorted(s.to_text() for s in self.strands))))


def strandset_to_json(ss: StrandSet) -> str:
    """Serialize in canonical order: ``{"n": ..., "k": ..., "strands": [...]}``."""
    return json.dumps(
        {"n": ss.n, "k": ss.k, "strands": sorted(s.to_text() for s in ss.strands)}
    )


def strandset_from_json(text: str) -> StrandSet:
    obj = json.loads(text)
    ss = StrandSet(int(obj["n"]), tuple(BitSeq.from_text(t) for t in obj["strands"]))
    if ss.k != int(obj["k"]):
        raise LayoutError(f"header says k={obj['k']} but {ss.k} strands follow")
    return ss


def fragment_strands(ss: StrandSet, cfg: ChannelConfig, *, N: int | None = None) -> Trace:
    """Fragment every strand and pool the reads into one shuffled union.

    Strand identities stay attached as truth annotations, which decoders
    ignore and audits may use; ``strip_truth`` removes them.  ``N`` records
    the superstring length when the set came from the wrapped encoder.
    """
    per = [fragment(s, cfg, strand=i) for i, s in enumerate(ss.strands)]
    frags = [f for tr in per for f in tr.fragments]
    order = np.random.default_rng([cfg.seed, ss.k, 0x6D78]).permutation(len(frags))
    return Trace(
        ss.n,
        cfg.L_min,
        cfg.L_over,
        cfg.e,
        tuple(frags[int(j)] for j in order),
        k=ss.k,
        N=N,
    )


# ---------------------------------------------------------------------------
# Wrapped family: slices of one long overlapping codeword


def wrap_length(n: int, k: int, L_over: int) -> int:
    """Superstring length covered by k length-n windows at stride n - L_over."""
    if k < 1:
        raise ValueError("need at least one strand")
    if not 0 <= L_over < n:
        raise ValueError("need 0 <= L_over < n")
    return k * (n - L_over) + L_over


def wrap_remainder(n: int, L_min: int, L_over: int) -> int:
    """Length left over after packing overlapping blocks into n.

    The first block spends ``L_min`` symbols and every further one
    ``L_min - L_over`` fresh ones, so the leftover is ``(n - L_over) mod
    (L_min - L_over)``; without overlap that is just ``n mod L_min``.
    """
    if not 0 <= L_over < L_min <= n:
        raise ValueError("need 0 <= L_over < L_min <= n")
    return (n - L_over) % (L_min - L_over)


def wrap_attribute(offset: int, length: int, n: int, k: int, L_over: int) -> tuple[int, int]:
    """Map a superstring offset back to its (strand, in-strand offset) pair.

    A read longer than the seam fits exactly one strand window.  A read
    short enough to sit wholly inside a seam would fit two; by convention
    it is charged to the earlier strand.
    """
    stride = n - L_over
    if stride < 1 or length < 1:
        raise ValueError("need L_over < n and a nonempty read")
    strand = max(0, -((n - offset - length) // stride))
    t = offset - strand * stride
    if strand >= k or t < 0 or t + length > n:
        raise DecodeFailure(
            f"read at superstring offset {offset} does not fit any of the {k} strand windows"
        )
    return strand, t


def _check_wrap_geometry(n: int, k: int, params: TraceParams) -> None:
    N = wrap_length(n, k, params.L_over)
    if params.n != N:
        raise LayoutError(
            f"parameters are for length {params.n}, but k={k} strands of "
            f"length {n} wrap a superstring of length {N}"
        )
    if n < params.L_min:
        raise ValueError("strands must be at least one block long")


def _slice_strands(w: BitSeq, n: int, k: int, L_over: int) -> StrandSet:
    stride = n - L_over
    return StrandSet(n, tuple(w.window(i * stride, n) for i in range(k)))


def wrap_encode(
    m: BitSeq, n: int, k: int, params: TraceParams, book: IndexBook | None = None
) -> StrandSet:
    """Encode one message into k strands that overlap pairwise by L_over.

    ``params`` must be derived at the superstring length ``wrap_length(n,
    k, L_over)``; the codeword is computed once at that length and sliced,
    so consecutive strands agree on their seams by construction.
    """
    _check_wrap_geometry(n, k, params)
    if params.divisible:
        w = encode_trace(m, params, book)
    else:
        w = encode_trace_nondiv(m, params, book)
    return _slice_strands(w, n, k, params.L_over)


def wrap_reconstruct(
    mt: Trace, n: int, k: int, params: TraceParams, book: IndexBook | None = None
) -> ReconReport:
    """Decode a pooled read set as one trace of the unsliced superstring.

    Which strand a read came from is irrelevant for decoding: a read at
    in-strand offset t of strand i is the superstring read at offset
    ``i * (n - L_over) + t``, and the union of legal per-strand traces is a
    legal trace of the superstring.  Reported offsets are superstring
    positions; :func:`wrap_attribute` converts them back.
    """
    _check_wrap_geometry(n, k, params)
    if mt.k != k:
        raise LayoutError(f"trace header says k={mt.k}, expected {k}")
    if mt.n != n or mt.L_min != params.L_min or mt.L_over != params.L_over:
        raise LayoutError("trace geometry does not match the code parameters")
    if mt.N is not None and mt.N != params.n:
        raise LayoutError(f"trace header says N={mt.N}, expected {params.n}")
    if mt.e > params.e:
        raise LayoutError("trace error budget exceeds the code tolerance")
    frags = tuple(Fragment(f.bits, None, None, None) for f in mt.fragments)
    tr = Trace(params.n, params.L_min, params.L_over, mt.e, frags)
    return reconstruct_trace(tr, params, book)


def wrap_decode(
    mt: Trace, n: int, k: int, params: TraceParams, book: IndexBook | None = None
) -> tuple[StrandSet, BitSeq]:
    """Recover the strand multiset and the message from a pooled read set."""
    rep = wrap_reconstruct(mt, n, k, params, book)
    if params.divisible:
        w = encode_trace(rep.message, params, book)
    else:
        w = encode_trace_nondiv(rep.message, params, book)
    return _slice_strands(w, n, k, params.L_over), rep.message


# ---------------------------------------------------------------------------
# Interleaved family: disjoint strands, globally indexed blocks.  Strand i
# reads v . p . c_{i*n_bar} . v . p . c_{i*n_bar+1} . ... . tail: each
# L_min-period carries a payload slice first and its marker and absolute
# index at the end, so every length-L_min window covers one whole
# marker-index pair, cut cyclically at worst.


@dataclass(frozen=True)
class MultiGamma0Params:
    """Geometry for k disjoint strands with globally indexed blocks."""

    n: int
    k: int
    e: int
    L_min: int
    d: int
    ell: int
    I: int
    r_I: int
    K: int
    m_prime: int
    w_window: int
    w_floor: int
    violations: tuple[str, ...] = ()

    @property
    def marker_len(self) -> int:
        return self.K + self.ell

    @property
    def L_over(self) -> int:
        return 0

    @property
    def L_star(self) -> int:
        """Per-strand leftover after the whole blocks: n mod L_min."""
        return wrap_remainder(self.n, self.L_min, 0)

    @property
    def n_bar(self) -> int:
        return (self.n - self.L_star) // self.L_min

    @property
    def index_count(self) -> int:
        return self.k * self.n_bar

    @property
    def feasible(self) -> bool:
        return not self.violations

    @property
    def rate(self) -> float:
        return self.n_bar * (self.m_prime - self.d) / self.n


def derive_multi_gamma0_params(
    n: int,
    k: int,
    e: int,
    *,
    a: float | None = None,
    L_min: int | None = None,
    K: int | None = None,
    r_I: int | None = None,
    strict: bool = True,
) -> MultiGamma0Params:
    """Block geometry for k strands of length n against e errors per read.

    The shared index space must name all ``k * floor(n / L_min)`` blocks,
    so the index width grows with ``log2(n k)`` rather than ``log2(n)``.
    The per-strand leftover ``n mod L_min`` stays at the strand tail and
    must not exceed the payload width ``m'``: any more and the last
    length-``L_min`` window of a strand would no longer cover a whole
    marker-index pair.
    """
    if n < 1 or k < 1 or e < 0:
        raise ValueError("need n >= 1, k >= 1 and e >= 0")
    lognk = math.log2(n * k)
    if L_min is None:
        if a is None:
            raise ValueError("either a or L_min must be given")
        L_min = math.ceil(a * lognk)
    if n < L_min:
        raise ValueError("strands must hold at least one block")
    d = 2 * e + 1
    ell = len(auto_cyclic(d))
    L_star = wrap_remainder(n, L_min, 0)
    n_bar = (n - L_star) // L_min
    I = max(1, math.ceil(math.log2(n_bar * k))) if n_bar * k > 1 else 1
    if K is None:
        K = math.ceil(math.sqrt(lognk))
    if r_I is None:
        r_I = default_r_I(I, d)
    m_prime = L_min - (I + r_I + K + ell)

    violations: list[str] = []
    if m_prime < d + 1:
        violations.append("payload-space")
    if K // 4 >= d:
        w_window, w_floor = K // 4, d
    elif K >= d:
        w_window, w_floor = K, d
    else:
        violations.append("weight-window")
        w_window, w_floor = max(K, 1), 1
    if m_prime >= d + 1:
        cap = _codec(w_window, w_floor, m_prime, 512).msg_len
        if cap < m_prime - d:
            violations.append("payload-capacity")
    if L_star > max(m_prime, 0):
        violations.append("tail-window")

    params = MultiGamma0Params(
        n=n, k=k, e=e, L_min=L_min, d=d, ell=ell, I=I, r_I=r_I, K=K,
        m_prime=m_prime, w_window=w_window, w_floor=w_floor,
        violations=tuple(violations),
    )
    if strict and violations:
        raise InfeasibleParameters("infeasible block geometry: " + ", ".join(violations))
    return params


def multi_gamma0_message_len(params: MultiGamma0Params) -> int:
    """Total message bits over all k strands."""
    return params.index_count * (params.m_prime - params.d)


def multi_gamma0_book(params: MultiGamma0Params, seed: int = 0) -> IndexBook:
    return build_index_book(params.I, params.d, params.K, r_I=params.r_I, seed=seed)


@lru_cache(maxsize=None)
def _multi_layout(params: MultiGamma0Params) -> _Layout:
    width = params.I + params.r_I
    segs = [(_MARK, params.marker_len), (_C, width), (_V, params.m_prime)]
    return _build_layout(params.L_min, segs)


@lru_cache(maxsize=None)
def _multi_tail(params: MultiGamma0Params) -> BitSeq:
    # never decoded; it only has to respect the weight constraint so that
    # no window over the strand tail can fake a marker
    if params.L_star == 0:
        return BitSeq.zeros(0)
    codec = _codec(params.w_window, params.w_floor, params.L_star, 512)
    return codec.encode(BitSeq.zeros(codec.msg_len))


def multi_gamma0_encode(
    messages: Sequence[BitSeq], params: MultiGamma0Params, book: IndexBook | None = None
) -> StrandSet:
    """Encode one message block per strand under a shared index space.

    Block j of strand i carries the absolute index ``i * n_bar + j``, so the
    decoder needs no overlap between reads, and no two blocks anywhere in
    the set look alike.
    """
    if not params.feasible:
        raise InfeasibleParameters(
            "cannot encode with violated geometry: " + ", ".join(params.violations)
        )
    book = book if book is not None else multi_gamma0_book(params)
    _check_book(params, book, params.d)
    if len(messages) != params.k:
        raise ValueError(f"need {params.k} strand messages, got {len(messages)}")
    body = params.m_prime - params.d
    want = params.n_bar * body
    codec = _codec(params.w_window, params.w_floor, params.m_prime, 512)
    pad = BitSeq.zeros(codec.msg_len - body)
    tail = _multi_tail(params).to_numpy()
    marker = book.marker.to_numpy()
    width = params.I + params.r_I
    L_min = params.L_min
    strands = []
    for i, m_i in enumerate(messages):
        if len(m_i) != want:
            raise ValueError(f"strand {i} message must have {want} bits, got {len(m_i)}")
        arr = np.zeros(params.n, dtype=np.uint8)
        for j in range(params.n_bar):
            v = codec.encode(m_i.window(j * body, body) + pad)
            base = j * L_min
            arr[base : base + params.m_prime] = v.to_numpy()
            mk = base + params.m_prime
            arr[mk : mk + params.marker_len] = marker
            cw = book.codewords[i * params.n_bar + j]
            arr[mk + params.marker_len : mk + params.marker_len + width] = cw.to_numpy()
        if params.L_star:
            arr[params.n_bar * L_min :] = tail
        if _marker_offenders(arr, L_min, params.d, marker, params.n_bar, phase0=params.m_prime):
            raise SearchExhausted(
                f"payload bits of strand {i} collided with the marker pattern"
            )
        strands.append(BitSeq.from_numpy(arr))
    return StrandSet(params.n, tuple(strands))


def _locate_multi(
    y: BitSeq, s: int, params: MultiGamma0Params, book: IndexBook, lay: _Layout
) -> tuple[int, int]:
    """(strand, in-strand offset) of a read, from its window at s alone."""
    width = params.I + params.r_I
    win = y.window(s, params.L_min)
    q = find_marker(win, book, params.e)
    S, P, mu = _split_index_window(win, q, lay, width)
    if mu == width:
        abs_i = locate_index(P, book)
    else:
        abs_i = locate_index(S + P, book) + 1
    if abs_i >= params.index_count:
        raise DecodeFailure("block index runs past the last block")
    strand, j = divmod(abs_i, params.n_bar)
    off = params.m_prime + j * params.L_min - (s + q)
    if off < 0 or off + len(y) > params.n:
        raise DecodeFailure("located read does not fit inside its strand")
    return strand, off


def multi_gamma0_locate(
    y: BitSeq, params: MultiGamma0Params, book: IndexBook | None = None
) -> tuple[int, int]:
    """Name the (strand, offset) of a single read from its leading window."""
    if len(y) < params.L_min:
        raise LayoutError("a read is shorter than the block length")
    book = book if book is not None else multi_gamma0_book(params)
    return _locate_multi(y, 0, params, book, _multi_layout(params))


def _check_multi_meta(mt: Trace, params: MultiGamma0Params) -> None:
    if mt.k != params.k:
        raise LayoutError(f"trace header says k={mt.k}, expected {params.k}")
    if mt.n != params.n or mt.L_min != params.L_min or mt.L_over != 0:
        raise LayoutError("trace geometry does not match the code parameters")
    if mt.e > params.e:
        raise LayoutError("trace error budget exceeds the code tolerance")


def _multi_reconstruct(
    mt: Trace, params: MultiGamma0Params, book: IndexBook, lenient: bool
) -> tuple[tuple[BitSeq, ...], ReconReport, set[int]]:
    _check_multi_meta(mt, params)
    _check_book(params, book, params.d)
    lay = _multi_layout(params)
    placed: dict[int, int] = {}
    skipped: set[int] = set()
    for idx, frag in enumerate(mt.fragments):
        y = frag.bits
        if len(y) < params.L_min:
            raise LayoutError("a read is shorter than the block length")
        last: Exception | None = None
        for s in range(len(y) - params.L_min + 1) if lenient else range(1):
            try:
                strand, off = _locate_multi(y, s, params, book, lay)
            except (LayoutError, DecodeFailure) as exc:
                last = exc
                continue
            placed[idx] = strand * params.n + off
            break
        else:
            if not lenient:
                raise DecodeFailure(f"read {idx} cannot be located") from last
            skipped.add(idx)

    merged, tie_pos, gaps = _merge_placed(mt, placed, params.k * params.n, lenient)

    codec = _codec(params.w_window, params.w_floor, params.m_prime, 512)
    body = params.m_prime - params.d
    messages: list[BitSeq] = []
    damaged: set[int] = set()
    for i in range(params.k):
        m_i = BitSeq.zeros(0)
        for j in range(params.n_bar):
            base = i * params.n + j * params.L_min
            w_ij = BitSeq.from_numpy(merged[base : base + params.m_prime])
            try:
                plain = codec.decode(w_ij)
            except ValueError:
                # a corrupted or missing span leaves the constrained code;
                # report zeros and let the outer layer or the reliability
                # audit deal with it
                damaged.add(i)
                plain = BitSeq.zeros(codec.msg_len)
            m_i = m_i + plain.window(0, body)
        messages.append(m_i)

    located: list[tuple[int | None, int | None]] = []
    max_err = 0
    for idx in range(len(mt.fragments)):
        if idx in placed:
            off = placed[idx]
            arr = mt.fragments[idx].bits.to_numpy()
            err = int((arr != merged[off : off + len(arr)]).sum())
            max_err = max(max_err, err)
            located.append((off, err))
        else:
            located.append((None, None))
    reliable = (
        not skipped and not gaps and not tie_pos and not damaged and max_err <= params.e
    )
    full = BitSeq.zeros(0)
    for m_i in messages:
        full = full + m_i
    report = ReconReport(
        message=full,
        located=tuple(located),
        tie_positions=tie_pos,
        reliable=reliable,
    )
    return tuple(messages), report, damaged


def multi_gamma0_decode(
    mt: Trace, params: MultiGamma0Params, book: IndexBook | None = None
) -> tuple[tuple[BitSeq, ...], ReconReport]:
    """Per-strand messages plus a placement report for the pooled reads.

    Every read is placed independently from its own marker and index, so
    the union may arrive in any order.  Reported offsets are flattened as
    ``strand * n + offset``.
    """
    book = book if book is not None else multi_gamma0_book(params)
    messages, report, _ = _multi_reconstruct(mt, params, book, lenient=False)
    return messages, report


# ---------------------------------------------------------------------------
# Outer MDS layer across strands


def _multi_rs_geometry(params: MultiGamma0Params, tau: int) -> tuple[int, int]:
    if tau < 0 or 2 * tau >= params.k:
        raise ValueError("need 0 <= 2 * tau < k")
    if params.k > 255:
        raise InfeasibleParameters("outer code length k exceeds the field size")
    per = params.n_bar * (params.m_prime - params.d)
    lane_bytes = per // 8
    if lane_bytes < 1:
        raise InfeasibleParameters("strand payload too small for one outer symbol")
    return lane_bytes, 8 * lane_bytes


def multi_gamma0_rs_message_len(params: MultiGamma0Params, tau: int) -> int:
    _, block_bits = _multi_rs_geometry(params, tau)
    return (params.k - 2 * tau) * block_bits


def encode_multi_gamma0_rs(
    m: BitSeq, params: MultiGamma0Params, tau: int, book: IndexBook | None = None
) -> StrandSet:
    """Spread a message over k - 2 tau data strands plus 2 tau parity strands.

    Byte s of every strand's payload forms one outer codeword, so a wholly
    corrupted strand costs one symbol per lane and any tau strands are
    recoverable.
    """
    lane_bytes, block_bits = _multi_rs_geometry(params, tau)
    want = multi_gamma0_rs_message_len(params, tau)
    if len(m) != want:
        raise ValueError(f"message must have {want} bits, got {len(m)}")
    data = [m.window(i * block_bits, block_bits) for i in range(params.k - 2 * tau)]
    lanes = [_block_bytes(b, lane_bytes) for b in data]
    parity = [[0] * lane_bytes for _ in range(2 * tau)]
    for s in range(lane_bytes):
        word = _rs_encode([lanes[i][s] for i in range(len(data))], 2 * tau)
        for j in range(2 * tau):
            parity[j][s] = word[len(data) + j]
    blocks = list(data)
    for j in range(2 * tau):
        bits = BitSeq.zeros(0)
        for s in range(lane_bytes):
            bits = bits + BitSeq.from_int(parity[j][s], 8)
        blocks.append(bits)
    per = params.n_bar * (params.m_prime - params.d)
    messages = [b + BitSeq.zeros(per - block_bits) for b in blocks]
    return multi_gamma0_encode(messages, params, book)


def reconstruct_multi_gamma0_rs(
    mt: Trace, params: MultiGamma0Params, tau: int, book: IndexBook | None = None
) -> ReconReport:
    """Decode the union leniently and correct up to tau bad strands.

    Reads that cannot be located are dropped and missing spans zero
    filled, so a corrupted or lost strand surfaces as one bad outer symbol
    per lane rather than aborting the decode.  More than tau bad strands
    is reported as a failure, by lane decode failure or by the corrected
    positions outnumbering tau.
    """
    lane_bytes, block_bits = _multi_rs_geometry(params, tau)
    book = book if book is not None else multi_gamma0_book(params)
    raw, report, damaged = _multi_reconstruct(mt, params, book, lenient=True)
    words = [_block_bytes(m_i.window(0, block_bits), lane_bytes) for m_i in raw]
    bad: set[int] = set(damaged)
    fixed = [list(w) for w in words]
    for s in range(lane_bytes):
        word = [words[i][s] for i in range(params.k)]
        out, positions = _rs_decode(word, 2 * tau)
        bad.update(positions)
        for i in range(params.k):
            fixed[i][s] = out[i]
    if len(bad) > tau:
        raise DecodeFailure(
            f"{len(bad)} corrupted strands exceed the outer budget {tau}"
        )
    message = BitSeq.zeros(0)
    for i in range(params.k - 2 * tau):
        for s in range(lane_bytes):
            message = message + BitSeq.from_int(fixed[i][s], 8)
    return dataclasses.replace(report, message=message)
