import numpy as np
import pytest

from strandcode.bitseq import BitSeq
from strandcode.errors import DecodeFailure, LayoutError, SearchExhausted
from strandcode.oracle import check_p123, check_sd_exhaustive
from strandcode.positioning import (
    book_from_json,
    book_to_json,
    build_index_book,
    find_marker,
    locate_index,
)


@pytest.fixture(scope="module")
def book():
    return build_index_book(I=4, d=3, K_marker=8, r_I=16, seed=1)


def test_book_shape(book):
    assert len(book.codewords) == 16
    assert book.codeword_len == 20
    assert book.e == 1
    assert sum(book.segment_widths) == 20
    assert all(w <= book.K_marker + 1 for w in book.segment_widths)
    assert len(book.marker) == book.K_marker + 12


def test_book_is_substring_distant(book):
    assert check_sd_exhaustive(book.concat, book.codeword_len, book.d)


def test_book_piece_family(book):
    assert check_p123(book.codewords, 18, book.d)


def test_trivial_book():
    b = build_index_book(I=0, d=1, K_marker=4, r_I=6, seed=0)
    assert len(b.codewords) == 1
    assert locate_index(b.codewords[0], b) == 0


def test_locate_exact(book):
    for i in range(16):
        assert locate_index(book.codewords[i], book) == i


def test_locate_straddles(book):
    """Suffix of one codeword glued to the prefix of the next still reports
    the earlier index, at every split point."""
    W = book.codeword_len
    for i in range(15):
        for mu in range(1, W):
            y = book.codewords[i].window(mu, W - mu) + book.codewords[i + 1].window(0, mu)
            assert locate_index(y, book) == i


def test_locate_with_errors(book):
    rng = np.random.default_rng(4)
    W = book.codeword_len
    for _ in range(300):
        i = int(rng.integers(0, 16))
        y = book.codewords[i]
        p = int(rng.integers(0, W))
        y = y.with_bit(p, not y[p])
        assert locate_index(y, book) == i


def test_locate_rejects_garbage(book):
    rng = np.random.default_rng(5)
    fails = 0
    for _ in range(300):
        try:
            locate_index(BitSeq.random(book.codeword_len, rng), book)
        except DecodeFailure:
            fails += 1
    assert fails > 270


def test_find_marker_cyclic(book):
    rng = np.random.default_rng(6)
    blk = book.marker + BitSeq.random(70, rng)
    x = blk + blk + blk
    for off in range(90):
        y = x.window(off, 90)
        assert find_marker(y, book, 1) == (90 - off) % 90


def test_find_marker_tolerates_flip(book):
    rng = np.random.default_rng(7)
    blk = book.marker + BitSeq.random(70, rng)
    x = blk + blk + blk
    y = x.window(5, 90)
    y = y.with_bit(85 + 3, not y[85 + 3])
    assert find_marker(y, book, 1) == 85


def test_find_marker_rejects_markerless():
    b = build_index_book(I=0, d=1, K_marker=6, r_I=6, seed=0)
    with pytest.raises(LayoutError):
        find_marker(BitSeq.ones(40), b, 0)


def test_search_reports_infeasible():
    with pytest.raises(SearchExhausted):
        build_index_book(I=4, d=3, K_marker=8, r_I=6, seed=0, max_tries=40, max_restarts=5)


def test_json_roundtrip(book):
    assert book_from_json(book_to_json(book)) == book


def test_build_is_deterministic():
    a = build_index_book(I=3, d=3, K_marker=8, r_I=16, seed=42)
    b = build_index_book(I=3, d=3, K_marker=8, r_I=16, seed=42)
    assert a.codewords == b.codewords
