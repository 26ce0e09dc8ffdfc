"""Associative-array algebra against brute-force oracles."""

import random

import pytest

from podwatch.assoc import (
    AssociativeArray,
    Collision,
    CompareOp,
    InvalidRangeError,
    InvalidTripleError,
    from_tsv,
    to_tsv,
)


def random_array(rng, max_dim=16, density=0.3, rows=None, cols=None, integral=False):
    rows = rows or [f"r{i:02d}" for i in range(rng.randint(1, max_dim))]
    cols = cols or [f"c{i:02d}" for i in range(rng.randint(1, max_dim))]
    entries = {}
    for r in rows:
        for c in cols:
            if rng.random() < density:
                v = float(rng.randint(-5, 5)) if integral else rng.uniform(-10, 10)
                if v != 0:
                    entries[(r, c)] = v
    return AssociativeArray(entries)


def dense_multiply_oracle(a, b):
    """Triple-loop product with string keys mapped to indices."""
    rows = a.rows
    inner = sorted(set(a.cols) | set(b.rows))
    cols = b.cols
    out = {}
    for r in rows:
        for c in cols:
            acc = 0.0
            for k in inner:
                acc += a.get(r, k) * b.get(k, c)
            if acc != 0.0:
                out[(r, c)] = acc
    return AssociativeArray(out)


# -- fromTriples ---------------------------------------------------------


def test_from_triples_single():
    a = AssociativeArray.from_triples([("r1", "c1", 1.0)])
    assert a.nnz == 1
    assert a.rows == ("r1",)
    assert a.cols == ("c1",)
    assert a.get("r1", "c1") == 1.0


def test_from_triples_sum_collision():
    a = AssociativeArray.from_triples([("r1", "c1", 2.0), ("r1", "c1", 3.0)], Collision.SUM)
    assert a.get("r1", "c1") == 5.0
    last = AssociativeArray.from_triples([("r1", "c1", 2.0), ("r1", "c1", 3.0)], Collision.LAST)
    assert last.get("r1", "c1") == 3.0


def test_from_triples_matches_hash_accumulation_oracle():
    rng = random.Random(11)
    keys = [(f"r{rng.randint(0, 20)}", f"c{rng.randint(0, 20)}") for _ in range(500)]
    triples = [(r, c, rng.uniform(-4, 4)) for r, c in keys]
    oracle = {}
    for r, c, v in triples:
        oracle[(r, c)] = oracle.get((r, c), 0.0) + v
    oracle = {k: v for k, v in oracle.items() if v != 0}
    built = AssociativeArray.from_triples(triples, Collision.SUM)
    assert dict((k, v) for k in oracle for v in [oracle[k]]) == {
        (r, c): v for r, c, v in built.triples()
    }


def test_from_triples_order_insensitive_under_sum():
    rng = random.Random(5)
    triples = [(f"r{rng.randint(0, 8)}", f"c{rng.randint(0, 8)}", float(rng.randint(-3, 3))) for _ in range(80)]
    shuffled = triples[:]
    rng.shuffle(shuffled)
    assert AssociativeArray.from_triples(triples) == AssociativeArray.from_triples(shuffled)


def test_from_triples_rejects_bad_input():
    with pytest.raises(InvalidTripleError):
        AssociativeArray.from_triples([("", "c", 1.0)])
    with pytest.raises(InvalidTripleError):
        AssociativeArray.from_triples([("r", "", 1.0)])
    with pytest.raises(InvalidTripleError):
        AssociativeArray.from_triples([("r", "c", float("nan"))])


def test_zero_entries_dropped_everywhere():
    a = AssociativeArray.from_triples([("r", "c", 2.0), ("r", "c", -2.0)], Collision.SUM)
    assert a.nnz == 0
    assert a.rows == ()
    assert a.cols == ()


# -- multiply -----------------------------------------------------------


def test_multiply_identity():
    rng = random.Random(2)
    a = random_array(rng)
    ident = AssociativeArray.identity(a.cols)
    assert a.multiply(ident) == a


def test_multiply_empty():
    rng = random.Random(3)
    b = random_array(rng)
    assert AssociativeArray.empty().multiply(b) == AssociativeArray.empty()


def test_multiply_matches_dense_oracle():
    rng = random.Random(7)
    for _ in range(60):
        shared = [f"k{i:02d}" for i in range(rng.randint(1, 16))]
        a = random_array(rng, cols=shared)
        b = random_array(rng, rows=shared)
        assert a.multiply(b).allclose(dense_multiply_oracle(a, b))


def test_transpose_product_identity():
    rng = random.Random(13)
    for _ in range(40):
        shared = [f"k{i:02d}" for i in range(rng.randint(1, 12))]
        a = random_array(rng, cols=shared, integral=True)
        b = random_array(rng, rows=shared, integral=True)
        assert a.multiply(b).transpose() == b.transpose().multiply(a.transpose())


def test_multiply_distributes_over_add():
    rng = random.Random(17)
    for _ in range(40):
        shared = [f"k{i:02d}" for i in range(rng.randint(1, 10))]
        a = random_array(rng, cols=shared, integral=True)
        b = random_array(rng, rows=shared, integral=True)
        c = random_array(rng, rows=shared, integral=True)
        left = a.multiply(b.add(c))
        right = a.multiply(b).add(a.multiply(c))
        assert left == right


# -- transpose -----------------------------------------------------------


def test_transpose_involution_and_swap():
    rng = random.Random(23)
    a = random_array(rng, max_dim=32)
    assert a.transpose().transpose() == a
    swapped = {(c, r): v for r, c, v in a.triples()}
    assert {(r, c): v for r, c, v in a.transpose().triples()} == swapped
    single = AssociativeArray.from_triples([("a", "b", 2.0)])
    assert single.transpose().get("b", "a") == 2.0


# -- subsref --------------------------------------------------------------


def test_subsref_full_range_is_identity():
    rng = random.Random(29)
    a = random_array(rng)
    assert a.subsref(None, None) == a
    assert a.subsref(("", "￿"), ("", "￿")) == a


def test_subsref_single_row():
    a = AssociativeArray.from_triples(
        [("a", "x", 1.0), ("b", "x", 2.0), ("b", "y", 3.0), ("c", "y", 4.0)]
    )
    b = a.subsref(("b", "b"), None)
    assert b.rows == ("b",)
    assert b.nnz == 2


def test_subsref_explicit_set():
    a = AssociativeArray.from_triples([("a", "x", 1.0), ("b", "x", 2.0), ("c", "y", 4.0)])
    assert a.subsref({"a", "c"}, None).rows == ("a", "c")


def test_subsref_matches_linear_scan():
    rng = random.Random(31)
    entries = {}
    for _ in range(1000):
        entries[(f"r{rng.randint(0, 99):02d}", f"c{rng.randint(0, 99):02d}")] = rng.uniform(1, 2)
    a = AssociativeArray(entries)
    for _ in range(50):
        lo, hi = sorted(f"r{rng.randint(0, 99):02d}" for _ in range(2))
        clo, chi = sorted(f"c{rng.randint(0, 99):02d}" for _ in range(2))
        got = a.subsref((lo, hi), (clo, chi))
        want = {
            (r, c): v for (r, c), v in entries.items() if lo <= r <= hi and clo <= c <= chi
        }
        assert {(r, c): v for r, c, v in got.triples()} == want


def test_subsref_invalid_range():
    a = AssociativeArray.from_triples([("a", "x", 1.0)])
    with pytest.raises(InvalidRangeError):
        a.subsref(("z", "a"), None)


# -- compareScalar -----------------------------------------------------------


def test_compare_scalar_examples():
    low = AssociativeArray.from_triples([("s", "t", 20.0)])
    assert low.compare_scalar(CompareOp.GT, 25.0).nnz == 0
    high = AssociativeArray.from_triples([("s", "t", 30.0)])
    got = high.compare_scalar(CompareOp.GT, 25.0)
    assert got.get("s", "t") == 30.0


def test_compare_scalar_matches_filter_oracle():
    rng = random.Random(37)
    for op in CompareOp:
        a = random_array(rng, max_dim=20, density=0.5)
        threshold = rng.uniform(-5, 5)
        got = a.compare_scalar(op, threshold)
        pred = {
            CompareOp.LT: lambda v: v < threshold,
            CompareOp.GT: lambda v: v > threshold,
            CompareOp.NE: lambda v: v != threshold,
        }[op]
        want = {(r, c): v for r, c, v in a.triples() if pred(v)}
        assert {(r, c): v for r, c, v in got.triples()} == want


# -- ordering, serialization ----------------------------------------------------


def test_iteration_is_lexicographic():
    a = AssociativeArray.from_triples([("b", "y", 1.0), ("a", "z", 1.0), ("a", "b", 1.0)])
    assert [(r, c) for r, c, _ in a.triples()] == [("a", "b"), ("a", "z"), ("b", "y")]
    assert a.rows == ("a", "b")
    assert a.cols == ("b", "y", "z")


def test_tsv_round_trip():
    rng = random.Random(41)
    a = random_array(rng, max_dim=12)
    text = to_tsv(a)
    assert text.count("\n") == a.nnz
    assert from_tsv(text) == a
    assert to_tsv(from_tsv(text)) == text


def test_tsv_format():
    a = AssociativeArray.from_triples([("r1", "c1", 23.1), ("r1", "c2", 1.0)])
    assert to_tsv(a) == "r1\tc1\t23.1\nr1\tc2\t1\n"
