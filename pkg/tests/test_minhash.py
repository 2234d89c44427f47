import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from metacluster.config import DEFAULT_GROUP_SIZES, EngineConfig
from metacluster.minhash import (
    BandKeySet,
    SENTINEL,
    Signature,
    SignatureComputer,
    UnionFind,
    band_key_matrix,
    band_keys,
    band_positions,
    group_candidates,
    minhash_signature,
    shingle,
)
from metacluster.records import tokenize
from metacluster.synthetic import random_corpus


class TestShingle:
    def test_ten_character_word(self):
        assert shingle("clustering") == {"clusteri", "lusterin", "ustering"}

    def test_short_word_shingles_to_itself(self):
        assert shingle("map") == {"map"}

    def test_exact_length(self):
        assert shingle("abcdefgh") == {"abcdefgh"}

    def test_empty_word(self):
        assert shingle("") == set()


class TestSignature:
    def test_deterministic(self):
        tokens = ["hierarchical", "clustering", "of", "records"]
        a = minhash_signature(tokens, count=64, seed=5)
        b = minhash_signature(tokens, count=64, seed=5)
        assert a == b

    def test_seed_changes_signature(self):
        tokens = ["hierarchical", "clustering"]
        a = minhash_signature(tokens, count=64, seed=5)
        b = minhash_signature(tokens, count=64, seed=6)
        assert a != b

    def test_empty_stream_is_sentinel(self):
        sig = minhash_signature([], count=64, seed=5)
        assert sig.is_sentinel
        assert set(sig.hashes) == {SENTINEL}

    def test_signature_agreement_tracks_jaccard(self):
        # One rare word replaced; exact Jaccard over the shingle unions is the
        # oracle, signature agreement must land within +/-0.1 for H=64.
        rng = random.Random(3)
        base = ["".join(rng.choice("abcdefghijklmnop") for _ in range(12)) for _ in range(30)]
        other = base[:-1] + ["zzzzyyyyxxxxw"]

        def shingles(tokens):
            out = set()
            for token in tokens:
                out |= shingle(token)
            return out

        sa, sb = shingles(base), shingles(other)
        exact = len(sa & sb) / len(sa | sb)
        a = minhash_signature(base, count=64, seed=1)
        b = minhash_signature(other, count=64, seed=1)
        agreement = sum(x == y for x, y in zip(a.hashes, b.hashes)) / 64
        assert agreement == pytest.approx(exact, abs=0.1)

    def test_token_order_and_duplication_irrelevant(self):
        computer = SignatureComputer(count=64, seed=2)
        a = computer.signature_vector(["alpha", "beta", "gamma"])
        b = computer.signature_vector(["gamma", "alpha", "beta", "alpha"])
        assert (a == b).all()


class TestBandKeys:
    def test_group_sizes_at_endpoints(self):
        for level, expected in ((100, 16), (20, 2)):
            groups = band_positions(level, band_seed=0, count=64)
            assert len(groups) == 4
            assert all(len(g) == expected for g in groups)
            flat = [p for g in groups for p in g]
            assert len(set(flat)) == len(flat)  # disjoint

    def test_intermediate_sizes_monotone(self):
        sizes = [DEFAULT_GROUP_SIZES[lv] for lv in (100, 80, 60, 40, 20)]
        assert sizes == sorted(sizes, reverse=True)

    def test_xor_identity(self):
        positions = band_positions(20, band_seed=0, count=8)
        hashes = [0] * 8
        first_group = positions[0]
        hashes[first_group[0]] = 0x3
        hashes[first_group[1]] = 0x5
        keys = band_keys(Signature(tuple(hashes), seed=0), 20, band_seed=0)
        assert keys.keys[0] == 0x6

    def test_deterministic_given_inputs(self):
        sig = minhash_signature(["alpha", "beta"], count=64, seed=1)
        assert band_keys(sig, 80, 7) == band_keys(sig, 80, 7)
        assert band_keys(sig, 80, 7) != band_keys(sig, 80, 8)

    def test_matrix_path_matches_scalar_path(self):
        computer = SignatureComputer(count=64, seed=3)
        streams = [["alpha", "beta"], ["gamma"], []]
        matrix = computer.signature_matrix(streams)
        keys, empty = band_key_matrix(matrix, 60, band_seed=3)
        for i, stream in enumerate(streams):
            sig = Signature(tuple(int(v) for v in computer.signature_vector(stream)), seed=3)
            scalar = band_keys(sig, 60, band_seed=3)
            assert tuple(int(k) for k in keys[i]) == scalar.keys
            assert bool(empty[i]) == scalar.empty


def keyset(level, *keys, empty=False):
    return BandKeySet(keys=tuple(keys), level=level, empty=empty)


class TestGrouping:
    def test_identical_records_group(self):
        pairs = [("a", keyset(100, 1, 2, 3, 4)), ("b", keyset(100, 1, 2, 3, 4))]
        assert group_candidates(pairs) == [("a", "b")]

    def test_transitive_closure(self):
        pairs = [
            ("a", keyset(100, 1, 10, 11, 12)),
            ("b", keyset(100, 1, 20, 21, 3)),
            ("c", keyset(100, 30, 31, 32, 3)),
            ("d", keyset(100, 40, 41, 42, 43)),
        ]
        assert group_candidates(pairs) == [("a", "b", "c"), ("d",)]

    def test_key_match_is_per_band_position(self):
        # Same value in different band positions must not connect records.
        pairs = [("a", keyset(100, 7, 1, 2, 3)), ("b", keyset(100, 4, 7, 5, 6))]
        assert group_candidates(pairs) == [("a",), ("b",)]

    def test_all_mode_requires_full_tuple(self):
        pairs = [
            ("a", keyset(100, 1, 2, 3, 4)),
            ("b", keyset(100, 1, 2, 3, 4)),
            ("c", keyset(100, 1, 2, 3, 9)),
        ]
        assert group_candidates(pairs, mode="all") == [("a", "b"), ("c",)]

    def test_sentinel_records_always_singletons(self):
        pairs = [
            ("a", keyset(100, 1, 2, 3, 4)),
            ("b", keyset(100, 1, 2, 3, 4, empty=True)),
            ("c", keyset(100, 1, 2, 3, 4, empty=True)),
        ]
        assert group_candidates(pairs) == [("a",), ("b",), ("c",)]

    def test_random_corpus_mostly_singletons_at_level_100(self):
        records = random_corpus(1000, seed=5)
        config = EngineConfig(seed=5)
        computer = SignatureComputer(count=64, seed=5)
        matrix = computer.signature_matrix([tokenize(r) for r in records])
        keys, empty = band_key_matrix(matrix, 100, band_seed=5)
        pairs = [
            (record.id, BandKeySet(tuple(int(k) for k in keys[i]), 100, bool(empty[i])))
            for i, record in enumerate(records)
        ]
        groups = group_candidates(pairs, mode=config.band_match)
        singletons = sum(1 for g in groups if len(g) == 1)
        assert singletons >= 0.99 * len(records)

    def test_mean_group_size_grows_as_level_drops(self):
        records = random_corpus(400, seed=11, tokens_per_record=6, vocab_size=150)
        computer = SignatureComputer(count=64, seed=11)
        matrix = computer.signature_matrix([tokenize(r) for r in records])

        def mean_size(level):
            keys, empty = band_key_matrix(matrix, level, band_seed=11)
            pairs = [
                (r.id, BandKeySet(tuple(int(k) for k in keys[i]), level, bool(empty[i])))
                for i, r in enumerate(records)
            ]
            groups = group_candidates(pairs)
            return sum(len(g) for g in groups) / len(groups)

        assert mean_size(20) >= mean_size(100)

    def test_identical_metadata_same_keys_at_every_level(self):
        corpus = random_corpus(5, seed=2)
        twin_streams = [tokenize(corpus[0]), tokenize(corpus[0])]
        computer = SignatureComputer(count=64, seed=9)
        matrix = computer.signature_matrix(twin_streams)
        for level in (100, 80, 60, 40, 20):
            keys, empty = band_key_matrix(matrix, level, band_seed=9)
            assert (keys[0] == keys[1]).all()
            assert not empty.any()


@given(
    st.lists(
        st.tuples(st.integers(0, 5), st.integers(0, 5), st.integers(0, 5), st.integers(0, 5)),
        min_size=1,
        max_size=40,
    )
)
def test_grouping_is_a_partition(key_rows):
    pairs = [(f"r{i:03d}", keyset(100, *row)) for i, row in enumerate(key_rows)]
    groups = group_candidates(pairs)
    flat = [rid for group in groups for rid in group]
    assert sorted(flat) == sorted(rid for rid, _ in pairs)
    assert len(flat) == len(set(flat))


def test_union_find_min_roots_order_independent():
    edges = [("c", "d"), ("a", "b"), ("b", "c"), ("x", "y")]
    for trial in range(5):
        rng = random.Random(trial)
        shuffled = edges[:]
        rng.shuffle(shuffled)
        uf = UnionFind()
        for a, b in shuffled:
            uf.union(a, b)
        components = {root: sorted(v) for root, v in uf.components(["a", "b", "c", "d", "x", "y"]).items()}
        assert components == {"a": ["a", "b", "c", "d"], "x": ["x", "y"]}
