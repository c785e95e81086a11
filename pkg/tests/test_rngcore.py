"""Splittable stream derivation: determinism and separation."""

import numpy as np

from vaxnet.rngcore import RngStream, StreamKey, derive_stream


def test_same_path_reproduces_bits():
    a = derive_stream(42, ("village", 3), ("run", 7))
    b = derive_stream(42, ("village", 3), ("run", 7))
    assert np.array_equal(a.integers(0, 2**62, size=32), b.integers(0, 2**62, size=32))


def test_any_path_component_changes_the_stream():
    base = derive_stream(42, ("village", 3), ("run", 7)).integers(0, 2**62, size=8)
    variants = [
        derive_stream(43, ("village", 3), ("run", 7)),
        derive_stream(42, ("village", 4), ("run", 7)),
        derive_stream(42, ("village", 3), ("run", 8)),
        derive_stream(42, ("hamlet", 3), ("run", 7)),
        derive_stream(42, ("village", 3)),
    ]
    for v in variants:
        assert not np.array_equal(base, v.integers(0, 2**62, size=8))


def test_child_equals_extended_path():
    parent = derive_stream(9, ("stage", 1))
    child = parent.child("run", 5)
    direct = derive_stream(9, ("stage", 1), ("run", 5))
    assert np.array_equal(child.integers(0, 2**62, size=16),
                          direct.integers(0, 2**62, size=16))


def test_draw_order_does_not_couple_siblings():
    # consuming from one stream must not perturb its sibling
    a1 = derive_stream(5, ("x", 0))
    _ = a1.random(size=1000)
    b_after = derive_stream(5, ("x", 1)).random(size=100)
    b_fresh = derive_stream(5, ("x", 1)).random(size=100)
    assert np.array_equal(b_after, b_fresh)


def test_sibling_streams_look_independent():
    n = 20_000
    x = derive_stream(7, ("rep", 0)).random(size=n)
    y = derive_stream(7, ("rep", 1)).random(size=n)
    r = np.corrcoef(x, y)[0, 1]
    assert abs(r) < 0.03
    assert abs(x.mean() - 0.5) < 0.01


def test_bernoulli_rate():
    s = derive_stream(11, ("bern", 0))
    draws = s.bernoulli(0.3, size=50_000)
    assert draws.dtype == bool
    assert abs(draws.mean() - 0.3) < 0.01


def test_permutation_and_shuffle_are_deterministic():
    p1 = derive_stream(3, ("perm", 0)).permutation(25)
    p2 = derive_stream(3, ("perm", 0)).permutation(25)
    assert np.array_equal(p1, p2)
    arr1 = np.arange(25)
    arr2 = np.arange(25)
    derive_stream(3, ("perm", 1)).shuffle(arr1)
    derive_stream(3, ("perm", 1)).shuffle(arr2)
    assert np.array_equal(arr1, arr2)
    assert sorted(arr1.tolist()) == list(range(25))


def test_choice_without_replacement_unique():
    s = derive_stream(13, ("choice", 0))
    picked = s.choice(50, size=20, replace=False)
    assert len(set(picked.tolist())) == 20


def test_generator_exposes_numpy_generator():
    s = derive_stream(1, ("gen", 0))
    g = s.generator
    assert isinstance(g, np.random.Generator)


def test_stream_key_words_are_stable():
    k1 = StreamKey(17, (("a", 1),)).spawn_words()
    k2 = StreamKey(17, (("a", 1),)).spawn_words()
    assert k1 == k2
    k3 = StreamKey(17, (("a", 2),)).spawn_words()
    assert k1 != k3
    assert StreamKey(17).extended("a", 1).spawn_words() == k1
