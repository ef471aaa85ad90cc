import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mlcc import Clustering, Mode, MultilayerInstance, Norm
from mlcc.errors import InstanceFormatError
from mlcc.exact import restricted_growth_strings
from mlcc.instance import (
    canonicalize_general,
    disagreement,
    disagreements,
    dumps,
    loads,
    lp_norm,
    objective,
    pair_index,
    read_instance,
    validate,
    write_instance,
)

from helpers import random_general, random_probability


def layer_of(n, pairs, mode="general"):
    return MultilayerInstance.from_pairs(n, [pairs], mode)


# ---------------------------------------------------------------- validate


def test_validate_probability_ok():
    inst = MultilayerInstance.from_pairs(4, [{}], "probability", default=(0.6, 0.4))
    assert validate(inst) == []


def test_validate_probability_violation_names_pair():
    inst = MultilayerInstance.from_pairs(4, [{(1, 3): (0.6, 0.6)}], "probability", default=(0.6, 0.4))
    (v,) = validate(inst)
    assert v.kind == "probability" and v.layer == 0 and v.elements == (1, 3)
    assert v.amount == pytest.approx(0.2)


def test_validate_coexistence():
    inst = layer_of(3, {(0, 1): (1.0, 1.0)})
    (v,) = validate(inst)
    assert v.kind == "coexistence" and v.elements == (0, 1)


def test_validate_triangle_mode():
    minus = {(0, 1): 0.1, (1, 2): 0.1, (0, 2): 0.9}
    inst = layer_of(3, {k: (1 - w, w) for k, w in minus.items()}, "probability+triangle")
    kinds = [v for v in validate(inst) if v.kind == "triangle"]
    assert len(kinds) == 1 and kinds[0].elements == (0, 1, 2)
    assert kinds[0].amount == pytest.approx(0.7)
    assert validate(inst.with_mode("probability")) == []


def test_validate_tolerance():
    inst = MultilayerInstance.from_pairs(3, [{}], "probability", default=(0.5, 0.5 + 5e-10))
    assert validate(inst) == []


def test_instance_rejects_bad_weights():
    with pytest.raises(ValueError):
        MultilayerInstance(2, np.array([[-1.0]]), np.array([[0.0]]))
    with pytest.raises(ValueError):
        MultilayerInstance(3, np.zeros((1, 2)), np.zeros((1, 2)))


def test_instance_is_immutable():
    inst = random_general(0, 4, 2)
    with pytest.raises(ValueError):
        inst.plus[0, 0] = 3.0


def test_pair_index_is_unordered():
    assert pair_index(5, 1, 3) == pair_index(5, 3, 1)
    with pytest.raises(ValueError):
        pair_index(5, 2, 2)


# ---------------------------------------------------------------- clustering


def test_clustering_canonical_labels():
    a = Clustering((3, 3, 7, 1))
    assert a.labels == (0, 0, 1, 2)
    assert a == Clustering.from_clusters([[3], [0, 1], [2]])
    assert a.k == 3 and a.clusters() == [[0, 1], [2], [3]]


def test_clustering_from_clusters_rejects_overlap():
    with pytest.raises(ValueError):
        Clustering.from_clusters([[0, 1], [1, 2]])
    with pytest.raises(ValueError):
        Clustering.from_clusters([[0], [2]], n=3)


# ---------------------------------------------------------------- disagreement


def small_layer():
    return layer_of(3, {(0, 1): (1.0, 0.0), (0, 2): (0.0, 1.0)})


def test_disagreement_zero():
    assert disagreement(small_layer(), Clustering.from_clusters([[0, 1], [2]]), 0) == 0.0


def test_disagreement_singletons():
    assert disagreement(small_layer(), Clustering.singletons(3), 0) == 1.0


def test_disagreement_uniform_probability():
    inst = MultilayerInstance.from_pairs(3, [{}], "probability")
    for labels in restricted_growth_strings(3):
        assert disagreement(inst, Clustering(tuple(labels)), 0) == pytest.approx(1.5)


def test_disagreement_layer_out_of_range():
    with pytest.raises(IndexError):
        disagreement(small_layer(), Clustering.singletons(3), 1)


@pytest.mark.parametrize("p,expected", [(2, 5.0), ("inf", 4.0), (1, 7.0)])
def test_norm_examples(p, expected):
    assert lp_norm([3.0, 4.0], p) == pytest.approx(expected)


def test_norm_cap_and_parse():
    assert Norm.parse("inf").is_inf and Norm.parse("2").p == 2
    with pytest.raises(ValueError):
        Norm(0.5)
    with pytest.raises(ValueError):
        Norm(65)
    assert math.isfinite(lp_norm([1e300, 1e300], 64))


def test_objective_matches_vector():
    inst = random_general(3, 5, 3)
    c = Clustering((0, 0, 1, 1, 2))
    d = disagreements(inst, c)
    assert objective(inst, c, 1) == pytest.approx(d.sum())
    assert objective(inst, c, "inf") == pytest.approx(d.max())
    assert objective(inst, c, 3) == pytest.approx((d**3).sum() ** (1 / 3))


def naive_disagreement(inst, c, l):
    total = 0.0
    for u, v in combinations(range(inst.n), 2):
        wp, wm = inst.weights(l, u, v)
        total += wm if c.same(u, v) else wp
    return total


clusterings = st.integers(2, 7).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.integers(0, n - 1), min_size=n, max_size=n), st.integers(0, 10**6))
)


@settings(max_examples=60, deadline=None)
@given(clusterings)
def test_disagreement_properties(args):
    n, labels, seed = args
    inst = random_general(seed, n, 2)
    c = Clustering(tuple(labels))
    for l in range(2):
        d = disagreement(inst, c, l)
        assert d == pytest.approx(naive_disagreement(inst, c, l))
        # agreement swaps the indicators; the two add up to the layer's total weight
        same = c.same_pairs()
        agree = inst.plus[l, same].sum() + inst.minus[l, ~same].sum()
        assert d + agree == pytest.approx(inst.total_weight()[l])
    # relabelling clusters changes nothing
    perm = {a: b for a, b in zip(range(n), np.random.default_rng(seed).permutation(n))}
    relabeled = Clustering(tuple(perm[x] for x in labels))
    assert np.array_equal(disagreements(inst, c), disagreements(inst, relabeled))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0, 100), min_size=1, max_size=6), st.integers(0, 5), st.floats(0, 10),
       st.sampled_from([1.0, 1.5, 2.0, 7.0, math.inf]))
def test_norm_monotone(values, idx, bump, p):
    idx %= len(values)
    bigger = list(values)
    bigger[idx] += bump
    assert lp_norm(bigger, p) >= lp_norm(values, p) - 1e-9 * (1 + lp_norm(values, p))


# ---------------------------------------------------------------- canonicalize


def test_canonicalize_single_pair():
    canon, off = canonicalize_general(layer_of(2, {(0, 1): (0.7, 0.3)}))
    assert canon.weights(0, 0, 1) == pytest.approx((0.4, 0.0))
    assert off[0] == pytest.approx(0.3)


def test_canonicalize_identity_on_canonical():
    inst = random_general(5, 5, 2)
    canon, off = canonicalize_general(inst)
    assert canon == inst and np.all(off == 0)


def test_canonicalize_two_pairs_bruteforce():
    inst = layer_of(3, {(0, 1): (1.0, 1.0), (0, 2): (0.2, 0.5)})
    canon, off = canonicalize_general(inst)
    assert canon.weights(0, 0, 1) == (0.0, 0.0)
    assert canon.weights(0, 0, 2) == pytest.approx((0.0, 0.3))
    assert off[0] == pytest.approx(1.2)
    # the identity is checked over every partition of three elements
    for labels in restricted_growth_strings(3):
        c = Clustering(tuple(labels))
        assert disagreement(inst, c, 0) == pytest.approx(disagreement(canon, c, 0) + off[0])


def test_canonicalize_keeps_p1_argmin():
    from mlcc.exact import brute_force

    rng = np.random.default_rng(11)
    for n in range(2, 8):
        P = n * (n - 1) // 2
        inst = MultilayerInstance(n, rng.random((2, P)), rng.random((2, P)))
        canon, _ = canonicalize_general(inst)
        a, b = brute_force(inst, 1, rtol=1e-9), brute_force(canon, 1, rtol=1e-9)
        assert set(a.opt_clusterings) == set(b.opt_clusterings)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 10**6))
def test_canonicalize_identity_property(n, seed):
    rng = np.random.default_rng(seed)
    P = n * (n - 1) // 2
    inst = MultilayerInstance(n, rng.random((2, P)), rng.random((2, P)))
    canon, off = canonicalize_general(inst)
    assert validate(canon) == []
    for labels in restricted_growth_strings(n)[:: max(1, len(restricted_growth_strings(n)) // 20)]:
        c = Clustering(tuple(labels))
        assert np.allclose(disagreements(inst, c), disagreements(canon, c) + off)


# ---------------------------------------------------------------- file format


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 7), st.integers(1, 3), st.integers(0, 10**6), st.booleans())
def test_roundtrip_bit_exact(n, L, seed, prob):
    inst = random_probability(seed, n, L) if prob else random_general(seed, n, L)
    back = loads(dumps(inst))
    assert back == inst
    assert np.array_equal(back.plus.view(np.uint64), inst.plus.view(np.uint64))


def test_file_roundtrip(tmp_path):
    inst = random_general(1, 6, 2)
    write_instance(inst, tmp_path / "a.mlcc")
    assert read_instance(tmp_path / "a.mlcc") == inst


def test_loads_defaults_and_comments():
    inst = loads("# comment\nmlcc probability n=3 L=1\n0 0 2 0.9 0.1  # note\n")
    assert inst.weights(0, 0, 2) == (0.9, 0.1)
    assert inst.weights(0, 1, 2) == (0.5, 0.5)
    assert inst.mode is Mode.PROBABILITY


@pytest.mark.parametrize(
    "text,line",
    [
        ("mlcc general n=3 L=1\n0 0 1 1.0\n", 2),
        ("mlcc general n=3 L=1\n1 0 1 1 0\n", 2),
        ("mlcc general n=3 L=1\n0 1 1 1 0\n", 2),
        ("mlcc weird n=3 L=1\n", 1),
        ("mlcc general n=3 L=1\n0 0 x 1 0\n", 2),
    ],
)
def test_loads_errors_carry_line(text, line):
    with pytest.raises(InstanceFormatError) as err:
        loads(text)
    assert err.value.line == line
