"""Set partitions, signed coefficients, splits and dissections."""

from itertools import chain

import pytest
from hypothesis import given, settings, strategies as st

from qhier.combinatorics import connects, count_partitions, \
    cumulant_coefficient, ordered_dissections, set_partitions, \
    two_block_splits

import oracles

BELL = {1: 1, 2: 2, 3: 5, 4: 15, 5: 52, 6: 203}


class TestSetPartitions:

    @pytest.mark.parametrize("n,count", sorted(BELL.items()))
    def test_counts_are_bell_numbers(self, n, count):
        assert count_partitions(n) == count
        assert sum(1 for _ in set_partitions(range(n))) == count

    def test_matches_recursive_oracle_up_to_five(self):
        for n in range(1, 6):
            items = tuple(range(1, n + 1))
            got = {tuple(sorted(tuple(sorted(b)) for b in p))
                   for p in set_partitions(items)}
            want = {tuple(sorted(tuple(sorted(b)) for b in p))
                    for p in oracles.partitions(items)}
            assert got == want

    def test_blocks_cover_items_exactly(self):
        items = (2, 5, 7)
        for p in set_partitions(items):
            flat = sorted(chain.from_iterable(p))
            assert flat == sorted(items)

    def test_block_count_bounds(self):
        singles = [p for p in set_partitions(range(4), min_blocks=4)]
        assert len(singles) == 1 and len(singles[0]) == 4
        merged = [p for p in set_partitions(range(4), max_blocks=1)]
        assert len(merged) == 1 and len(merged[0][0]) == 4
        two = sum(1 for _ in set_partitions(range(4), min_blocks=2,
                                            max_blocks=2))
        assert two == 7


class TestCoefficients:

    @pytest.mark.parametrize("p,value", [(1, 1), (2, -1), (3, 2), (4, -6),
                                         (5, 24)])
    def test_signed_factorials(self, p, value):
        assert cumulant_coefficient(p) == value

    def test_total_coefficient_cancels(self):
        """Summed over all partitions of n >= 2 items the coefficients
        cancel, which is what makes cumulants vanish at t=0."""
        for n in range(2, 6):
            total = sum(cumulant_coefficient(len(p))
                        for p in set_partitions(range(n)))
            assert total == 0
        assert sum(cumulant_coefficient(len(p))
                   for p in set_partitions(range(1))) == 1


class TestTwoBlockSplits:

    def test_count_is_stirling(self):
        assert sum(1 for _ in two_block_splits(range(5))) == 15
        assert sum(1 for _ in two_block_splits(range(3))) == 3

    def test_split_shape(self):
        items = (1, 2, 3, 4)
        for left, right in two_block_splits(items):
            assert left and right
            assert sorted(left + right) == sorted(items)
            assert not set(left) & set(right)


class TestOrderedDissections:

    def test_count_is_compositions(self):
        assert sum(1 for _ in ordered_dissections((1, 2, 3, 4))) == 8
        assert sum(1 for _ in ordered_dissections((1,))) == 1

    def test_segments_are_contiguous(self):
        for parts in ordered_dissections((3, 4, 5, 6)):
            flat = tuple(chain.from_iterable(parts))
            assert flat == (3, 4, 5, 6)
            assert all(parts)

    def test_max_segments(self):
        got = list(ordered_dissections((1, 2, 3, 4), max_segments=2))
        assert len(got) == 4


def oracle_connects(partition, groups) -> bool:
    """Union-find over partition blocks plus the tested groups."""
    parent = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            x = parent[x]
        return x

    def union(a, b):
        parent[find(a)] = find(b)

    for block in chain(partition, groups):
        block = tuple(block)
        for item in block[1:]:
            union(block[0], item)
    roots = {find(i) for g in groups for i in g}
    roots |= {find(i) for b in partition for i in b}
    return len(roots) == 1


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_connects_matches_union_find(seed):
    import numpy as np
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    items = tuple(range(1, n + 1))
    parts = list(set_partitions(items))
    partition = parts[int(rng.integers(0, len(parts)))]
    cut = int(rng.integers(1, n))
    groups = (tuple(items[:cut]), tuple(items[cut:]))
    assert connects(partition, groups) == oracle_connects(partition, groups)


def test_connects_examples():
    groups = ((1, 2), (3,))
    assert connects(((1, 3), (2,)), groups)
    assert not connects(((1, 2), (3,)), groups)
    assert connects(((1, 2, 3),), groups)
