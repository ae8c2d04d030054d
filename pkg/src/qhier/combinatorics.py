"""Partition combinatorics for cluster expansions.

Blocks are tuples of labels; a partition is a tuple of blocks ordered by
smallest element, each block internally ascending.  Enumeration order is
fixed (restricted-growth strings, lexicographic) so that downstream sums are
reproducible run to run.
"""

from __future__ import annotations

from math import factorial
from typing import Iterator, Sequence

from .errors import ValidationError

Block = tuple[int, ...]
SetPartition = tuple[Block, ...]


def _check_items(items: Sequence[int]) -> list:
    items = list(items)
    if len(set(items)) != len(items):
        raise ValidationError(f"items {items} contain duplicates")
    return items


def set_partitions(items: Sequence[int], min_blocks: int = 1,
                   max_blocks: int | None = None) -> Iterator[SetPartition]:
    """All set partitions of ``items`` in restricted-growth-string order.

    >>> [p for p in set_partitions([1, 2])]
    [((1, 2),), ((1,), (2,))]
    """
    items = _check_items(items)
    n = len(items)
    if n == 0:
        if min_blocks <= 0:
            yield ()
        return
    hi = n if max_blocks is None else min(max_blocks, n)

    def grow(rgs: list[int], nblocks: int) -> Iterator[SetPartition]:
        i = len(rgs)
        if i == n:
            if min_blocks <= nblocks <= hi:
                blocks: list[list[int]] = [[] for _ in range(nblocks)]
                for j, b in enumerate(rgs):
                    blocks[b].append(items[j])
                yield tuple(tuple(b) for b in blocks)
            return
        for b in range(nblocks + 1):
            # opening block nblocks means one more block than before
            new_n = nblocks + (1 if b == nblocks else 0)
            if new_n > hi:
                continue
            rgs.append(b)
            yield from grow(rgs, new_n)
            rgs.pop()

    yield from grow([0], 1)


def count_partitions(n: int) -> int:
    """Bell number, by the triangle recurrence."""
    if n < 0:
        raise ValidationError("n must be >= 0")
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def two_block_splits(items: Sequence[int]) -> Iterator[tuple[Block, Block]]:
    """Unordered splits into two non-empty blocks.

    The first item always lands in the first block, so each split appears
    exactly once: 2**(n-1) - 1 splits of n items.
    """
    items = _check_items(items)
    n = len(items)
    if n < 2:
        return
    head, rest = items[0], items[1:]
    for mask in range(2 ** (n - 1) - 1):
        left = [head]
        right = []
        for j, it in enumerate(rest):
            (left if (mask >> j) & 1 else right).append(it)
        yield tuple(left), tuple(right)


def ordered_dissections(segment: Sequence[int], max_segments: int | None = None
                        ) -> Iterator[tuple[Block, ...]]:
    """Split a linearly ordered segment into consecutive runs.

    Yields every way to cut ``segment`` into at most ``max_segments``
    non-empty consecutive pieces, preserving order: 2**(n-1) dissections of
    an n-element segment when unrestricted.  Order: fewer pieces first, then
    lexicographic cut positions.
    """
    segment = list(segment)
    n = len(segment)
    if n == 0:
        return
    hi = n if max_segments is None else min(max_segments, n)
    if hi < 1:
        return
    from itertools import combinations

    for k in range(1, hi + 1):
        for cuts in combinations(range(1, n), k - 1):
            bounds = (0,) + cuts + (n,)
            yield tuple(tuple(segment[a:b]) for a, b in zip(bounds, bounds[1:]))


def cumulant_coefficient(p: int) -> int:
    """Signed Moebius weight (-1)**(p-1) * (p-1)! of a p-block partition."""
    if p < 1:
        raise ValidationError("partition must have at least one block")
    return (-1) ** (p - 1) * factorial(p - 1)


def connects(partition: SetPartition, groups: Sequence[Block]) -> bool:
    """Whether a label partition links the given label groups into one piece.

    Each block of ``partition`` is an edge joining every group it meets.
    Used to extract correlations of composite arguments from plain ones.
    """
    idx = {}
    for gi, g in enumerate(groups):
        for lab in g:
            idx[lab] = gi
    parent = list(range(len(groups)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for block in partition:
        touched = sorted({idx[lab] for lab in block if lab in idx})
        for a, b in zip(touched, touched[1:]):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[rb] = ra
    roots = {find(i) for i in range(len(groups))}
    return len(roots) == 1
