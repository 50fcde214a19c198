"""Set partitions and subsets of the index set {1, ..., n}.

Partitions are generated by the insertion recursion: every partition of
{1..n+1} arises from exactly one partition of {1..n}, either by adding the
singleton {n+1} or by inserting n+1 into one existing block.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

MAX_PARTITION_SIZE = 12
MAX_NUMBER_ARG = 25


@dataclass(frozen=True, order=True)
class IndexSubset:
    """A subset of {1..ground_size}, elements stored sorted."""

    elements: tuple
    ground_size: int

    def __post_init__(self):
        elems = tuple(sorted(self.elements))
        if len(set(elems)) != len(elems):
            raise ValueError(f"duplicate elements in {elems}")
        if elems and (elems[0] < 1 or elems[-1] > self.ground_size):
            raise ValueError(f"{elems} is not a subset of 1..{self.ground_size}")
        object.__setattr__(self, "elements", elems)

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, item):
        return item in self.elements

    def __str__(self):
        return "{" + ",".join(map(str, self.elements)) + "}"


@dataclass(frozen=True)
class Partition:
    """A set partition in canonical form.

    Blocks are sorted internally and ordered by their smallest element.
    """

    blocks: tuple

    def __post_init__(self):
        blocks = tuple(sorted((tuple(sorted(b)) for b in self.blocks), key=lambda b: b[0] if b else 0))
        seen = [i for b in blocks for i in b]
        if any(not b for b in blocks):
            raise ValueError("partition blocks must be nonempty")
        if sorted(seen) != list(range(1, len(seen) + 1)):
            raise ValueError(f"blocks {blocks} do not partition 1..{len(seen)}")
        object.__setattr__(self, "blocks", blocks)

    @property
    def size(self) -> int:
        """Number of elements partitioned."""
        return sum(len(b) for b in self.blocks)

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    def __str__(self):
        return "{" + ",".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks) + "}"

    def growth_string(self) -> tuple:
        """Block label of each element 1..n, blocks numbered from 0 by first element."""
        labels = {}
        for k, b in enumerate(self.blocks):
            for i in b:
                labels[i] = k
        return tuple(labels[i] for i in range(1, self.size + 1))


def _check_size(n: int, cap: int) -> None:
    if not isinstance(n, int) or n < 0:
        raise ValueError(f"n must be a non-negative integer, got {n!r}")
    if n > cap:
        raise ValueError(f"n={n} exceeds the configured maximum {cap}")


def partitions(n: int, max_n: int = MAX_PARTITION_SIZE) -> list[Partition]:
    """All partitions of {1..n}, built by inserting n+1 into partitions of {1..n}.

    The result is ordered by number of blocks, then by restricted growth
    string, so ``partitions(3)`` is ``{{1,2,3}}``, ``{{1,2},{3}}``,
    ``{{1,3},{2}}``, ``{{1},{2,3}}``, ``{{1},{2},{3}}``.

    >>> [str(p) for p in partitions(2)]
    ['{{1,2}}', '{{1},{2}}']
    """
    _check_size(n, max_n)
    level = [()]  # the single partition of the empty set
    for m in range(n):
        new = m + 1
        nxt = []
        for blocks in level:
            nxt.append(blocks + ((new,),))
            for i, nu in enumerate(blocks):
                nxt.append(blocks[:i] + (nu + (new,),) + blocks[i + 1:])
        level = nxt
    return sorted((Partition(b) for b in level), key=lambda p: (len(p), p.growth_string()))


def subsets(n: int) -> list[IndexSubset]:
    """All 2**n subsets of {1..n}, ordered by size then lexicographically."""
    _check_size(n, MAX_NUMBER_ARG)
    out = []
    for mask in range(1 << n):
        out.append(IndexSubset(tuple(i + 1 for i in range(n) if mask >> i & 1), n))
    out.sort(key=lambda s: (len(s), s.elements))
    return out


def complement(s: IndexSubset) -> IndexSubset:
    members = set(s.elements)
    return IndexSubset(tuple(i for i in range(1, s.ground_size + 1) if i not in members), s.ground_size)


@lru_cache(maxsize=None)
def stirling2(n: int, k: int) -> int:
    """Stirling number of the second kind, S(n, k)."""
    if not (isinstance(n, int) and isinstance(k, int)) or not 0 <= k <= n <= MAX_NUMBER_ARG:
        raise ValueError(f"stirling2 requires 0 <= k <= n <= {MAX_NUMBER_ARG}, got ({n}, {k})")
    if n == k:
        return 1
    if k == 0:
        return 0
    # the new element joins one of k blocks, or forms its own
    return k * stirling2(n - 1, k) + stirling2(n - 1, k - 1)


def bell(n: int) -> int:
    _check_size(n, MAX_NUMBER_ARG)
    return sum(stirling2(n, k) for k in range(n + 1))
