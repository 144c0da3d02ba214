"""
Partitions of [n] = {1, ..., n} and their algebra: coagulation, fragmentation, restriction and the action of
permutations.

A partition is stored through its restricted-growth string (the 0-based label of the block containing each
element, blocks labelled by order of their least element) together with the sorted blocks. Every operation
works on label sequences and relabels the result, so outputs are always canonical.
"""
import functools
import numbers
import re
from typing import Iterable, Sequence, Tuple

from pyefc.config import MAX_ENUMERATION_N
from pyefc.logging_utility.logger import partition_logger
from pyefc.logging_utility.logging_messages import ENUMERATION_BUILD
from pyefc.misc.exceptions import PartitionError, StateSpaceTooLarge
from pyefc.schema.schema import EfcElement


def _relabel(labels: Iterable) -> Tuple[int, ...]:
    mapping = {}
    code = []
    for label in labels:
        if label not in mapping:
            mapping[label] = len(mapping)
        code.append(mapping[label])
    return tuple(code)


def _blocks_from_code(code: Sequence[int]) -> Tuple[Tuple[int, ...], ...]:
    blocks = [[] for _ in range(max(code) + 1)]
    for element, label in enumerate(code, start=1):
        blocks[label].append(element)
    return tuple(tuple(block) for block in blocks)


def _check_code(code: Sequence) -> Tuple[int, ...]:
    """The code as plain integers; numpy integer labels are accepted."""
    if len(code) == 0:
        raise PartitionError('The empty partition (n = 0) is not supported.')
    for position, label in enumerate(code, start=1):
        if not isinstance(label, numbers.Integral) or isinstance(label, bool):
            raise PartitionError(f'Invalid label {label!r} at position {position} of a restricted-growth string.')
    code = tuple(int(label) for label in code)
    if code[0] != 0:
        raise PartitionError(f'A restricted-growth string starts with 0, got {code[0]}.')
    current_max = 0
    for position, label in enumerate(code[1:], start=2):
        if label < 0 or label > current_max + 1:
            raise PartitionError(f'Invalid label {label!r} at position {position} of a restricted-growth string.')
        current_max = max(current_max, label)
    return code


class Partition(EfcElement):
    """
    A partition of [n] in canonical form.

    Examples:
        >>> Partition.from_rgs((0, 1, 0, 2))
        Partition({1,3}{2}{4})

    Attributes:
        n: The ground-set size.
        code: The restricted-growth string of the partition.
        blocks: The blocks, each sorted ascending, ordered by least element.
    """

    __slots__ = ('n', 'code', 'blocks')

    def __init__(self, code: Sequence[int]):
        code = _check_code(tuple(code))
        self.n = len(code)
        self.code = code
        self.blocks = _blocks_from_code(code)

    @classmethod
    def from_rgs(cls, code: Sequence[int]) -> 'Partition':
        return cls(code)

    @classmethod
    def from_labels(cls, labels: Iterable) -> 'Partition':
        obj = cls.__new__(cls)
        obj.code = _relabel(labels)
        obj.n = len(obj.code)
        obj.blocks = _blocks_from_code(obj.code)
        return obj

    @classmethod
    def zero(cls, n: int) -> 'Partition':
        """The partition of [n] into singletons."""
        _check_size(n)
        return cls.from_labels(range(n))

    @classmethod
    def one(cls, n: int) -> 'Partition':
        """The partition of [n] with a single block."""
        _check_size(n)
        return cls.from_labels([0] * n)

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)

    @property
    def is_zero(self) -> bool:
        return self.num_blocks == self.n

    @property
    def is_one(self) -> bool:
        return self.num_blocks == 1

    def block_of(self, element: int) -> Tuple[int, ...]:
        """The block containing `element` (1-based)."""
        if not 1 <= element <= self.n:
            raise PartitionError(f'Element {element} is not in [{self.n}].')
        return self.blocks[self.code[element - 1]]

    def singletons(self) -> Tuple[int, ...]:
        """Elements forming a block on their own."""
        return tuple(block[0] for block in self.blocks if len(block) == 1)

    def block_sizes(self) -> Tuple[int, ...]:
        return tuple(len(block) for block in self.blocks)

    def is_finer_than(self, other: 'Partition') -> bool:
        """True when every block of self is contained in a block of other."""
        if other.n != self.n:
            raise PartitionError(f'Cannot compare partitions of [{self.n}] and [{other.n}].')
        return all(len({other.code[element - 1] for element in block}) == 1 for block in self.blocks)

    def plain_str(self) -> str:
        return ''.join('{' + ','.join(str(element) for element in block) + '}' for block in self.blocks)

    def __str__(self):
        return self.plain_str()

    def __repr__(self):
        return f'{self.__class__.__name__}({self.plain_str()})'

    def __eq__(self, other):
        return isinstance(other, Partition) and self.code == other.code

    def __hash__(self):
        return hash(self.code)

    def __lt__(self, other):
        return (self.n, self.code) < (other.n, other.code)


class PartitionIndex(EfcElement):
    """
    Restricted-growth string codec of a partition, giving its position in `enumerate_partitions(n)`.

    Examples:
        >>> PartitionIndex.from_partition(Partition.one(3)).rank()
        0
    """

    __slots__ = ('code',)

    def __init__(self, code: Sequence[int]):
        code = _check_code(tuple(code))
        self.code = code

    @classmethod
    def from_partition(cls, pi: Partition) -> 'PartitionIndex':
        return cls(pi.code)

    @classmethod
    def from_rank(cls, n: int, rank: int) -> 'PartitionIndex':
        _check_size(n)
        counts = _completion_counts(n)
        if not 0 <= rank < bell_number(n):
            raise PartitionError(f'Rank {rank} is out of range for P_{n}.')
        code = [0]
        used = 1
        for position in range(2, n + 1):
            block = counts[n - position][used]
            label = min(rank // block, used)
            rank -= label * block
            code.append(label)
            used = max(used, label + 1)
        return cls(code)

    def to_partition(self) -> Partition:
        return Partition(self.code)

    def rank(self) -> int:
        n = len(self.code)
        counts = _completion_counts(n)
        rank = 0
        used = 1
        for position in range(2, n + 1):
            label = self.code[position - 1]
            rank += label * counts[n - position][used]
            used = max(used, label + 1)
        return rank

    def plain_str(self) -> str:
        return ','.join(str(label) for label in self.code)

    def __eq__(self, other):
        return isinstance(other, PartitionIndex) and self.code == other.code

    def __hash__(self):
        return hash(self.code)


class PermutationMap(EfcElement):
    """
    A bijection of [n], given by its image sequence: image[i - 1] = sigma(i).
    """

    __slots__ = ('n', 'image')

    def __init__(self, image: Sequence[int]):
        image = tuple(int(value) for value in image)
        if len(image) == 0:
            raise PartitionError('The empty permutation (n = 0) is not supported.')
        if sorted(image) != list(range(1, len(image) + 1)):
            raise PartitionError(f'{image} is not a permutation of [{len(image)}].')
        self.n = len(image)
        self.image = image

    @classmethod
    def identity(cls, n: int) -> 'PermutationMap':
        return cls(range(1, n + 1))

    def __call__(self, element: int) -> int:
        return self.image[element - 1]

    def inverse(self) -> 'PermutationMap':
        inverse = [0] * self.n
        for element, value in enumerate(self.image, start=1):
            inverse[value - 1] = element
        return PermutationMap(inverse)

    def compose(self, other: 'PermutationMap') -> 'PermutationMap':
        """The permutation i -> self(other(i))."""
        if other.n != self.n:
            raise PartitionError(f'Cannot compose permutations of [{self.n}] and [{other.n}].')
        return PermutationMap(self.image[value - 1] for value in other.image)

    def plain_str(self) -> str:
        return ','.join(str(value) for value in self.image)

    def __eq__(self, other):
        return isinstance(other, PermutationMap) and self.image == other.image

    def __hash__(self):
        return hash(self.image)


def _check_size(n):
    if not isinstance(n, int) or n < 1:
        raise PartitionError(f'The ground-set size must be a positive integer, got {n!r}.')


@functools.lru_cache(maxsize=None)
def _completion_counts(n: int):
    # counts[r][m]: number of ways to complete r positions of a restricted-growth string using m labels so far.
    counts = [[1] * (n + 2)]
    for r in range(1, n + 1):
        previous = counts[-1]
        counts.append([m * previous[m] + (previous[m + 1] if m + 1 <= n + 1 else 0) for m in range(n + 2)])
    return counts


@functools.lru_cache(maxsize=None)
def bell_number(n: int) -> int:
    """
    The number of partitions of [n], by the Bell triangle.
    """
    if n < 0:
        raise PartitionError(f'Bell numbers are defined for n >= 0, got {n}.')
    row = [1]
    for _ in range(n):
        next_row = [row[-1]]
        for value in row:
            next_row.append(next_row[-1] + value)
        row = next_row
    return row[0]


def canonicalize(raw: Iterable[Iterable[int]], n: int) -> Partition:
    """
    Build the canonical partition of [n] from an arbitrary collection of blocks.

    :param raw: Nonempty, pairwise disjoint integer collections covering [n].
    :param n: The ground-set size.
    :return: The partition with blocks sorted internally and by least element.
    """
    _check_size(n)
    labels = [None] * n
    for block_label, block in enumerate(raw):
        block = list(block)
        if len(block) == 0:
            raise PartitionError('Blocks must be nonempty.')
        for element in block:
            if not isinstance(element, int) or not 1 <= element <= n:
                raise PartitionError(f'Element {element!r} is out of the range [1, {n}].')
            if labels[element - 1] is not None:
                raise PartitionError(f'Element {element} belongs to more than one block.')
            labels[element - 1] = block_label
    for element, label in enumerate(labels, start=1):
        if label is None:
            raise PartitionError(f'Element {element} is not covered by any block.')
    return Partition.from_labels(labels)


def restrict(pi: Partition, m: int) -> Partition:
    """
    Restriction of a partition of [n] to [m]. The prefix of a restricted-growth string is one.
    """
    if not isinstance(m, int) or not 1 <= m <= pi.n:
        raise PartitionError(f'Cannot restrict a partition of [{pi.n}] to [{m}].')
    return Partition.from_labels(pi.code[:m])


def coag(pi: Partition, pi_prime: Partition) -> Partition:
    """
    Coagulation of pi by pi_prime: the blocks of pi whose labels share a block of pi_prime are merged.
    """
    if pi_prime.n != pi.num_blocks:
        raise PartitionError(f'Coagulation needs a partition of [{pi.num_blocks}], got one of [{pi_prime.n}].')
    return Partition.from_labels(pi_prime.code[label] for label in pi.code)


def frag(pi: Partition, pi_prime: Partition, k: int) -> Partition:
    """
    Fragmentation of the k-th block of pi by pi_prime, through the increasing bijection [l] -> B_k.
    """
    if not isinstance(k, int) or not 1 <= k <= pi.num_blocks:
        raise PartitionError(f'Block label {k} is out of the range [1, {pi.num_blocks}].')
    block = pi.blocks[k - 1]
    if pi_prime.n != len(block):
        raise PartitionError(f'Block {k} has {len(block)} elements but the fragmenting partition is of '
                             f'[{pi_prime.n}].')
    labels = list(pi.code)
    offset = pi.num_blocks - 1
    for position, element in enumerate(block):
        label = pi_prime.code[position]
        labels[element - 1] = k - 1 if label == 0 else offset + label
    return Partition.from_labels(labels)


def apply_permutation(pi: Partition, sigma: PermutationMap) -> Partition:
    """
    The partition sigma(pi), where i and j share a block iff sigma(i) and sigma(j) share a block of pi.
    """
    if sigma.n != pi.n:
        raise PartitionError(f'Cannot apply a permutation of [{sigma.n}] to a partition of [{pi.n}].')
    return Partition.from_labels(pi.code[value - 1] for value in sigma.image)


def _restricted_growth_strings(n: int):
    code = [0] * n
    maxima = [0] * n
    while True:
        yield tuple(code)
        position = n - 1
        while position > 0 and code[position] > maxima[position - 1]:
            position -= 1
        if position == 0:
            return
        code[position] += 1
        maxima[position] = max(maxima[position - 1], code[position])
        for j in range(position + 1, n):
            code[j] = 0
            maxima[j] = maxima[position]


@functools.lru_cache(maxsize=None)
def enumerate_partitions(n: int) -> Tuple[Partition, ...]:
    """
    All partitions of [n], in lexicographic restricted-growth-string order.

    :param n: The ground-set size, at most `MAX_ENUMERATION_N`.
    :return: A tuple of Bell(n) partitions; position i holds the partition of rank i.
    """
    _check_size(n)
    if n > MAX_ENUMERATION_N:
        raise StateSpaceTooLarge(f'P_{n} has {bell_number(n)} states, above the enumeration bound '
                                 f'n <= {MAX_ENUMERATION_N}.', n=n, bell=bell_number(n))
    partition_logger.debug(ENUMERATION_BUILD.format(bell_number(n), n))
    return tuple(Partition.from_labels(code) for code in _restricted_growth_strings(n))


def partition_rank(pi: Partition) -> int:
    """Position of pi in `enumerate_partitions(pi.n)`."""
    return PartitionIndex.from_partition(pi).rank()


_BLOCK_PATTERN = re.compile(r'\{([^{}]*)\}')


def parse_partition(text: str) -> Partition:
    """
    Parse the textual form "{1,3}{2}{4}".
    """
    stripped = ''.join(text.split())
    blocks = _BLOCK_PATTERN.findall(stripped)
    if ''.join('{' + block + '}' for block in blocks) != stripped or len(blocks) == 0:
        raise PartitionError(f'Cannot parse {text!r} as a partition.')
    try:
        raw = [[int(element) for element in block.split(',')] for block in blocks]
    except ValueError:
        raise PartitionError(f'Cannot parse {text!r} as a partition.')
    return canonicalize(raw, sum(len(block) for block in raw))


def parse_rgs(text: str) -> PartitionIndex:
    """
    Parse the comma separated restricted-growth string form "0,1,0,2".
    """
    try:
        code = [int(label) for label in text.split(',')]
    except ValueError:
        raise PartitionError(f'Cannot parse {text!r} as a restricted-growth string.')
    return PartitionIndex(code)
