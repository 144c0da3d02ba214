from fractions import Fraction
from numbers import Real
from typing import Callable, Iterable, Sequence, Tuple

from pyefc.config import MASS_TOLERANCE
from pyefc.misc.exceptions import MeasureError
from pyefc.schema.schema import SerializableEfcElement


def _to_number(value, exact: bool):
    if isinstance(value, bool):
        raise MeasureError(f'Expected a number, got {value!r}.')
    if exact:
        try:
            return Fraction(str(value)) if not isinstance(value, Fraction) else value
        except ValueError:
            raise MeasureError(f'Cannot read {value!r} as a rational number.')
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            raise MeasureError(f'Cannot read {value!r} as a number.')
    if not isinstance(value, Real):
        raise MeasureError(f'Expected a number, got {value!r}.')
    return value


class RankedMassVector(SerializableEfcElement):
    """
    An element of the ranked-mass simplex with finitely many positive masses. The dust mass x_0 = 1 - sum(x_i) is
    derived, never stored.

    Examples:
        >>> RankedMassVector([0.2, 0.5])
        RankedMassVector(masses=(0.5, 0.2))

    Attributes:
        masses: The positive masses, sorted in nonincreasing order.
    """

    __slots__ = ('masses',)

    def __init__(self, masses: Iterable = ()):
        masses = tuple(sorted(masses, reverse=True))
        for mass in masses:
            if not mass > 0:
                raise MeasureError(f'Masses must be strictly positive, got {mass!r}.')
        if sum(masses) > 1 + MASS_TOLERANCE:
            raise MeasureError(f'Masses {masses} sum to {sum(masses)}, which exceeds 1.')
        self.masses = masses

    @property
    def total(self):
        return sum(self.masses)

    @property
    def dust(self):
        dust = 1 - self.total
        return min(max(dust, 0), 1)

    @property
    def num_parts(self) -> int:
        return len(self.masses)

    @property
    def is_proper(self) -> bool:
        """Membership in the set of vectors with total mass exactly one (up to the mass tolerance)."""
        return abs(self.total - 1) <= MASS_TOLERANCE

    @property
    def is_unit(self) -> bool:
        """True for the vector (1, 0, ...)."""
        return self.num_parts == 1 and self.is_proper

    @property
    def is_zero(self) -> bool:
        return self.num_parts == 0

    def power_sum(self, q):
        return sum(mass ** q for mass in self.masses)

    def plain_str(self) -> str:
        return '(' + ','.join(str(mass) for mass in self.masses) + ')'

    def to_dict(self):
        return [_plain_number(mass) for mass in self.masses]

    def __eq__(self, other):
        return isinstance(other, RankedMassVector) and self.masses == other.masses

    def __hash__(self):
        return hash(self.masses)

    def __len__(self):
        return self.num_parts


class DiscreteMeasureOnSimplex(SerializableEfcElement):
    """
    A finite measure on the ranked-mass simplex with finitely many atoms. Atoms at equal vectors are merged.

    Attributes:
        atoms: Tuple of (weight, RankedMassVector) pairs.
    """

    __slots__ = ('atoms',)

    def __init__(self, atoms: Iterable[Tuple[Real, RankedMassVector]] = ()):
        merged = {}
        for weight, vector in atoms:
            if not isinstance(vector, RankedMassVector):
                vector = RankedMassVector(vector)
            if not weight > 0:
                raise MeasureError(f'Atom weights must be strictly positive, got {weight!r} at {vector.plain_str()}.')
            merged[vector] = merged.get(vector, 0) + weight
        self.atoms = tuple((weight, vector) for vector, weight in merged.items())

    @property
    def total_mass(self):
        return sum(weight for weight, _ in self.atoms)

    @property
    def is_empty(self) -> bool:
        return len(self.atoms) == 0

    def integrate(self, f: Callable[[RankedMassVector], Real]):
        """The integral of f against the measure."""
        return sum(weight * f(vector) for weight, vector in self.atoms)

    def mass_of(self, predicate: Callable[[RankedMassVector], bool]):
        return sum(weight for weight, vector in self.atoms if predicate(vector))

    def plain_str(self) -> str:
        return '{' + ', '.join(f'{weight}@{vector.plain_str()}' for weight, vector in self.atoms) + '}'

    def to_dict(self):
        return [{'weight': _plain_number(weight), 'masses': vector.to_dict()} for weight, vector in self.atoms]

    def __iter__(self):
        return iter(self.atoms)

    def __len__(self):
        return len(self.atoms)

    def __eq__(self, other):
        return isinstance(other, DiscreteMeasureOnSimplex) and set(self.atoms) == set(other.atoms)

    def __hash__(self):
        return hash(frozenset(self.atoms))


class Characteristics(SerializableEfcElement):
    """
    The four characteristics of an exchangeable fragmentation-coalescence process: the erosion rate c_e, the Kingman
    rate c_k, the dislocation measure and the coagulation measure.

    Construction only checks types and signs of weights; the remaining requirements are reported by
    `validate_characteristics`.

    Attributes:
        c_e: Erosion rate.
        c_k: Kingman coalescence rate.
        nu_disl: Dislocation measure.
        nu_coag: Coagulation measure.
    """

    __slots__ = ('c_e', 'c_k', 'nu_disl', 'nu_coag')

    def __init__(self, c_e: Real = 0, c_k: Real = 0, nu_disl: DiscreteMeasureOnSimplex = None,
                 nu_coag: DiscreteMeasureOnSimplex = None):
        self.c_e = c_e
        self.c_k = c_k
        self.nu_disl = nu_disl if nu_disl is not None else DiscreteMeasureOnSimplex()
        self.nu_coag = nu_coag if nu_coag is not None else DiscreteMeasureOnSimplex()

    @property
    def is_exact(self) -> bool:
        """True when every number is an int or a Fraction, so that rates can be computed in rational arithmetic."""
        numbers = [self.c_e, self.c_k]
        for measure in (self.nu_disl, self.nu_coag):
            for weight, vector in measure:
                numbers.append(weight)
                numbers.extend(vector.masses)
        return all(isinstance(number, (int, Fraction)) for number in numbers)

    @property
    def has_fragmentation(self) -> bool:
        return self.c_e > 0 or any(not vector.is_unit for _, vector in self.nu_disl)

    @property
    def has_coalescence(self) -> bool:
        return self.c_k > 0 or any(not vector.is_zero for _, vector in self.nu_coag)

    def is_binary_fragmentation(self) -> bool:
        """No erosion and every dislocation atom splits into exactly two parts with no dust."""
        return self.c_e == 0 and all(vector.num_parts == 2 and vector.is_proper for _, vector in self.nu_disl)

    def is_conservative_fragmentation(self) -> bool:
        """Every dislocation atom carries no dust."""
        return all(vector.is_proper for _, vector in self.nu_disl)

    def satisfies_hypothesis_h(self) -> bool:
        """Conservative dislocations with finitely many parts, no erosion, no coagulation measure and c_k > 0."""
        return (self.c_e == 0 and self.c_k > 0 and self.nu_coag.is_empty
                and self.is_conservative_fragmentation())

    def satisfies_hypothesis_h_prime(self) -> bool:
        """No Kingman component and conservative dislocations."""
        return self.c_k == 0 and self.is_conservative_fragmentation()

    def fragmentates_quickly(self) -> bool:
        # An infinite dislocation measure is not representable, so only erosion can make splitting fast.
        return self.c_e > 0

    def coalesces_quickly(self) -> bool:
        # Finite atoms give a finite integral of sum(x_i), so only the Kingman part can make coalescence fast.
        return self.c_k > 0

    def plain_str(self) -> str:
        return (f'c_e={self.c_e}, c_k={self.c_k}, nu_disl={self.nu_disl.plain_str()}, '
                f'nu_coag={self.nu_coag.plain_str()}')

    def to_dict(self):
        return {
            'c_e': _plain_number(self.c_e),
            'c_k': _plain_number(self.c_k),
            'nu_disl': self.nu_disl.to_dict(),
            'nu_coag': self.nu_coag.to_dict(),
        }

    def __eq__(self, other):
        return (isinstance(other, Characteristics) and self.c_e == other.c_e and self.c_k == other.c_k
                and self.nu_disl == other.nu_disl and self.nu_coag == other.nu_coag)

    def __hash__(self):
        return hash((self.c_e, self.c_k, self.nu_disl, self.nu_coag))


def _plain_number(value):
    if isinstance(value, Fraction):
        return str(value) if value.denominator != 1 else value.numerator
    return value


def measure_from_list(atoms: Sequence[dict], exact: bool = False) -> DiscreteMeasureOnSimplex:
    """
    Build a measure from its structured form, a list of {weight, masses} mappings.
    """
    if atoms is None:
        return DiscreteMeasureOnSimplex()
    if not isinstance(atoms, (list, tuple)):
        raise MeasureError(f'A measure is a list of atoms, got {type(atoms).__name__}.')

    parsed = []
    for atom in atoms:
        if not isinstance(atom, dict) or set(atom.keys()) != {'weight', 'masses'}:
            raise MeasureError(f'Each atom needs exactly the keys "weight" and "masses", got {atom!r}.')
        masses = atom['masses'] if atom['masses'] is not None else []
        vector = RankedMassVector(_to_number(mass, exact) for mass in masses)
        parsed.append((_to_number(atom['weight'], exact), vector))
    return DiscreteMeasureOnSimplex(parsed)


CHARACTERISTICS_KEYS = ('c_e', 'c_k', 'nu_disl', 'nu_coag')


def characteristics_from_dict(data: dict, exact: bool = False) -> Characteristics:
    """
    Build characteristics from their structured form.

    :param data: Mapping with the keys c_e, c_k, nu_disl and nu_coag (all optional).
    :param exact: If True, numbers are read as rationals.
    :return: The characteristics.
    """
    if not isinstance(data, dict):
        raise MeasureError(f'Characteristics must be a mapping, got {type(data).__name__}.')
    unknown = set(data.keys()) - set(CHARACTERISTICS_KEYS)
    if unknown:
        raise MeasureError(f'Unknown characteristics keys: {sorted(unknown)}.')

    return Characteristics(c_e=_to_number(data.get('c_e', 0), exact),
                           c_k=_to_number(data.get('c_k', 0), exact),
                           nu_disl=measure_from_list(data.get('nu_disl'), exact),
                           nu_coag=measure_from_list(data.get('nu_coag'), exact))
