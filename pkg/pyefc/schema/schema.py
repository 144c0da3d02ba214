from abc import ABC, abstractmethod


class ReprMixIn:
    """
    Adds generic functionality for printing string representations.
    """

    def __repr__(self):
        if len(self.__slots__) > 0:
            attrs_str = ', '.join('{}={!r}'.format(attr, self.__getattribute__(attr)) for attr in self.__slots__
                                  if not attr.startswith('_'))
        else:
            attrs_str = ', '.join('{}={!r}'.format(k, v) for k, v in self.__dict__.items())

        return f'{self.__class__.__name__}({attrs_str})'


class EfcElement(ABC, ReprMixIn):
    """
    Interface for the value types of the package, e.g., partitions, mass vectors and measures.
    """

    __slots__ = ()

    @abstractmethod
    def plain_str(self) -> str:
        """
        Interface for the textual form of the element. The textual form must parse back to an equal element.

        :return: The textual form of the element.
        """
        pass


class SerializableEfcElement(EfcElement):
    """
    Interface for elements stored in configuration files and reports.
    """

    __slots__ = ()

    @abstractmethod
    def to_dict(self):
        """
        Interface for the structured (YAML/JSON ready) form of the element.

        :return: A structure made of dicts, lists, strings and numbers.
        """
        pass
