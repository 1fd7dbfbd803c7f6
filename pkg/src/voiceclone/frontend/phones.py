"""Phone symbols, sequences and the closed phone inventory.

The inventory always contains the two special symbols: SIL (silence) and
SP (short pause). Models index phones through the inventory, so its
symbol order is part of every checkpoint.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

SIL = "SIL"
SP = "SP"
SPECIAL_SYMBOLS = (SIL, SP)


@dataclass(frozen=True)
class Phone:
    symbol: str

    @property
    def is_special(self) -> bool:
        return self.symbol in SPECIAL_SYMBOLS


@dataclass
class PhoneSequence:
    phones: list[Phone] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.phones)

    def __iter__(self) -> Iterator[Phone]:
        return iter(self.phones)

    @property
    def symbols(self) -> list[str]:
        return [p.symbol for p in self.phones]

    @classmethod
    def from_symbols(cls, symbols: Iterable[str]) -> "PhoneSequence":
        return cls([Phone(s) for s in symbols])


class PhoneInventory:
    """Ordered closed set of phone symbols with stable integer ids.

    SIL and SP are always present and sit at the front so their ids do
    not depend on the corpus.
    """

    def __init__(self, symbols: Iterable[str] = ()):
        ordered: list[str] = list(SPECIAL_SYMBOLS)
        seen = set(ordered)
        for sym in symbols:
            if sym not in seen:
                ordered.append(sym)
                seen.add(sym)
        self._symbols = ordered
        self._ids = {s: i for i, s in enumerate(ordered)}

    def __len__(self) -> int:
        return len(self._symbols)

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._ids

    @property
    def symbols(self) -> list[str]:
        return list(self._symbols)

    def id_of(self, symbol: str) -> int:
        return self._ids[symbol]

    def symbol_of(self, phone_id: int) -> str:
        return self._symbols[phone_id]

    def to_ids(self, sequence: PhoneSequence | Iterable[str]) -> list[int]:
        symbols = sequence.symbols if isinstance(sequence, PhoneSequence) else list(sequence)
        return [self._ids[s] for s in symbols]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PhoneInventory) and other._symbols == self._symbols
