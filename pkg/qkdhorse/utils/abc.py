"""
Common DataTypes shared between every QkdHorse Component
"""
from enum import Enum, IntEnum
from typing import Union

#** Variables **#
__all__ = [
    'ZERO',
    'ONE',
    'NO_DETECT',
    'PRIVATE',

    'Role',
    'Setting',
    'Outcome',
    'DeviceMode',
]

#: outcome codes used inside numpy arrays
ZERO      = 0
ONE       = 1
NO_DETECT = -1

#: detected outcome whose value is not known to the holder (peer's bit)
PRIVATE = 2

#** Classes **#

class Role(Enum):
    ALICE = 'A'
    BOB   = 'B'

    @property
    def label(self) -> str:
        return self.name.lower()

    def peer(self) -> 'Role':
        return Role.BOB if self is Role.ALICE else Role.ALICE

class Setting(IntEnum):
    """analyzer orientation, 22.5 degrees apart"""
    ALPHA = 0
    BETA  = 1
    GAMMA = 2
    DELTA = 3

    @property
    def index(self) -> int:
        return int(self)

    @property
    def angle(self) -> float:
        return 22.5 * self.index

    @property
    def symbol(self) -> str:
        return 'αβγδ'[self.index]

class Outcome(Enum):
    ZERO      = '0'
    ONE       = '1'
    NO_DETECT = '.'

    @property
    def code(self) -> int:
        return _OUTCOME_CODES[self]

    @property
    def detected(self) -> bool:
        return self is not Outcome.NO_DETECT

    @property
    def bit(self) -> int:
        """
        key bit carried by a detected outcome

        :return: 0 or 1
        """
        if self is Outcome.NO_DETECT:
            raise ValueError('NoDetect never carries a key bit')
        return self.code

    @classmethod
    def from_code(cls, code: Union[int, 'Outcome']) -> 'Outcome':
        if isinstance(code, Outcome):
            return code
        return _CODE_OUTCOMES[int(code)]

class DeviceMode(Enum):
    QKD    = 'qkd'
    TROJAN = 'trojan'

#** Init **#

_OUTCOME_CODES = {Outcome.ZERO: ZERO, Outcome.ONE: ONE, Outcome.NO_DETECT: NO_DETECT}
_CODE_OUTCOMES = {v: k for k, v in _OUTCOME_CODES.items()}
