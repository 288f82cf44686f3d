"""
QkdHorse Exception Hierarchy
"""
from typing import Any, Optional

#** Variables **#
__all__ = [
    'QkdHorseError',

    'NotMultipleOf8000',
    'SlotOutOfRange',
    'InfeasibleTargets',
    'SearchExhausted',
    'MismatchedSizes',
    'FormatError',
    'RoleMissing',
    'LengthMismatch',

    'WrongBackend',
    'ModeInputMismatch',

    'IncompleteTranscript',
    'EmptyCell',
    'EmptyKey',

    'MissingTimings',
    'MissingTables',

    'InsufficientData',
    'EtaOutOfRange',

    'ConnectionLost',
    'ProtocolViolation',
]

#** Classes **#

class QkdHorseError(Exception):
    """base error for every failure raised by qkdhorse"""

class NotMultipleOf8000(QkdHorseError, ValueError):

    def __init__(self, n_slots: Any):
        self.n_slots = n_slots
        super().__init__(f'slot count must be a positive multiple of 8000: {n_slots!r}')

class SlotOutOfRange(QkdHorseError, ValueError):

    def __init__(self, slot: int, n_slots: int):
        self.slot    = slot
        self.n_slots = n_slots
        super().__init__(f'slot {slot} outside 0..{n_slots - 1}')

class InfeasibleTargets(QkdHorseError, ValueError):
    pass

class SearchExhausted(QkdHorseError):

    def __init__(self, max_iters: int, cost: Optional[int] = None):
        self.max_iters = max_iters
        self.cost      = cost
        extra = f' (remaining violation {cost})' if cost is not None else ''
        super().__init__(f'no satisfying tables within {max_iters} iterations{extra}')

class MismatchedSizes(QkdHorseError, ValueError):
    pass

class FormatError(QkdHorseError, ValueError):

    def __init__(self, line: int, reason: str):
        self.line   = line
        self.reason = reason
        super().__init__(f'line {line}: {reason}')

class RoleMissing(QkdHorseError, ValueError):
    pass

class LengthMismatch(QkdHorseError, ValueError):

    def __init__(self, expected: int, actual: int, what: str = 'data'):
        self.expected = expected
        self.actual   = actual
        super().__init__(f'{what} length {actual} != expected {expected}')

class WrongBackend(QkdHorseError, ValueError):
    pass

class ModeInputMismatch(QkdHorseError, TypeError):
    pass

class IncompleteTranscript(QkdHorseError, ValueError):
    pass

class EmptyCell(QkdHorseError, ValueError):
    pass

class EmptyKey(QkdHorseError, ValueError):
    pass

class MissingTimings(QkdHorseError):
    pass

class MissingTables(QkdHorseError):
    pass

class InsufficientData(QkdHorseError, ValueError):
    pass

class EtaOutOfRange(QkdHorseError, ValueError):

    def __init__(self, eta: float):
        self.eta = eta
        super().__init__(f'detection efficiency must satisfy 0 < eta <= 1: {eta!r}')

class ConnectionLost(QkdHorseError):

    def __init__(self, role: str, line: Optional[int] = None, reason: str = 'closed'):
        self.role   = role
        self.line   = line
        self.reason = reason
        where = f' at line {line}' if line is not None else ''
        super().__init__(f'connection to {role} lost{where}: {reason}')

class ProtocolViolation(QkdHorseError):

    def __init__(self, expected: Any, actual: Any, what: str = 'seq'):
        self.expected = expected
        self.actual   = actual
        super().__init__(f'{what} out of order: expected {expected!r}, got {actual!r}')
