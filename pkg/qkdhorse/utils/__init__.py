"""
Shared Utilities for every QkdHorse Component
"""

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

    'LOG_FORMAT',
    'basic_logger',

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

    'BLOCK',
    'derive_seed',
    'SeedStream',

    'Method',
    'Route',
    'BluePrint',
]

#** Imports **#

from .abc import *
from .errors import *
from .logging import *
from .rng import *
from .blueprint import *

