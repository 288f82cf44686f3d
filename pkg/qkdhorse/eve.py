"""
The Eavesdropper: Activation, Key Reconstruction and Polarization Tap

Eve never touches Alice's or Bob's private records. She reads the public
announcements, the emission timing of the pulsed source (seq -> slot) and,
against the masked variant, the polarization of each pulse.
"""
import json
import logging
from pathlib import Path
from typing import Dict, Iterator, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from pyderive import dataclass, field

from .channel import ChannelConfig, PulseEvent
from .protocol import ClassicalMessage, SessionTranscript, SiftedKey
from .protocol.session import Session
from .tables import TablePair, lookup_many
from .utils import NO_DETECT, Role, Setting
from .utils.errors import EmptyKey, FormatError, MissingTables, MissingTimings, WrongBackend

#** Variables **#
__all__ = [
    'SeqMap',
    'PublicLog',
    'EveKnowledge',
    'AttackReport',

    'inject_activation',
    'reconstruct_key',
    'tap_polarization',
    'score_attack',
    'segment_accuracy',
    'export_taps',
    'import_taps',
]

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

#** Classes **#

class SeqMap(Mapping[int, int]):
    """read-only seq -> value map backed by sorted numpy columns"""

    def __init__(self, seqs: np.ndarray, values: np.ndarray):
        seqs   = np.asarray(seqs, dtype=np.int64)
        values = np.asarray(values, dtype=np.int64)
        if seqs.shape != values.shape:
            raise ValueError('seqs and values differ in shape')
        order = np.argsort(seqs, kind='stable')
        self.seqs   = seqs[order]
        self.values = values[order]

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, int]) -> 'SeqMap':
        if isinstance(mapping, SeqMap):
            return mapping
        keys = np.fromiter(mapping.keys(), dtype=np.int64, count=len(mapping))
        vals = np.fromiter(mapping.values(), dtype=np.int64, count=len(mapping))
        return cls(keys, vals)

    def __len__(self) -> int:
        return len(self.seqs)

    def __iter__(self) -> Iterator[int]:
        return iter(self.seqs.tolist())

    def __getitem__(self, seq: int) -> int:
        values, found = self.take(np.array([seq]))
        if not found[0]:
            raise KeyError(seq)
        return int(values[0])

    def take(self, seqs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        vectorized lookup

        :param seqs: rounds to look up
        :return:     (values, found-mask); missing rounds hold 0
        """
        seqs  = np.asarray(seqs, dtype=np.int64)
        if not len(self.seqs):
            return np.zeros(seqs.shape, np.int64), np.zeros(seqs.shape, bool)
        index = np.minimum(np.searchsorted(self.seqs, seqs), len(self.seqs) - 1)
        found = self.seqs[index] == seqs
        return np.where(found, self.values[index], 0), found

class PublicLog(Sequence[ClassicalMessage]):
    """
    the broadcast announcements of a transcript, alice before bob each round

    holds only the public columns; messages are built on access
    """

    def __init__(self,
        seqs:       np.ndarray,
        settings_a: np.ndarray,
        settings_b: np.ndarray,
        det_a:      np.ndarray,
        det_b:      np.ndarray,
    ):
        self.seqs       = np.asarray(seqs, dtype=np.int64)
        self.settings_a = np.asarray(settings_a, dtype=np.int8)
        self.settings_b = np.asarray(settings_b, dtype=np.int8)
        self.det_a      = np.asarray(det_a, dtype=bool)
        self.det_b      = np.asarray(det_b, dtype=bool)

    @classmethod
    def from_transcript(cls, transcript: SessionTranscript) -> 'PublicLog':
        return cls(
            transcript.seqs,
            transcript.settings_a,
            transcript.settings_b,
            transcript.detected(Role.ALICE),
            transcript.detected(Role.BOB),
        )

    @classmethod
    def from_messages(cls, messages: Sequence[ClassicalMessage]) -> 'PublicLog':
        rounds: Dict[int, Dict[Role, ClassicalMessage]] = {}
        for msg in messages:
            rounds.setdefault(msg.seq, {})[msg.sender] = msg
        seqs = sorted(seq for seq, sides in rounds.items() if len(sides) == 2)
        a = [rounds[seq][Role.ALICE] for seq in seqs]
        b = [rounds[seq][Role.BOB] for seq in seqs]
        return cls(
            np.array(seqs, dtype=np.int64),
            np.array([m.setting.index for m in a], dtype=np.int8),
            np.array([m.setting.index for m in b], dtype=np.int8),
            np.array([m.detected for m in a], dtype=bool),
            np.array([m.detected for m in b], dtype=bool),
        )

    def __len__(self) -> int:
        return 2 * len(self.seqs)

    def __getitem__(self, i: int) -> ClassicalMessage:
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        row, side = divmod(i, 2)
        seq = int(self.seqs[row])
        if side == 0:
            return ClassicalMessage(seq, Role.ALICE, bool(self.det_a[row]), Setting(int(self.settings_a[row])))
        return ClassicalMessage(seq, Role.BOB, bool(self.det_b[row]), Setting(int(self.settings_b[row])))

    def key_rounds(self) -> Tuple[np.ndarray, np.ndarray]:
        """rounds announced both-detected with equal settings, and their setting"""
        key = self.det_a & self.det_b & (self.settings_a == self.settings_b)
        return self.seqs[key], self.settings_a[key]

@dataclass
class EveKnowledge:
    tables:        Optional[TablePair] = field(default=None, repr=False)
    pulse_timings: Optional[Mapping[int, int]] = field(default=None, repr=False)
    pol_taps:      Optional[Mapping[int, int]] = field(default=None, repr=False)
    classical_log: Sequence[ClassicalMessage] = field(default_factory=list, repr=False)

    @classmethod
    def observe(cls,
        transcript: SessionTranscript,
        tables:     Optional[TablePair] = None,
        tap:        bool = False,
        skip:       int = 0,
    ) -> 'EveKnowledge':
        """
        collect what Eve sees of a session

        :param transcript: finished session
        :param tables:     Eve's copy of the translation tables
        :param tap:        also tap the polarization of every pulse
        :param skip:       number of leading pulses Eve missed
        :return:           Eve's knowledge of the session
        """
        seen = (transcript.slots >= 0) & (np.arange(len(transcript)) >= skip)
        seqs = transcript.seqs[seen]
        taps = None
        if tap:
            config = transcript.config.channel if transcript.config else None
            if config is None or not config.masked:
                backend = config.backend.value if config else 'unknown'
                raise WrongBackend(f'no polarization to tap on {backend} backend')
            taps = SeqMap(seqs, transcript.polbits[seen])
        return cls(
            tables=tables,
            pulse_timings=SeqMap(seqs, transcript.slots[seen]),
            pol_taps=taps,
            classical_log=PublicLog.from_transcript(transcript),
        )

@dataclass
class AttackReport:
    reconstructed_bits: Dict[int, int] = field(default_factory=dict, repr=False)
    accuracy_vs_alice:  Optional[float] = None
    coverage:           Optional[float] = None

    def __post_init__(self):
        for name in ('accuracy_vs_alice', 'coverage'):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ValueError(f'{name} must lie in [0, 1]: {value!r}')

    def to_dict(self) -> dict:
        """json form; an ungraded report carries no accuracy key"""
        bits = sorted(self.reconstructed_bits.items())
        doc  = {'coverage': self.coverage, 'bits': {str(seq): bit for seq, bit in bits}}
        if self.accuracy_vs_alice is not None:
            doc = {'accuracy': self.accuracy_vs_alice, **doc}
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(',', ':'))

#** Functions **#

def inject_activation(session: Session, at_round: int = 0):
    """
    make the initiation delivered at ``at_round`` a TrojanActivate pulse

    :param session:  session not yet started
    :param at_round: round before which the pulse is delivered
    """
    session.schedule_activation(at_round)
    logger.info('activation injected at round %d', at_round)

def tap_polarization(pulse: PulseEvent, config: ChannelConfig) -> int:
    """
    measure the pulse in its preparation basis (noiseless, undetectable)

    :param pulse:  pulse on the quantum channel
    :param config: channel the pulse travels on
    :return:       the pulse's polarization bit
    """
    if not config.masked:
        raise WrongBackend(f'no polarization to tap on {config.backend.value} backend')
    return pulse.polbit

def reconstruct_key(knowledge: EveKnowledge) -> AttackReport:
    """
    predict every sifted bit from public data and the tables

    :param knowledge: what Eve observed
    :return:          predicted bits for every key round with a known slot
    """
    if knowledge.tables is None:
        raise MissingTables('key reconstruction needs both translation tables')
    if knowledge.pulse_timings is None:
        raise MissingTimings('key reconstruction needs the pulse timings')
    log = knowledge.classical_log
    if not isinstance(log, PublicLog):
        log = PublicLog.from_messages(log)
    seqs, settings = log.key_rounds()
    slots, known   = SeqMap.from_mapping(knowledge.pulse_timings).take(seqs)
    seqs, settings, slots = seqs[known], settings[known], slots[known]
    bits = lookup_many(knowledge.tables.alice, slots, settings).astype(np.int64)
    # a NoDetect entry means the round was not produced by the table
    bits = np.where(bits == NO_DETECT, 0, bits)
    if knowledge.pol_taps is not None:
        pols, tapped = SeqMap.from_mapping(knowledge.pol_taps).take(seqs)
        bits = np.where(tapped, bits ^ pols, bits)
    logger.debug('reconstructed %d of %d key rounds', len(seqs), len(known))
    return AttackReport(dict(zip(seqs.tolist(), bits.tolist())))

def _matches(report: AttackReport, key: SiftedKey) -> Tuple[np.ndarray, np.ndarray]:
    predicted = SeqMap.from_mapping(report.reconstructed_bits) if report.reconstructed_bits \
        else SeqMap(np.zeros(0), np.zeros(0))
    bits, covered = predicted.take(key.seqs)
    return covered, covered & (bits == key.bits)

def score_attack(report: AttackReport, key_a: SiftedKey) -> AttackReport:
    """
    grade Eve's prediction against Alice's actual sifted key

    :param report: reconstruction to grade
    :param key_a:  alice's sifted key
    :return:       report with accuracy and coverage filled in
    """
    if not len(key_a):
        raise EmptyKey('cannot score an attack on an empty key')
    covered, correct = _matches(report, key_a)
    n_covered = int(covered.sum())
    return AttackReport(
        reconstructed_bits=report.reconstructed_bits,
        accuracy_vs_alice=float(correct.sum()) / n_covered if n_covered else None,
        coverage=n_covered / len(key_a),
    )

def segment_accuracy(
    report: AttackReport,
    key_a:  SiftedKey,
    split:  int,
) -> Tuple[Optional[float], Optional[float]]:
    """
    accuracy on key rounds before and from ``split``

    :param report: reconstruction to grade
    :param key_a:  alice's sifted key
    :param split:  first round of the second segment
    :return:       (accuracy before, accuracy after); None for an empty segment
    """
    covered, correct = _matches(report, key_a)
    later  = key_a.seqs >= split
    result = []
    for part in (~later, later):
        n = int((covered & part).sum())
        result.append(float((correct & part).sum()) / n if n else None)
    return result[0], result[1]

def export_taps(transcript: SessionTranscript, path: PathLike):
    """
    write the polarization tap of a masked session, one ``{"q","pol"}`` per line

    :param transcript: masked-backend session
    :param path:       destination path
    """
    taps = EveKnowledge.observe(transcript, tap=True).pol_taps
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        for seq, pol in zip(taps.seqs.tolist(), taps.values.tolist()):
            f.write(json.dumps({'q': seq, 'pol': pol}, separators=(',', ':')) + '\n')

def import_taps(path: PathLike) -> SeqMap:
    """
    read a polarization tap file

    :param path: file written by `export_taps`
    :return:     seq -> polbit map
    """
    seqs, pols = [], []
    with open(path, 'r', encoding='utf-8') as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise FormatError(lineno, f'invalid json: {e.msg}') from None
            if not isinstance(record, dict) or set(record) != {'q', 'pol'} \
                    or type(record['q']) is not int or record['pol'] not in (0, 1) \
                    or type(record['pol']) is not int:
                raise FormatError(lineno, 'expected {"q": <int>, "pol": 0|1}')
            seqs.append(record['q'])
            pols.append(record['pol'])
    return SeqMap(np.array(seqs, dtype=np.int64), np.array(pols, dtype=np.int64))
