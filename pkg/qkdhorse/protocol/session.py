"""
In-Process Ekert Session Loop
"""
import logging
from typing import Dict

import numpy as np

from . import SessionConfig, SessionTranscript, SettingPolicy
from ..channel import PulseBatch, emit_batch, quantum_outcomes
from ..device import *
from ..utils import DeviceMode, Role

#** Variables **#
__all__ = ['Session', 'run_session']

logger = logging.getLogger(__name__)

#** Functions **#

def sweep_settings(seqs: np.ndarray, n_slots: int):
    """setting pair p visits every slot at rounds p*N .. p*N + N-1"""
    pair = (seqs // n_slots) % 16
    return (pair // 4).astype(np.int8), (pair % 4).astype(np.int8)

#** Classes **#

class Session:
    """
    one Ekert session: a Normal initiation at round 0, optional extra
    initiations (the activation pulse), then ``rounds`` pulses
    """

    def __init__(self, config: SessionConfig):
        self.config  = config
        self.started = False
        self.initiations: Dict[int, InitiationPulse] = {
            0: InitiationPulse(InitiationKind.NORMAL, config.session_id),
        }
        if config.activate_at is not None:
            self.schedule_activation(config.activate_at)

    def schedule_activation(self, at_round: int = 0):
        """
        deliver a TrojanActivate initiation to both receivers at ``at_round``

        :param at_round: round before which the pulse arrives
        """
        if self.started:
            raise RuntimeError('session already running')
        if at_round < 0:
            raise ValueError(f'activation round must be non-negative: {at_round}')
        self.initiations[at_round] = InitiationPulse(
            InitiationKind.TROJAN_ACTIVATE, self.config.session_id)

    def receiver(self, role: Role) -> ReceiverState:
        cfg   = self.config
        table = cfg.tables.table(role) if cfg.tables is not None else None
        return ReceiverState(
            role=role,
            table=table,
            mask_kappa=cfg.mask_kappa,
            rng_seed=cfg.seed_for(role),
            channel=cfg.channel,
        )

    def run(self) -> SessionTranscript:
        """
        execute every round and assemble the transcript

        :return: transcript of the finished session
        """
        self.started = True
        cfg    = self.config
        seqs   = np.arange(cfg.rounds, dtype=np.int64)
        pulses = emit_batch(cfg.channel, seqs)
        states = {role: self.receiver(role) for role in Role}
        if cfg.setting_policy is SettingPolicy.SWEEP:
            settings = dict(zip(Role, sweep_settings(seqs, cfg.channel.n_slots)))
        else:
            settings = {role: choose_settings(states[role], seqs) for role in Role}
        outcomes = {role: np.empty(cfg.rounds, dtype=np.int8) for role in Role}
        trojan   = np.zeros(cfg.rounds, dtype=bool)
        edges    = sorted(r for r in self.initiations if r < cfg.rounds) + [cfg.rounds]
        for lo, hi in zip(edges, edges[1:]):
            pulse  = self.initiations[lo]
            states = {r: handle_initiation(s, pulse, lo) for r, s in states.items()}
            part   = PulseBatch(pulses.seqs[lo:hi], pulses.slots[lo:hi], pulses.polbits[lo:hi])
            arm    = {}
            if any(s.mode is DeviceMode.QKD for s in states.values()):
                arm = dict(zip(Role, quantum_outcomes(cfg.channel, part.seqs,
                    settings[Role.ALICE][lo:hi], settings[Role.BOB][lo:hi])))
            for role, state in states.items():
                outcomes[role][lo:hi] = measure_batch(
                    state, part, settings[role][lo:hi], arm.get(role))
            trojan[lo:hi] = states[Role.ALICE].mode is DeviceMode.TROJAN
        logger.info('session %d finished: %d rounds (%d in trojan mode)',
            cfg.session_id, cfg.rounds, int(trojan.sum()))
        return SessionTranscript(
            seqs=seqs,
            slots=pulses.slots,
            settings_a=settings[Role.ALICE],
            settings_b=settings[Role.BOB],
            outcomes_a=outcomes[Role.ALICE],
            outcomes_b=outcomes[Role.BOB],
            polbits=pulses.polbits,
            trojan=trojan,
            config=cfg,
        )

def run_session(config: SessionConfig) -> SessionTranscript:
    """
    run a complete session

    :param config: session configuration
    :return:       transcript of the session
    """
    return Session(config).run()
