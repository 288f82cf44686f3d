"""
QkdHorse Command Line: Tables, Sessions, Attacks, Audits and the Demo
"""
import sys
import json
import asyncio
import logging
from typing import List, Optional, Sequence

import cli
import uvicorn
from pyderive.extensions.validate import BaseModel

from .analysis import audit
from .channel import Backend, ChannelConfig, SlotPolicy
from .eve import EveKnowledge, export_taps, import_taps, reconstruct_key, score_attack
from .netdemo import RoleConfig, replay_receiver, run_eve, run_receiver, serve_source
from .protocol import SessionConfig, SettingPolicy, run_session
from .protocol.transcript import export_transcript, import_transcript
from .report import Context, build_report, webapp
from .tables import TablePair, derive_targets, load_table, save_table
from .tables import verify_tables as recount_tables
from .tables.generate import DEFAULT_MAX_ITERS, generate_tables
from .utils import basic_logger, derive_seed
from .utils.errors import QkdHorseError

#** Variables **#
__all__ = ['UsageError', 'execute', 'qkdhorse', 'dispatch', 'main']

logger = logging.getLogger('qkdhorse')

#** Classes **#

class UsageError(ValueError):
    """bad flag combination or value, reported through the usage handler"""
    pass

class GenTablesOptions(BaseModel, compat=True):
    seed:      int
    out_a:     str
    out_b:     str
    n:         int = 8000
    max_iters: int = DEFAULT_MAX_ITERS
    as_json:   bool = False

class VerifyTablesOptions(BaseModel, compat=True):
    a:       str
    b:       str
    as_json: bool = False

class SimulateOptions(BaseModel, compat=True):
    seed:           int
    backend:        str = 'trojan'
    rounds:         int = 100_000
    n:              int = 8000
    slot_policy:    str = 'uniform'
    setting_policy: str = 'random'
    eta:            float = 1.0
    noise_q:        float = 0.0
    mask_kappa:     float = 1.0
    activate_at:    Optional[int] = None
    dormant:        bool = False
    a:              Optional[str] = None
    b:              Optional[str] = None
    out:            Optional[str] = None
    taps:           Optional[str] = None
    as_json:        bool = False

class AttackOptions(BaseModel, compat=True):
    transcript: str
    a:          str
    b:          str
    taps:       Optional[str] = None
    as_json:    bool = False

class DetectOptions(BaseModel, compat=True):
    transcript: str
    a:          Optional[str] = None
    b:          Optional[str] = None
    n:          Optional[int] = None
    bins:       int = 16
    alpha:      float = 1e-6
    as_json:    bool = False

class ServeOptions(RoleConfig, compat=True):
    replay:  Optional[str] = None
    as_json: bool = False

class ReportOptions(BaseModel, compat=True):
    transcript: str
    a:          Optional[str] = None
    b:          Optional[str] = None
    n:          Optional[int] = None
    taps:       Optional[str] = None
    serve:      bool = False
    host:       str = '127.0.0.1'
    port:       int = 8000
    as_json:    bool = False

#** Functions **#

def emit(args, document: dict, lines: Sequence[str]):
    """print the json document or the human-readable lines"""
    if args.as_json:
        print(json.dumps(document, indent=2))
        return
    for line in lines:
        print(line)

def load_pair(path_a: str, path_b: str) -> TablePair:
    """
    read an alice/bob table pair

    :param path_a: alice's table file
    :param path_b: bob's table file
    :return:       table pair checked against the targets of its size
    """
    alice, bob = load_table(path_a), load_table(path_b)
    return TablePair(alice, bob, derive_targets(alice.n_slots))

def maybe_pair(args) -> Optional[TablePair]:
    if args.a is None and args.b is None:
        return None
    if args.a is None or args.b is None:
        raise UsageError('--a and --b must be given together')
    return load_pair(args.a, args.b)

def fmt(value: Optional[float], digits: int = 5) -> str:
    return 'n/a' if value is None else f'{value:.{digits}f}'

def slot_count(args, tables: Optional[TablePair]) -> int:
    """slot count of a transcript: explicit, from the tables, or the standard 8000"""
    if args.n is not None:
        return args.n
    return tables.n_slots if tables is not None else 8000

#** Commands **#

def cmd_gen_tables(args: GenTablesOptions) -> int:
    """generate and save a table pair meeting every count constraint"""
    pair = generate_tables(derive_targets(args.n), args.seed, args.max_iters)
    save_table(pair.alice, args.out_a)
    save_table(pair.bob, args.out_b)
    report = recount_tables(pair)
    emit(args, {'n_slots': args.n, 'seed': args.seed, 'verification': report.to_dict()}, [
        f'wrote {args.out_a} and {args.out_b} (N={args.n}, seed={args.seed})',
        f'verification {"PASS" if report.passed else "FAIL"}',
    ])
    return 0 if report.passed else 1

def cmd_verify_tables(args: VerifyTablesOptions) -> int:
    """recount every constraint of a saved table pair"""
    report = recount_tables(load_pair(args.a, args.b))
    diffs  = '  '.join(f'|d|={d}: {report.diff_by_shift[d]}' for d in range(4))
    s      = report.chsh_s
    lines  = [
        f'singles   A {report.singles_a}  B {report.singles_b}',
        f'pairs     {report.pairs_by_shift[0]}',
        f'diffs     {diffs}',
        'S         n/a' if s is None else f'S         {s.numerator}/{s.denominator} ({float(s):.5f})',
    ]
    lines.extend(f'violation {c}: expected {e}, got {a}' for c, e, a in report.violations)
    lines.append(f'result    {"PASS" if report.passed else "FAIL"}')
    emit(args, report.to_dict(), lines)
    return 0 if report.passed else 1

def cmd_simulate(args: SimulateOptions) -> int:
    """run one seeded session and write its transcript"""
    if args.dormant and args.activate_at is not None:
        raise UsageError('--activate-at and --dormant are mutually exclusive')
    try:
        backend = Backend(args.backend)
        channel = ChannelConfig(
            backend=backend,
            n_slots=args.n,
            slot_policy=SlotPolicy(args.slot_policy),
            eta=args.eta,
            noise_q=args.noise_q,
        )
        setting_policy = SettingPolicy(args.setting_policy)
    except ValueError as e:
        raise UsageError(str(e)) from None
    tables = maybe_pair(args)
    if tables is None and channel.trojan:
        seed   = derive_seed(args.seed, 'tables')
        logger.info('no tables given, generating N=%d with seed %d', args.n, seed)
        tables = generate_tables(derive_targets(args.n), seed)
    activate_at = None if args.dormant or not channel.trojan else (args.activate_at or 0)
    config = SessionConfig.from_seed(args.seed, channel,
        tables=tables,
        rounds=args.rounds,
        mask_kappa=args.mask_kappa,
        setting_policy=setting_policy,
        activate_at=activate_at,
    )
    transcript = run_session(config)
    if args.out:
        export_transcript(transcript, args.out)
    if args.taps:
        export_taps(transcript, args.taps)
    summary = transcript.summary()
    chsh    = summary['chsh'] or {}
    emit(args, summary, [
        f'backend   {backend.value}  rounds {summary["rounds"]}  seed {args.seed}',
        f'singles   A {fmt(summary["singles_rate_a"])}  B {fmt(summary["singles_rate_b"])}',
        f'pairs     {fmt(summary["pair_rate"])}',
        f'key bits  {summary["key_bits"]}  qber {fmt(summary["qber"])}',
        f'S         {fmt(chsh.get("s"))} +/- {fmt(chsh.get("std_err"))}',
    ])
    return 0

def cmd_attack(args: AttackOptions) -> int:
    """reconstruct the sifted key of a recorded session as Eve"""
    transcript = import_transcript(args.transcript)
    knowledge  = EveKnowledge.observe(transcript, load_pair(args.a, args.b))
    if args.taps:
        knowledge.pol_taps = import_taps(args.taps)
    report = score_attack(reconstruct_key(knowledge), transcript.key_a)
    emit(args, report.to_dict(), [
        f'reconstructed {len(report.reconstructed_bits)} of {len(transcript.key_a)} key bits',
        f'accuracy  {fmt(report.accuracy_vs_alice)}',
        f'coverage  {fmt(report.coverage)}',
    ])
    return 0

def cmd_detect(args: DetectOptions) -> int:
    """audit a transcript for slot-dependent outcomes"""
    tables = maybe_pair(args)
    transcript = import_transcript(args.transcript, n_slots=slot_count(args, tables))
    report = audit(transcript, tables, bins=args.bins)
    flagged = report.flags(args.alpha)
    lines = []
    for name, test in (('slot/bit', report.slot_bit_chi2), ('slot/detect', report.slot_detect_chi2)):
        if test is None:
            lines.append(f'{name:<12}insufficient data')
        else:
            lines.append(f'{name:<12}chi2 {test.statistic:.2f}  dof {test.dof}  p {test.p_value:.3g}')
    lines += [
        f'singles     A {fmt(report.singles_rate_a)}  B {fmt(report.singles_rate_b)}  shift z {fmt(report.singles_shift, 2)}',
        f'S           {fmt(report.s_value)}  limit {fmt(report.s_limit_at_eta)}',
        f'verdict     {"TROJAN SUSPECTED" if flagged else "no slot dependence"} at alpha={args.alpha}',
    ]
    emit(args, {**report.to_dict(), 'alpha': args.alpha, 'flagged': flagged}, lines)
    return 1 if flagged else 0

def cmd_serve(args: ServeOptions) -> int:
    """run one role of the networked demo"""
    if args.replay:
        if args.receiver is None:
            raise UsageError('--replay is only available to alice and bob')
        transcript = replay_receiver(args, args.replay)
        if args.out:
            export_transcript(transcript, args.out)
        emit(args, transcript.summary(), [f'replayed {len(transcript)} rounds from {args.replay}'])
        return 0
    if args.role == 'source':
        return asyncio.run(serve_source(args))
    if args.role == 'eve':
        report = asyncio.run(run_eve(args))
        emit(args, report.to_dict(), [
            f'eve reconstructed {len(report.reconstructed_bits)} bits',
            f'coverage  {fmt(report.coverage)}',
        ])
        return 0
    transcript = asyncio.run(run_receiver(args))
    emit(args, {'role': args.role, 'rounds': len(transcript)},
        [f'{args.role} finished {len(transcript)} rounds'])
    return 0

async def serve_report(host: str, port: int):
    """spawn and operate the read-only report service"""
    config = uvicorn.Config(app=webapp, host=host, port=port)
    server = uvicorn.Server(config=config)
    await server.serve()

def cmd_report(args: ReportOptions) -> int:
    """combined session report, printed or served over http"""
    tables = maybe_pair(args)
    transcript = import_transcript(args.transcript, n_slots=slot_count(args, tables))
    taps   = import_taps(args.taps) if args.taps else None
    if args.serve:
        Context.configure(transcript, tables, taps)
        asyncio.run(serve_report(args.host, args.port))
        return 0
    document = build_report(transcript, tables, taps)
    lines = [f'{name}: {json.dumps(section)}' for name, section in document.items()]
    emit(args, document, lines)
    return 0

#: subcommand name -> (options model, handler)
COMMANDS = {
    'gen-tables':    (GenTablesOptions, cmd_gen_tables),
    'verify-tables': (VerifyTablesOptions, cmd_verify_tables),
    'simulate':      (SimulateOptions, cmd_simulate),
    'attack':        (AttackOptions, cmd_attack),
    'detect':        (DetectOptions, cmd_detect),
    'serve':         (ServeOptions, cmd_serve),
    'report':        (ReportOptions, cmd_report),
}

def execute(command: str, **options) -> int:
    """
    validate the options of a subcommand and run it

    :param command: subcommand name
    :param options: flag values keyed by option name
    :return:        exit code (0 ok, 1 failure)
    :raises UsageError: unknown command, missing flag or bad flag combination
    """
    if command not in COMMANDS:
        raise UsageError(f'unknown command {command!r}')
    model, handler = COMMANDS[command]
    try:
        args = model(**options)
    except (TypeError, ValueError) as e:
        raise UsageError(str(e)) from None
    try:
        return handler(args)
    except UsageError:
        raise
    except QkdHorseError as e:
        print(f'qkdhorse {command}: {e}', file=sys.stderr)
        return 1
    except ValueError as e:
        raise UsageError(str(e)) from None
    except OSError as e:
        print(f'qkdhorse {command}: {e}', file=sys.stderr)
        return 1

def finish(ctx: cli.Context, command: str, **options):
    """run a subcommand, routing usage errors to the cli usage handler"""
    try:
        code = execute(command, **options)
    except UsageError as e:
        ctx.on_usage_error(f'{command}: {e}')
        code = 2
    if code:
        sys.exit(code)

#** Cli **#

@cli.app()
def qkdhorse(ctx: cli.Context, *, verbose: bool = False, debug: bool = False):
    """Ekert key distribution with a time-slot trojan horse"""
    level = logging.DEBUG if debug else logging.INFO if verbose else logging.WARNING
    basic_logger('qkdhorse', level, sys.stderr)

@qkdhorse.command()
def gen_tables(ctx: cli.Context, *,
    seed:      int,
    out_a:     str,
    out_b:     str,
    n:         int = 8000,
    max_iters: int = DEFAULT_MAX_ITERS,
    json:      bool = False,
):
    """generate and save a table pair meeting every count constraint"""
    finish(ctx, 'gen-tables', seed=seed, out_a=out_a, out_b=out_b,
        n=n, max_iters=max_iters, as_json=json)

@qkdhorse.command()
def verify_tables(ctx: cli.Context, *, a: str, b: str, json: bool = False):
    """recount every constraint of a saved table pair"""
    finish(ctx, 'verify-tables', a=a, b=b, as_json=json)

@qkdhorse.command()
def simulate(ctx: cli.Context, *,
    seed:           int,
    backend:        str = 'trojan',
    rounds:         int = 100_000,
    n:              int = 8000,
    slot_policy:    str = 'uniform',
    setting_policy: str = 'random',
    eta:            float = 1.0,
    noise_q:        float = 0.0,
    mask_kappa:     float = 1.0,
    activate_at:    Optional[int] = None,
    dormant:        bool = False,
    a:              Optional[str] = None,
    b:              Optional[str] = None,
    out:            Optional[str] = None,
    taps:           Optional[str] = None,
    json:           bool = False,
):
    """run one seeded session and write its transcript"""
    finish(ctx, 'simulate', seed=seed, backend=backend, rounds=rounds, n=n,
        slot_policy=slot_policy, setting_policy=setting_policy, eta=eta,
        noise_q=noise_q, mask_kappa=mask_kappa, activate_at=activate_at,
        dormant=dormant, a=a, b=b, out=out, taps=taps, as_json=json)

@qkdhorse.command()
def attack(ctx: cli.Context, *,
    transcript: str,
    a:          str,
    b:          str,
    taps:       Optional[str] = None,
    json:       bool = False,
):
    """reconstruct the sifted key of a recorded session as Eve"""
    finish(ctx, 'attack', transcript=transcript, a=a, b=b, taps=taps, as_json=json)

@qkdhorse.command()
def detect(ctx: cli.Context, *,
    transcript: str,
    a:          Optional[str] = None,
    b:          Optional[str] = None,
    n:          Optional[int] = None,
    bins:       int = 16,
    alpha:      float = 1e-6,
    json:       bool = False,
):
    """audit a transcript for slot-dependent outcomes"""
    finish(ctx, 'detect', transcript=transcript, a=a, b=b, n=n,
        bins=bins, alpha=alpha, as_json=json)

@qkdhorse.command()
def serve(ctx: cli.Context, *,
    role:        str,
    seed:        int,
    listen:      Optional[str] = None,
    connect:     Optional[str] = None,
    table:       Optional[str] = None,
    table_a:     Optional[str] = None,
    table_b:     Optional[str] = None,
    rounds:      int = 1000,
    n:           int = 8000,
    backend:     str = 'trojan',
    slot_policy: str = 'uniform',
    eta:         float = 1.0,
    noise_q:     float = 0.0,
    sync:        str = 'activate',
    session:     int = 0,
    wait_eve:    bool = False,
    skip:        int = 0,
    tap:         bool = False,
    out:         Optional[str] = None,
    record:      Optional[str] = None,
    replay:      Optional[str] = None,
    timeout:     float = 30.0,
    json:        bool = False,
):
    """run one role of the networked demo"""
    finish(ctx, 'serve', role=role, seed=seed, listen=listen, connect=connect,
        table=table, table_a=table_a, table_b=table_b, rounds=rounds, n_slots=n,
        backend=backend, slot_policy=slot_policy, eta=eta, noise_q=noise_q,
        sync=sync, session=session, wait_eve=wait_eve, skip=skip, tap=tap,
        out=out, record=record, replay=replay, timeout=timeout, as_json=json)

@qkdhorse.command()
def report(ctx: cli.Context, *,
    transcript: str,
    a:          Optional[str] = None,
    b:          Optional[str] = None,
    n:          Optional[int] = None,
    taps:       Optional[str] = None,
    serve:      bool = False,
    host:       str = '127.0.0.1',
    port:       int = 8000,
    json:       bool = False,
):
    """combined session report, printed or served over http"""
    finish(ctx, 'report', transcript=transcript, a=a, b=b, n=n, taps=taps,
        serve=serve, host=host, port=port, as_json=json)

def dispatch(argv: Optional[List[str]] = None) -> int:
    """
    run the cli app over an argument list

    :param argv: arguments without the program name (default: sys.argv)
    :return:     exit code (0 ok, 1 failure, 2 usage error)
    """
    saved = sys.argv
    if argv is not None:
        sys.argv = ['qkdhorse', *argv]
    try:
        qkdhorse.run()
    except SystemExit as e:
        if e.code is None or isinstance(e.code, int):
            return e.code or 0
        print(e.code, file=sys.stderr)
        return 1
    finally:
        sys.argv = saved
    return 0

def main():
    sys.exit(dispatch())

#** Init **#

if __name__ == '__main__':
    main()
