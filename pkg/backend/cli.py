"""
Command-line surface: argument parsing, command dispatch and report rendering

execute() turns a tokenized command line into a Report and an exit code:
0 on success, 1 when a verification fails, 2 on usage errors.
"""
import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from config.settings import DEFAULT_SEED, GROWTH_CONFIG, SCHEMA_VERSION, VERSION, VERTEX_CONFIG
from backend.engine.errors import DomainError, LabError
from backend.engine.exponents import INF, parse_rational
from backend.engine.matrices import verify_walsh, walsh
from backend.engine.multilinear import DiagonalOperator, bh_form, composition_identity_check
from backend.engine.norms import (
    alternating_ascent_norm, certificate_bounds, diagonal_norm_exact, vertex_bruteforce_norm,
)
from backend.engine.ideals import (
    bh_norm_upper, extendible_exact_endpoint, extendible_lower_diagnostic,
    extendible_upper_linfty, extendible_upper_sqrt, identification_check,
    integral_lower_duality, nuclear_integral_exact, nuclear_upper_factorization,
    phi_extendibility_certificate,
)
from backend.engine.classify import (
    SpaceTag, classify_forms, classify_operators, coincidence_tables, growth_scan,
    tables_from_classification,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

CERTIFY_KINDS = (
    'ext-upper-linf', 'ext-upper-sqrt', 'nuclear-factor', 'integral-dual', 'phi-bound',
    'ext-endpoint', 'ext-diagnostic', 'identification',
)


@dataclass
class Report:
    """Everything one command produced; JSON is byte-identical for identical inputs"""
    command: str
    params: dict = field(default_factory=dict)
    results: List[dict] = field(default_factory=list)
    seed: int = DEFAULT_SEED
    exit_code: int = EXIT_OK
    version: str = VERSION
    schema: str = SCHEMA_VERSION
    wall_time: Optional[float] = None

    def to_json(self) -> dict:
        data = {
            'schema': self.schema,
            'version': self.version,
            'command': self.command,
            'params': self.params,
            'seed': self.seed,
            'exit_code': self.exit_code,
            'results': self.results,
        }
        if self.wall_time is not None:
            data['wall_time'] = self.wall_time
        return data

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, ensure_ascii=False, indent=2)

    @classmethod
    def from_json(cls, data) -> 'Report':
        if isinstance(data, str):
            data = json.loads(data)
        return cls(
            command=data['command'],
            params=data.get('params', {}),
            results=data.get('results', []),
            seed=data.get('seed', DEFAULT_SEED),
            exit_code=data.get('exit_code', EXIT_OK),
            version=data.get('version', VERSION),
            schema=data.get('schema', SCHEMA_VERSION),
            wall_time=data.get('wall_time'),
        )


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Usage errors raise instead of exiting so execute() can map them to exit 2"""

    def __init__(self, *args, **kwargs):
        # --s must not resolve as a prefix of --seed or --save
        kwargs.setdefault('allow_abbrev', False)
        super().__init__(*args, **kwargs)

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def parse_alpha(text: str, nmax: Optional[int] = None) -> np.ndarray:
    """'3,4', '1/2,-1/4' or 'pow:s' (k^-s for k = 1..nmax)"""
    text = text.strip()
    if text.startswith('pow:'):
        if not nmax or nmax < 1:
            raise DomainError("'pow:s' coefficients need --nmax")
        s = parse_rational(text[4:])
        return np.arange(1, nmax + 1, dtype=float) ** -float(s)
    if not text:
        raise DomainError('Empty coefficient list')
    return np.array([float(parse_rational(item)) for item in text.split(',')])


def _add_pqn(parser, q=True, n=True):
    parser.add_argument('--p', required=True, help='Source exponent (e.g. 1, 3/2, inf)')
    if q:
        parser.add_argument('--q', required=True, help='Target exponent')
    if n:
        parser.add_argument('--n', type=int, required=True, help='Arity')


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog='run_lab.py',
        description='Diagonal Ideals Lab - norms, certificates and classification of diagonal multilinear operators',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python run_lab.py classify --p 1 --q inf --n 3
  python run_lab.py norm --ideal L --p 2 --q 1 --n 1 --alpha 3,4
  python run_lab.py certify --kind phi-bound --N 8 --n 3
  python run_lab.py verify --identity composition --N 4 --n 3
  python run_lab.py --format json growth --p inf --q 1 --n 1 --ideal L --s 0.9
  python run_lab.py suite --save

Environment Variables:
  LAB_SEED        - default seed for randomized checks
  LAB_LOG_LEVEL   - logging level on stderr (default: WARNING)
  DATABASE_URL    - PostgreSQL archive (SQLite at DB_PATH otherwise)
        """
    )
    parser.add_argument('--format', choices=['text', 'json'], default='text', help='Output format')
    parser.add_argument('--seed', type=int, default=DEFAULT_SEED, help=f'Seed (default: {DEFAULT_SEED})')
    parser.add_argument('--save', action='store_true', help='Archive the report')
    parser.add_argument('--timing', action='store_true', help='Include wall time in JSON output')

    sub = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)

    p = sub.add_parser('classify', help='Classify diagonal operators or forms')
    _add_pqn(p, q=False)
    p.add_argument('--q', help='Target exponent (operators)')
    p.add_argument('--forms', action='store_true', help='Classify scalar-valued forms')

    p = sub.add_parser('norm', help='Exact ideal norm of a diagonal operator')
    p.add_argument('--ideal', required=True, choices=['L', 'N', 'I'])
    _add_pqn(p)
    p.add_argument('--alpha', required=True, help="Coefficients: '3,4' or 'pow:s'")
    p.add_argument('--nmax', type=int, help='Truncation for pow:s')

    p = sub.add_parser('certify', help='Upper/lower certificates for ideal norms')
    p.add_argument('--kind', required=True, choices=CERTIFY_KINDS)
    p.add_argument('--p', default='inf')
    p.add_argument('--q', default='inf')
    p.add_argument('--n', type=int, default=3)
    p.add_argument('--alpha', help="Coefficients: '3,4' or 'pow:s'")
    p.add_argument('--nmax', type=int, help='Truncation for pow:s')
    p.add_argument('--N', type=int, default=2, help='Dimension for phi-bound')
    p.add_argument('--field', choices=['real', 'complex'], default='real')
    p.add_argument('--p-rest', help='Comma-separated exponents of slots 3..n for phi-bound')

    p = sub.add_parser('verify', help='Check an identity numerically')
    p.add_argument('--identity', required=True, choices=['walsh', 'bh-norm', 'composition'])
    p.add_argument('--N', type=int, required=True)
    p.add_argument('--n', type=int, default=3)
    p.add_argument('--field', choices=['real', 'complex'], default='real')

    p = sub.add_parser('table', help='Coincidence table rows for (p, q)')
    _add_pqn(p, n=False)
    p.add_argument('--n', type=int, default=2, help='Arity for the consistency check (default: 2)')

    p = sub.add_parser('growth', help='Growth scan of finite-section norms of k^-s')
    _add_pqn(p)
    p.add_argument('--ideal', required=True, choices=['L', 'N', 'I'])
    p.add_argument('--s', required=True)
    p.add_argument('--nmax', type=int, default=1 << GROWTH_CONFIG['max_log2'])

    sub.add_parser('suite', help='Run the full verification suite')
    return parser


def _alpha(args) -> np.ndarray:
    if not args.alpha:
        raise DomainError('This command needs --alpha')
    return parse_alpha(args.alpha, args.nmax)


def _cmd_classify(args) -> Tuple[List[dict], bool]:
    if args.forms:
        c = classify_forms(args.p, args.n)
    else:
        if args.q is None:
            raise DomainError('Operator classification needs --q (or --forms)')
        c = classify_operators(args.p, args.q, args.n)
    return [c.to_json()], True


def _cmd_norm(args) -> Tuple[List[dict], bool]:
    op = DiagonalOperator(_alpha(args), args.n, args.p, args.q)
    if args.ideal == 'L':
        cert = diagonal_norm_exact(op)
        return [dict(cert.to_json(), type='certificate', ideal='L')], True
    norms = nuclear_integral_exact(op)
    chosen = norms.nuclear if args.ideal == 'N' else norms.integral
    return [dict(chosen.to_json(), type='certificate', ideal=args.ideal, t=str(norms.t),
                 note=norms.note)], True


def _cmd_certify(args) -> Tuple[List[dict], bool]:
    kind = args.kind
    if kind == 'phi-bound':
        p_rest = None if not args.p_rest else args.p_rest.split(',')
        cert = phi_extendibility_certificate(args.N, args.n, p_rest, args.field, seed=args.seed)
        ok = cert.value <= 1 + 1e-12
        sandwich = cert.witness.get('bh_sandwich')
        if sandwich is not None:
            ok = ok and sandwich['consistent']
        return [dict(cert.to_json(), type='certificate', certify=kind)], ok
    if kind == 'ext-upper-sqrt':
        fc = extendible_upper_sqrt(_alpha(args), args.p, args.n)
        return [dict(fc.to_json(), type='factorization', certify=kind, verified=fc.verify())], fc.verify()

    op = DiagonalOperator(_alpha(args), args.n, args.p, args.q)
    if kind == 'nuclear-factor':
        fc = nuclear_upper_factorization(op)
        return [dict(fc.to_json(), type='factorization', certify=kind, verified=fc.verify())], fc.verify()
    if kind == 'identification':
        report = identification_check(op)
        return [report.to_json()], report.passed
    if kind == 'ext-diagnostic':
        return [extendible_lower_diagnostic(op).to_json()], True
    cert = {
        'ext-upper-linf': extendible_upper_linfty,
        'integral-dual': integral_lower_duality,
        'ext-endpoint': extendible_exact_endpoint,
    }[kind](op)
    return [dict(cert.to_json(), type='certificate', certify=kind)], True


def _bh_norm_check(N: int, n: int, field: str, seed: int) -> dict:
    A = walsh(N, field)
    L = bh_form(A, n)
    target = float(N * N)
    if field == 'real' and n * N <= VERTEX_CONFIG['max_nN']:
        cert = vertex_bruteforce_norm(L)
        residual = abs(cert.value - target)
        return {'type': 'bh-norm', 'passed': residual == 0, 'N': N, 'n': n, 'field': field,
                'value': cert.value, 'residual': residual, 'certificates': [cert.to_json()]}
    lower = alternating_ascent_norm(L, [INF] * n, seed=seed)
    upper = bh_norm_upper(N, n, field)
    sandwich = certificate_bounds([lower, upper])
    residual = max(target - lower.value, 0.0) / target
    return {'type': 'bh-norm', 'passed': sandwich.consistent and residual <= 1e-6,
            'N': N, 'n': n, 'field': field, 'value': lower.value, 'residual': residual,
            'sandwich': sandwich.to_json(), 'certificates': [lower.to_json(), upper.to_json()]}


def _cmd_verify(args) -> Tuple[List[dict], bool]:
    if args.identity == 'walsh':
        report = verify_walsh(walsh(args.N, args.field))
        return [report.to_json()], report.passed
    if args.identity == 'composition':
        report = composition_identity_check(walsh(args.N, args.field), args.n, seed=args.seed)
        return [report.to_json()], report.passed
    result = _bh_norm_check(args.N, args.n, args.field, args.seed)
    return [result], result['passed']


def _cmd_table(args) -> Tuple[List[dict], bool]:
    rows = coincidence_tables(args.p, args.q)
    derived = tables_from_classification(classify_operators(args.p, args.q, args.n))
    consistent = rows == derived
    return [dict(rows.to_json(), derived=derived.to_json(), consistent=consistent)], consistent


def _dyadic_grid(nmax: int) -> List[int]:
    lo = 1 << GROWTH_CONFIG['min_log2']
    grid = []
    while lo <= nmax:
        grid.append(lo)
        lo *= 2
    return grid


def _cmd_growth(args) -> Tuple[List[dict], bool]:
    report = growth_scan(args.p, args.q, args.n, args.ideal, args.s, _dyadic_grid(args.nmax))
    return [report.to_json()], True


def _cmd_suite(args) -> Tuple[List[dict], bool]:
    from backend.pipeline.processor import run_verification_suite
    results = run_verification_suite(seed=args.seed, save=args.save)
    rows = [{'type': 'check', 'check': name, **{k: v for k, v in item.items() if k != 'seconds'}}
            for name, item in results.items()]
    return rows, all(item['passed'] for item in results.values())


COMMANDS = {
    'classify': _cmd_classify,
    'norm': _cmd_norm,
    'certify': _cmd_certify,
    'verify': _cmd_verify,
    'table': _cmd_table,
    'growth': _cmd_growth,
    'suite': _cmd_suite,
}

_GLOBAL_OPTIONS = ('format', 'seed', 'save', 'timing', 'command')


def execute(argv: List[str]) -> Tuple[Optional[Report], int]:
    """Run one command line; usage and engine errors give (None, 2)"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        logger.error('%s', e)
        return None, EXIT_USAGE
    except SystemExit as e:
        # --help exits 0 through argparse
        return None, EXIT_OK if not e.code else EXIT_USAGE

    params = {k: v for k, v in sorted(vars(args).items()) if k not in _GLOBAL_OPTIONS}
    start = time.perf_counter()
    try:
        results, ok = COMMANDS[args.command](args)
    except LabError as e:
        logger.error('%s: %s', type(e).__name__, e)
        return None, EXIT_USAGE

    report = Report(
        command=args.command,
        params=params,
        results=results,
        seed=args.seed,
        exit_code=EXIT_OK if ok else EXIT_FAILED,
        wall_time=time.perf_counter() - start if args.timing else None,
    )
    if args.save and args.command != 'suite':
        from backend.database import init_db, insert_report
        init_db()
        report_id = insert_report(report)
        logger.info('Archived report %d', report_id)
    return report, report.exit_code


def output_format(argv: List[str]) -> str:
    """Value of the global --format option, scanned before dispatch"""
    for i, token in enumerate(argv):
        if token == '--format' and i + 1 < len(argv):
            return argv[i + 1]
        if token.startswith('--format='):
            return token.split('=', 1)[1]
    return 'text'


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True, ensure_ascii=False)
    return str(value)


def _render_result(item: dict) -> List[str]:
    kind = item.get('type')
    if kind == 'classification':
        header = f"{item['kind']} p={item['p']}" + (f" q={item['q']}" if item['q'] else '') + f" n={item['n']}"
        lines = [header, f"  regime: {item['regime']}", f"  {item['chain']}"]
        lines += [f"  {entry['ideal']}: {_tag_text(entry['space'])}" for entry in item['ideals']]
        return lines
    if kind == 'tables':
        return [f"Table 1: {item['table1']}", f"Table 2: {item['table2']}"]
    if kind == 'certificate':
        return [f"{item['value']!r} ({item['kind']}, {item['method']})"]
    if kind == 'check':
        status = 'PASS' if item['passed'] else 'FAIL'
        return [f"[{status}] {item['check']}: {item.get('detail', '')}"]
    if 'passed' in item:
        status = 'PASS' if item['passed'] else 'FAIL'
        return [f"[{status}] {kind} residual={item.get('residual')!r}"]
    return [f"{key}: {_format_value(value)}" for key, value in sorted(item.items())]


def _tag_text(space: dict) -> str:
    return str(SpaceTag.from_json(space))


def render_table(report: Report, fmt: str = 'text') -> str:
    """JSON or a plain-text table of the report"""
    if fmt == 'json':
        return report.dumps()
    lines = [f"{report.command} (seed {report.seed}, exit {report.exit_code})"]
    for key, value in sorted(report.params.items()):
        if value is not None and value is not False:
            lines.append(f"  --{key} {value}")
    lines.append('=' * 60)
    for item in report.results:
        lines.extend(_render_result(item))
    return '\n'.join(lines)
