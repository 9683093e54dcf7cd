"""
Verification Pipeline
Runs the acceptance checks of the lab as named phases and collects
{check: {passed, detail, seconds}}
"""
import logging
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent.parent))
from config.settings import DEFAULT_SEED, SUITE_CONFIG, WALSH_CONFIG
from backend.engine.exponents import INF, ONE, Exponent, conjugate, holder_r, nuclear_t
from backend.engine.matrices import fourier, hadamard, verify_walsh, walsh, xi_matrix, xi_norm_bound
from backend.engine.multilinear import DenseForm, DiagonalOperator, bh_form, composition_identity_check
from backend.engine.norms import (
    alternating_ascent_norm, diagonal_norm_exact, linear_norm_to_linf, vertex_bruteforce_norm,
)
from backend.engine.ideals import (
    extendible_upper_linfty, integral_lower_duality, nuclear_integral_exact,
    nuclear_upper_factorization, phi_extendibility_certificate,
)
from backend.engine.classify import (
    Ideal, SpaceTag, classify_forms, classify_operators, coincidence_tables, growth_scan,
    power_membership, tables_from_classification,
)

logger = logging.getLogger(__name__)

CheckResult = Tuple[bool, str]


def _rel(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale


def _grid() -> List[Exponent]:
    return [Exponent.parse(p) for p in SUITE_CONFIG['exponent_grid']]


def check_walsh_axioms(seed: int) -> CheckResult:
    """Hadamard matrices exactly, Fourier matrices within 1e-10 N"""
    worst_fourier = 0.0
    top = WALSH_CONFIG['max_exact_power']
    for m in range(1, top + 1):
        report = verify_walsh(hadamard(2 ** m))
        if not report.passed or report.max_residual != 0:
            return False, f"hadamard({2 ** m}) residual {report.max_residual}"
    for N in range(1, 17):
        report = verify_walsh(fourier(N))
        if not report.passed:
            return False, f"fourier({N}) residual {report.max_residual}"
        worst_fourier = max(worst_fourier, report.max_residual / N)
    return True, f"hadamard exact for N=2..{2 ** top}; fourier max residual/N {worst_fourier:.3g}"


def check_bh_norm(seed: int) -> CheckResult:
    """||L_N|| = N^2 on l_inf by enumeration, and by ascent at N = 8"""
    for N, n in [(2, 3), (2, 4), (4, 3)]:
        cert = vertex_bruteforce_norm(bh_form(hadamard(N), n))
        if cert.value != N * N:
            return False, f"||L_{N}|| for n={n} enumerated as {cert.value}"
    cert = alternating_ascent_norm(bh_form(hadamard(8), 3), [INF] * 3, seed=seed)
    if cert.value < 64 * (1 - 1e-6):
        return False, f"ascent reached {cert.value} < 64 for N=8"
    return True, f"exact for (2,3), (2,4), (4,3); ascent {cert.value!r} at N=8"


def check_composition(seed: int) -> CheckResult:
    """L_N(xi x_1, xi x_2, x_3, ...) = N^2 sum x_1 ... x_n"""
    worst = 0.0
    for field in ('real', 'complex'):
        for N in SUITE_CONFIG['composition_dimensions']:
            for n in SUITE_CONFIG['composition_arities']:
                report = composition_identity_check(walsh(N, field), n, seed=seed)
                worst = max(worst, report.max_relative_residual)
                if not report.passed:
                    return False, f"{field} N={N} n={n} residual {report.max_relative_residual:.3g}"
    return True, f"max relative residual {worst:.3g}"


def _random_operator(rng: np.random.Generator, grid: List[Exponent]) -> DiagonalOperator:
    n = int(rng.integers(1, 4))
    N = int(rng.integers(2, 6))
    p = grid[int(rng.integers(len(grid)))]
    q = grid[int(rng.integers(len(grid)))]
    return DiagonalOperator(rng.standard_normal(N), n, p, q)


def check_holder_oracle(seed: int) -> CheckResult:
    """Closed-form operator norms against ascent, and against enumeration for p = inf"""
    rng = np.random.default_rng(seed)
    grid = _grid()
    worst_gap = 0.0
    for i in range(SUITE_CONFIG['holder_instances']):
        op = _random_operator(rng, grid)
        exact = diagonal_norm_exact(op).value
        dense = op.to_dense('operator')
        lower = alternating_ascent_norm(dense, [op.p] * op.n, q_target=op.q, seed=seed + i)
        gap = (exact - lower.value) / exact if exact else 0.0
        worst_gap = max(worst_gap, gap)
        if gap > 1e-6 or lower.value > exact * (1 + 1e-9):
            return False, f"instance {i}: exact {exact!r}, ascent {lower.value!r}"
        if op.p.is_infinite:
            vertex = vertex_bruteforce_norm(dense, q_target=op.q).value
            if _rel(vertex, exact) > 1e-12:
                return False, f"instance {i}: exact {exact!r}, enumeration {vertex!r}"
    return True, f"max relative ascent gap {worst_gap:.3g}"


def check_duality_closure(seed: int) -> CheckResult:
    """Duality lower bound, exact value and factorization bound coincide for p > 1"""
    rng = np.random.default_rng(seed)
    grid = [p for p in _grid() if p > ONE]
    full = _grid()
    worst = 0.0
    for i in range(SUITE_CONFIG['duality_instances']):
        N = int(rng.integers(1, 9))
        op = DiagonalOperator(rng.standard_normal(N), int(rng.integers(1, 4)),
                              grid[int(rng.integers(len(grid)))], full[int(rng.integers(len(full)))])
        exact = nuclear_integral_exact(op).integral.value
        dual = integral_lower_duality(op).value
        worst = max(worst, _rel(exact, dual))
        if nuclear_t(op.p, op.q, op.n) > ONE:
            worst = max(worst, _rel(exact, nuclear_upper_factorization(op).bound))
        if worst > 1e-12:
            return False, f"instance {i}: relative gap {worst:.3g}"
    return True, f"max relative gap {worst:.3g}"


def check_xi_bound(seed: int) -> CheckResult:
    """Ascent never beats N^{1/p'} for xi_N : l_p -> l_inf; p = 1 attains 1"""
    for N in SUITE_CONFIG['xi_dimensions']:
        xi = xi_matrix(hadamard(N))
        form = DenseForm.from_linear_map(xi)
        for p in _grid():
            lower = alternating_ascent_norm(form, [p], q_target=INF, seed=seed).value
            if lower > xi_norm_bound(p, N) + 1e-9:
                return False, f"N={N} p={p}: ascent {lower!r} above bound"
        if linear_norm_to_linf(xi, ONE).value != 1.0:
            return False, f"N={N}: ||xi_N : l_1 -> l_inf|| is not 1"
    return True, "bound holds; p = 1 attains 1"


def check_phi_certificate(seed: int) -> CheckResult:
    """Phi_N extendibility bound equals 1 with a verified ||L_N|| leg"""
    slot_sets = [['inf'], ['1'], ['3/2']]
    for N in SUITE_CONFIG['xi_dimensions']:
        for n in (3, 4):
            for slots in slot_sets:
                cert = phi_extendibility_certificate(N, n, slots * (n - 2), seed=seed)
                if cert.value != 1.0:
                    return False, f"N={N} n={n} slots {slots}: bound {cert.value!r}"
                sandwich = cert.witness.get('bh_sandwich')
                if sandwich is not None and (not sandwich['consistent']
                                             or sandwich['lower'] < N * N * (1 - 1e-6)):
                    return False, f"N={N} n={n}: ||L_N|| leg not verified"
    return True, "bound 1 for N in {2, 4, 8}, n in {3, 4}"


GOLDEN_OPERATORS = [
    (('1', 'inf', 3), ['c0', 'linf', 'linf', 'linf']),
    (('3', '2', 2), ['1', '1', '2', 'linf']),
    (('3/2', '1', 4), ['1', '1', '3/2', 'linf']),
]

GOLDEN_FORMS = [
    (('1', 5), ['c0', 'linf', 'linf', 'linf']),
    (('3/2', 3), ['1', '1', '3/2', 'linf']),
    (('4', 3), ['1', '1', '1', '4']),
]


def _tag(text: str) -> SpaceTag:
    if text == 'c0':
        return SpaceTag.c0()
    if text == 'linf':
        return SpaceTag.linf()
    return SpaceTag.lu(text)


def check_classification(seed: int) -> CheckResult:
    """Golden cells, nesting and table consistency on the exponent grid"""
    ideals = (Ideal.N, Ideal.I, Ideal.E, Ideal.L)
    for (p, q, n), expected in GOLDEN_OPERATORS:
        c = classify_operators(p, q, n)
        if [c.spaces[i] for i in ideals] != [_tag(e) for e in expected]:
            return False, f"operators ({p}, {q}, {n}) gave {[str(c.spaces[i]) for i in ideals]}"
    for (p, n), expected in GOLDEN_FORMS:
        c = classify_forms(p, n)
        if [c.spaces[i] for i in ideals] != [_tag(e) for e in expected]:
            return False, f"forms ({p}, {n}) gave {[str(c.spaces[i]) for i in ideals]}"

    grid = ['1', '5/4', '3/2', '2', '3', 'inf']
    cells = 0
    for p in grid:
        for q in grid:
            for n in (2, 3):
                c = classify_operators(p, q, n)
                if not c.is_nested():
                    return False, f"({p}, {q}, {n}) not nested"
                if tables_from_classification(c) != coincidence_tables(p, q):
                    return False, f"({p}, {q}, {n}) tables disagree"
                cells += 1
        for n in (2, 3, 4):
            if not classify_forms(p, n).is_nested():
                return False, f"forms ({p}, {n}) not nested"
    return True, f"golden cells match; {cells} operator cells nested and table-consistent"


def _critical(p: Exponent, q: Exponent, n: int, ideal: Ideal) -> Fraction:
    u = holder_r(p, q, n).space_exponent if ideal is Ideal.L else nuclear_t(p, q, n)
    return u.reciprocal


def check_growth(seed: int) -> CheckResult:
    """Growth verdicts agree with power-sequence membership"""
    rng = np.random.default_rng(seed)
    grid = _grid()
    agreed = 0
    while agreed < SUITE_CONFIG['growth_samples']:
        p = grid[int(rng.integers(len(grid)))]
        q = grid[int(rng.integers(len(grid)))]
        n = int(rng.integers(1, 4))
        ideal = (Ideal.N, Ideal.L)[int(rng.integers(2))]
        s = Fraction(int(rng.integers(5, 251)), 100)
        if abs(s - _critical(p, q, n, ideal)) < Fraction(1, 20):
            continue
        report = growth_scan(p, q, n, ideal, s)
        if report.agrees is False:
            return False, (f"{ideal.value} p={p} q={q} n={n} s={s}: slope {report.slope:.4f}, "
                           f"membership {report.membership}")
        agreed += 1
    return True, f"{agreed} scans agree with membership"


def check_chain_ordering(seed: int) -> CheckResult:
    """||alpha||_t >= ||alpha||_q >= ||alpha||_r along N, E, L"""
    rng = np.random.default_rng(seed)
    for i in range(SUITE_CONFIG['chain_instances']):
        op = _random_operator(rng, _grid())
        nuclear = nuclear_integral_exact(op).integral.value
        extendible = extendible_upper_linfty(op).value
        bounded = diagonal_norm_exact(op).value
        if nuclear < extendible * (1 - 1e-12) or extendible < bounded * (1 - 1e-12):
            return False, f"instance {i}: {nuclear!r}, {extendible!r}, {bounded!r}"
    return True, f"{SUITE_CONFIG['chain_instances']} instances ordered"


CHECKS: Dict[str, Callable[[int], CheckResult]] = {
    'walsh_axioms': check_walsh_axioms,
    'bh_norm': check_bh_norm,
    'composition_identity': check_composition,
    'holder_oracle': check_holder_oracle,
    'duality_closure': check_duality_closure,
    'xi_bound': check_xi_bound,
    'phi_certificate': check_phi_certificate,
    'classification': check_classification,
    'growth_membership': check_growth,
    'chain_ordering': check_chain_ordering,
}


def run_verification_suite(seed: int = DEFAULT_SEED, save: bool = False,
                           checks: Optional[List[str]] = None) -> Dict[str, Dict]:
    """Run the named checks (all by default) and optionally archive the run"""
    names = list(CHECKS) if checks is None else checks
    results = {}

    for step, name in enumerate(names, start=1):
        logger.info("=" * 60)
        logger.info("CHECK %d: %s", step, name)
        logger.info("=" * 60)
        start = time.perf_counter()
        passed, detail = CHECKS[name](seed)
        seconds = time.perf_counter() - start
        results[name] = {'passed': passed, 'detail': detail, 'seconds': seconds}
        logger.info("%s %s in %.2fs: %s", name, 'passed' if passed else 'FAILED', seconds, detail)

    failed = [name for name, item in results.items() if not item['passed']]
    logger.info("Suite complete: %d/%d passed", len(results) - len(failed), len(results))

    if save:
        from backend.database import init_db, record_suite_run
        init_db()
        run_id = record_suite_run(results, seed)
        logger.info("Archived suite run %d", run_id)

    return results


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO)
    run_verification_suite()
