"""
Seeded sweeps over the proof checks and the bound-domination property.

Every sweep builds its own generator from (seed, sweep index), so sweeps can
run on any number of workers and still report the same instances.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from .bounds import ceiling_bound, trace_bound
from .datasets import random_dictionary
from .domain import HypothesisFamily, InequalityResult
from .logger import logger
from .options import EstimateMethod, Family
from .proof_checks import (
    BlockVector,
    check_first_factor,
    check_gram_cauchy_schwarz,
    check_holder_block,
    check_moment_bound,
    check_multinomial_chain,
    check_multinomial_footnote,
    check_multinomial_trace_identity,
    check_second_factor,
    check_sphere_exponent,
    check_trace_ceiling,
    check_vanishing_odd_moments,
    compositions,
    random_weights,
)
from .rademacher import brute_force_sup, estimate_many, sup_closed_form

log = logger.create("kernbound", __file__)

FIRST_FACTOR_Q = (4.0 / 3.0, 1.5, 2.0, 4.0)
MAX_REPORTED_FAILURES = 5


class CheckSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    instances: int
    failed: int
    min_slack: float
    failures: List[InequalityResult]

    @property
    def passed(self) -> bool:
        return self.failed == 0


class VerifyReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    seed: int
    all_passed: bool
    checks: List[CheckSummary]


def summarize(name: str, results: Sequence[InequalityResult]) -> CheckSummary:
    failures = [r for r in results if not r.holds]
    return CheckSummary(
        name=name,
        instances=len(results),
        failed=len(failures),
        min_slack=min((r.slack for r in results), default=0.0),
        failures=failures[:MAX_REPORTED_FAILURES],
    )


def _size(rng: np.random.Generator, low: int, high: int) -> int:
    return int(rng.integers(low, high + 1))


def sweep_holder_block(rng: np.random.Generator, instances: int = 200) -> List[InequalityResult]:
    results = []
    for _ in range(instances):
        m, p = _size(rng, 1, 8), _size(rng, 1, 5)
        dictionary = random_dictionary(rng, m, p)
        tag = Family.L1 if rng.random() < 0.5 else Family.L2
        mu = random_weights(rng, p, tag).as_array()
        w = BlockVector.from_weights(dictionary, mu, rng.standard_normal(m))
        results.append(check_holder_block(w, int(rng.integers(0, m)), float(rng.uniform(1.1, 10.0))))
    return results


def sweep_first_factor(rng: np.random.Generator, instances: int = 200) -> List[InequalityResult]:
    results = []
    for tag in (Family.L1, Family.L2):
        for _ in range(instances):
            m, p = _size(rng, 1, 8), _size(rng, 1, 5)
            dictionary = random_dictionary(rng, m, p)
            mu = random_weights(rng, p, tag, sparsity=0.3 if rng.random() < 0.3 else None)
            alpha = rng.standard_normal(m)
            results.extend(check_first_factor(mu, alpha, dictionary, q) for q in FIRST_FACTOR_Q)
    return results


def sweep_sphere_exponent(rng: np.random.Generator, instances: int = 100) -> List[InequalityResult]:
    results = []
    for _ in range(instances):
        mu = random_weights(rng, _size(rng, 1, 8), Family.L2)
        results.extend(check_sphere_exponent(mu, q) for q in FIRST_FACTOR_Q)
    return results


def sweep_moment_bound(rng: np.random.Generator, matrices: int = 50) -> List[InequalityResult]:
    results = []
    for _ in range(matrices):
        gram = random_dictionary(rng, _size(rng, 1, 10), 1).grams[0]
        results.extend(check_moment_bound(gram, r, mode="exact") for r in (2, 4, 6))
    return results


def sweep_second_factor(rng: np.random.Generator, instances: int = 30) -> List[InequalityResult]:
    results = []
    for _ in range(instances):
        dictionary = random_dictionary(rng, _size(rng, 1, 8), _size(rng, 1, 6))
        results.extend(check_second_factor(dictionary, r) for r in (2, 4, 6))
    return results


def sweep_gram_checks(rng: np.random.Generator, instances: int = 30) -> List[InequalityResult]:
    results = []
    for _ in range(instances):
        dictionary = random_dictionary(rng, _size(rng, 1, 6), _size(rng, 1, 4))
        results.extend(check_gram_cauchy_schwarz(g) for g in dictionary.grams)
        results.extend(check_trace_ceiling(dictionary))
        results.extend(check_multinomial_trace_identity(dictionary.grams[0], r) for r in (1, 2, 3))
    return results


def sweep_multinomial(max_r_prime: int = 6, max_parts: int = 6) -> List[InequalityResult]:
    results = []
    for r_prime in range(1, max_r_prime + 1):
        for parts in range(1, max_parts + 1):
            for t in compositions(r_prime, parts):
                results.append(check_multinomial_footnote(r_prime, t))
                results.extend(check_multinomial_chain(r_prime, t))
    return results


def sweep_odd_moments(max_total: int = 6, max_m: int = 5) -> List[InequalityResult]:
    results = []
    for m in range(1, max_m + 1):
        for total in range(0, max_total + 1):
            results.extend(check_vanishing_odd_moments(m, s) for s in compositions(total, m))
    return results


def sweep_oracle(rng: np.random.Generator, instances: int = 30, grid_step: float = 0.05) -> List[InequalityResult]:
    results = []
    for _ in range(instances):
        dictionary = random_dictionary(rng, _size(rng, 1, 6), _size(rng, 1, 3))
        sigma = rng.choice((-1.0, 1.0), size=dictionary.m)
        for tag in Family:
            family = HypothesisFamily(tag=tag, rho=1.0)
            closed = sup_closed_form(dictionary, sigma, family)
            oracle = brute_force_sup(dictionary, sigma, family, grid_step)
            results.append(InequalityResult.at_most(
                "oracle_grid", oracle.grid_max, closed, detail={"family": tag.value, "grid_points": oracle.grid_points},
            ))
    return results


def sweep_domination(rng: np.random.Generator, instances: int = 50, rho: float = 1.0) -> List[InequalityResult]:
    """Exact Rademacher complexity against the trace and ceiling bounds."""
    results = []
    for _ in range(instances):
        m, p = _size(rng, 2, 12), _size(rng, 1, 16)
        dictionary = random_dictionary(rng, m, p)
        l1, l2 = estimate_many(
            dictionary,
            [HypothesisFamily(tag=Family.L1, rho=rho), HypothesisFamily(tag=Family.L2, rho=rho)],
            EstimateMethod.EXACT,
        )
        detail = {"m": m, "p": p}
        for r in (2, 4, 6, 8):
            results.append(InequalityResult.at_most(
                "domination_trace", l1.value, trace_bound(dictionary.traces, m, rho, r, Family.L1),
                detail={**detail, "family": "L1", "r": r},
            ))
        for r in (2, 4):
            results.append(InequalityResult.at_most(
                "domination_trace", l2.value, trace_bound(dictionary.traces, m, rho, r, Family.L2),
                detail={**detail, "family": "L2", "r": r},
            ))
        if p >= 2:
            results.append(InequalityResult.at_most(
                "domination_ceiling", l1.value, ceiling_bound(p, dictionary.kernel_ceiling_r2, rho, m, Family.L1),
                detail={**detail, "family": "L1"},
            ))
        results.append(InequalityResult.at_most(
            "domination_ceiling", l2.value, ceiling_bound(p, dictionary.kernel_ceiling_r2, rho, m, Family.L2),
            detail={**detail, "family": "L2"},
        ))
    return results


SWEEPS: Tuple[Tuple[str, Callable[[np.random.Generator], List[InequalityResult]]], ...] = (
    ("holder_block", sweep_holder_block),
    ("first_factor", sweep_first_factor),
    ("sphere_exponent", sweep_sphere_exponent),
    ("moment_bound", sweep_moment_bound),
    ("second_factor", sweep_second_factor),
    ("gram_identities", sweep_gram_checks),
    ("multinomial", lambda rng: sweep_multinomial()),
    ("vanishing_odd_moments", lambda rng: sweep_odd_moments()),
    ("closed_form_oracle", sweep_oracle),
    ("bound_domination", sweep_domination),
)


def run_verification(seed: int = 0, threads: int = 0, only: Optional[Sequence[str]] = None) -> VerifyReport:
    selected = [(index, name, sweep) for index, (name, sweep) in enumerate(SWEEPS) if only is None or name in only]
    log.info("Running verification sweeps", {"seed": seed, "sweeps": [name for _, name, _ in selected]})

    def run(entry: Tuple[int, str, Callable]) -> CheckSummary:
        index, name, sweep = entry
        summary = summarize(name, sweep(np.random.default_rng([seed, index])))
        level = log.info if summary.passed else log.error
        level("Sweep finished", {"sweep": name, "instances": summary.instances, "failed": summary.failed})
        return summary

    with ThreadPoolExecutor(max_workers=None if threads == 0 else threads) as pool:
        checks = list(pool.map(run, selected))
    return VerifyReport(seed=seed, all_passed=all(c.passed for c in checks), checks=checks)
