"""
Empirical Rademacher complexity of kernel-combination hypothesis sets.

The supremum over the alpha-ball {alpha^T K_mu alpha <= 1/rho^2} of
sigma^T K_mu alpha is sqrt(sigma^T K_mu sigma)/rho. With u_k = sigma^T K_k sigma
the remaining supremum over mu is linear in u:

    L1 (simplex):             sqrt(max_k u_k) / rho
    L2 (nonnegative sphere):  ||u||_2^{1/2} / rho
    L2Signed (sphere):        same as L2, since u >= 0

Estimates divide the supremum by m and average over sign vectors, either by
Monte Carlo or by exhaustive enumeration.
"""

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence

import numpy as np

from .domain import HypothesisFamily, OracleResult, RademacherEstimate
from .errors import CapacityError, InputError, ParameterError
from .kernels import KernelDictionary, quadratic_forms
from .logger import logger
from .options import DEFAULT_EXACT_CAP, HARD_EXACT_CAP, TRIAL_BLOCK, EstimateMethod, Family
from .signs import check_seed, enumerate_signs, mc_signs

log = logger.create("kernbound", __file__)

ORACLE_MAX_P = 3
ORACLE_MAX_M = 6
DEGENERATE_THRESHOLD = 1e-300


def _check_sigma(sigma: np.ndarray, m: int) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.shape != (m,):
        raise InputError(f"Sign vector of length {sigma.size} does not match m={m}", {"length": sigma.size, "m": m})
    if not np.all(np.abs(sigma) == 1.0):
        raise InputError("Sign vector entries must be exactly -1 or +1")
    return sigma


def sups_from_forms(forms: np.ndarray, family: HypothesisFamily) -> np.ndarray:
    """Closed-form suprema for each row of quadratic forms u (shape (T, p))."""
    forms = np.atleast_2d(forms)
    if family.tag is Family.L1:
        return np.sqrt(np.max(forms, axis=1)) / family.rho
    return np.sqrt(np.linalg.norm(forms, axis=1)) / family.rho


def sup_closed_form(dictionary: KernelDictionary, sigma: np.ndarray, family: HypothesisFamily) -> float:
    sigma = _check_sigma(sigma, dictionary.m)
    forms = quadratic_forms(dictionary, sigma[None, :])
    return float(sups_from_forms(forms, family)[0])


def _mc_block(dictionary: KernelDictionary, families: Sequence[HypothesisFamily], seed: int, start: int, count: int) -> np.ndarray:
    signs = mc_signs(seed, dictionary.m, start, count)
    forms = quadratic_forms(dictionary, signs)
    return np.stack([sups_from_forms(forms, family) for family in families])


def _workers(threads: int) -> Optional[int]:
    if threads < 0:
        raise ParameterError("threads must be >= 0 (0 = auto)", {"threads": threads})
    return None if threads == 0 else threads


def _estimate_mc(
    dictionary: KernelDictionary,
    families: Sequence[HypothesisFamily],
    n_trials: int,
    seed: int,
    threads: int,
) -> List[RademacherEstimate]:
    if isinstance(n_trials, bool) or int(n_trials) != n_trials or n_trials < 1:
        raise ParameterError(f"n_trials must be a positive integer, got {n_trials}", {"n_trials": n_trials})
    seed = check_seed(seed)
    starts = range(0, n_trials, TRIAL_BLOCK)
    with ThreadPoolExecutor(max_workers=_workers(threads)) as pool:
        blocks = list(pool.map(
            lambda start: _mc_block(dictionary, families, seed, start, min(TRIAL_BLOCK, n_trials - start)),
            starts,
        ))
    sups = np.concatenate(blocks, axis=1)

    m = dictionary.m
    estimates = []
    for row, family in zip(sups, families):
        value = float(np.mean(row)) / m
        stderr = float(np.std(row, ddof=1)) / math.sqrt(n_trials) / m if n_trials > 1 else 0.0
        estimates.append(RademacherEstimate(
            value=value,
            stderr=stderr,
            trials=n_trials,
            method=EstimateMethod.MONTE_CARLO,
            seed=seed,
            family=family.tag,
            rho=family.rho,
            m=m,
            p=dictionary.p,
        ))
    return estimates


def resolve_exact_cap(exact_cap: int) -> int:
    if exact_cap < 1 or exact_cap > HARD_EXACT_CAP:
        raise ParameterError(
            f"exact_cap must be between 1 and {HARD_EXACT_CAP}, got {exact_cap}",
            {"exact_cap": exact_cap, "hard_cap": HARD_EXACT_CAP},
        )
    return exact_cap


def _estimate_exact(
    dictionary: KernelDictionary,
    families: Sequence[HypothesisFamily],
    exact_cap: int,
) -> List[RademacherEstimate]:
    cap = resolve_exact_cap(exact_cap)
    m = dictionary.m
    if m > cap:
        raise CapacityError(f"Exact enumeration needs m <= {cap}, got m={m}", cap, {"m": m})

    # sup(sigma) == sup(-sigma): enumerate sigma_0 = +1 only
    totals: List[List[float]] = [[] for _ in families]
    for signs in enumerate_signs(m, half=True):
        forms = quadratic_forms(dictionary, signs)
        for index, family in enumerate(families):
            totals[index].append(float(np.sum(sups_from_forms(forms, family))))

    half = 2 ** (m - 1)
    return [
        RademacherEstimate(
            value=math.fsum(parts) / half / m,
            stderr=0.0,
            trials=2 ** m,
            method=EstimateMethod.EXACT,
            family=family.tag,
            rho=family.rho,
            m=m,
            p=dictionary.p,
        )
        for parts, family in zip(totals, families)
    ]


def estimate_many(
    dictionary: KernelDictionary,
    families: Sequence[HypothesisFamily],
    method: EstimateMethod = EstimateMethod.MONTE_CARLO,
    n_trials: int = 20000,
    seed: int = 0,
    threads: int = 0,
    exact_cap: int = DEFAULT_EXACT_CAP,
) -> List[RademacherEstimate]:
    """One estimate per family, sharing the quadratic forms sigma^T K_k sigma."""
    if not families:
        raise ParameterError("At least one hypothesis family is required")
    log.debug("estimate", {
        "method": method.value,
        "families": [f.tag.value for f in families],
        "m": dictionary.m,
        "p": dictionary.p,
        "trials": n_trials if method is EstimateMethod.MONTE_CARLO else 2 ** dictionary.m,
    })
    if method is EstimateMethod.EXACT:
        estimates = _estimate_exact(dictionary, families, exact_cap)
    else:
        estimates = _estimate_mc(dictionary, families, n_trials, seed, threads)
    for estimate in estimates:
        log.info("Rademacher estimate", estimate.model_dump(mode="json"))
    return estimates


def estimate_mc(
    dictionary: KernelDictionary,
    family: HypothesisFamily,
    n_trials: int,
    seed: int,
    threads: int = 0,
) -> RademacherEstimate:
    return estimate_many(dictionary, [family], EstimateMethod.MONTE_CARLO, n_trials=n_trials, seed=seed, threads=threads)[0]


def estimate_exact(
    dictionary: KernelDictionary,
    family: HypothesisFamily,
    exact_cap: int = DEFAULT_EXACT_CAP,
) -> RademacherEstimate:
    return estimate_many(dictionary, [family], EstimateMethod.EXACT, exact_cap=exact_cap)[0]


def weight_grid(p: int, grid_step: float, tag: Family) -> np.ndarray:
    """
    Feasible weights on a grid of resolution ``grid_step``.

    L1 uses the simplex compositions c/n with n = round(1/grid_step); L2
    normalises the same compositions onto the sphere and L2Signed adds every
    sign pattern of their nonzero entries.
    """
    n = max(1, int(round(1.0 / grid_step)))
    rows = []
    for bars in itertools.combinations(range(n + p - 1), p - 1):
        edges = (-1,) + bars + (n + p - 1,)
        rows.append([edges[k + 1] - edges[k] - 1 for k in range(p)])
    compositions = np.asarray(rows, dtype=np.float64)
    if tag is Family.L1:
        return compositions / n
    sphere = compositions / np.linalg.norm(compositions, axis=1, keepdims=True)
    if tag is Family.L2:
        return sphere
    patterns = np.asarray(list(itertools.product((1.0, -1.0), repeat=p)))
    signed = (sphere[:, None, :] * patterns[None, :, :]).reshape(-1, p)
    return np.unique(signed, axis=0)


def brute_force_sup(
    dictionary: KernelDictionary,
    sigma: np.ndarray,
    family: HypothesisFamily,
    grid_step: float,
) -> OracleResult:
    """Grid search over mu with the explicit alpha maximiser at the best grid point."""
    if dictionary.p > ORACLE_MAX_P or dictionary.m > ORACLE_MAX_M:
        raise ParameterError(
            f"Oracle runs only for p <= {ORACLE_MAX_P} and m <= {ORACLE_MAX_M}",
            {"p": dictionary.p, "m": dictionary.m},
        )
    if not 0.0 < grid_step <= 0.25:
        raise ParameterError(f"grid_step must be in (0, 0.25], got {grid_step}", {"grid_step": grid_step})
    sigma = _check_sigma(sigma, dictionary.m)
    rho = family.rho

    grid = weight_grid(dictionary.p, grid_step, family.tag)
    forms = quadratic_forms(dictionary, sigma[None, :])[0]
    # sigma^T K_mu sigma is linear in mu; signed weights can make it negative
    combined = np.maximum(grid @ forms, 0.0)
    values = np.sqrt(combined) / rho
    best = int(np.argmax(values))
    mu_star = grid[best]

    k_mu = np.tensordot(mu_star, dictionary.stacked, axes=1)
    s = float(sigma @ k_mu @ sigma)
    if s <= DEGENERATE_THRESHOLD:
        log.debug("Oracle maximiser is degenerate", {"mu_star": mu_star.tolist()})
        return OracleResult(
            grid_max=float(values[best]),
            achiever_check=0.0,
            mu_star=mu_star.tolist(),
            degenerate=True,
            ball_residual=0.0,
            grid_points=int(grid.shape[0]),
        )

    alpha = sigma / (rho * math.sqrt(s))
    scores = k_mu @ alpha
    achiever = float(sigma @ scores)
    ball = float(alpha @ scores)
    return OracleResult(
        grid_max=float(values[best]),
        achiever_check=achiever,
        mu_star=mu_star.tolist(),
        degenerate=False,
        ball_residual=abs(ball * rho ** 2 - 1.0),
        grid_points=int(grid.shape[0]),
    )

