"""
Numerical checks of the inequalities used to derive the closed-form bounds.

Hilbert-space quantities never leave Gram space: a block vector stores one
coefficient vector c_k per kernel, standing for sum_i c_k[i] Phi_k(x_i), so

    <a, b>      = sum_k a_k^T K_k b_k
    ||w_k||     = |mu_k| sqrt(alpha^T K_k alpha)     for w built from (mu, alpha)
    w . Phi(x_j) = sum_k mu_k (K_k alpha)_j
"""

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, NoReturn, Optional, Sequence

import numpy as np

from .domain import CombinationWeights, InequalityResult
from .errors import CapacityError, InputError, KernboundError, ParameterError
from .kernels import GramMatrix, KernelDictionary, gram_quadratic_forms, quadratic_forms
from .logger import logger
from .options import Family
from .signs import check_seed, enumerate_signs, mc_signs

log = logger.create("kernbound", __file__)

MOMENT_EXACT_CAP = 12
SECOND_FACTOR_CAP = 12
MULTINOMIAL_CAP = 10
ODD_MOMENT_CAP = 10
SPHERE_MIN_Q = 4.0 / 3.0


def _fail(error: KernboundError) -> NoReturn:
    log.error(error.message, error.context)
    raise error


@dataclass(frozen=True, eq=False)
class BlockVector:
    coefficients: np.ndarray
    dictionary: KernelDictionary

    def __post_init__(self) -> None:
        coefficients = np.asarray(self.coefficients, dtype=np.float64)
        expected = (self.dictionary.p, self.dictionary.m)
        if coefficients.shape != expected:
            _fail(InputError(f"Block coefficients have shape {coefficients.shape}, expected {expected}"))
        object.__setattr__(self, "coefficients", coefficients)

    @classmethod
    def from_weights(cls, dictionary: KernelDictionary, mu: np.ndarray, alpha: np.ndarray) -> "BlockVector":
        mu = np.asarray(mu, dtype=np.float64)
        alpha = np.asarray(alpha, dtype=np.float64)
        return cls(mu[:, None] * alpha[None, :], dictionary)

    @classmethod
    def from_signs(cls, dictionary: KernelDictionary, sigma: np.ndarray) -> "BlockVector":
        return cls(np.tile(np.asarray(sigma, dtype=np.float64), (dictionary.p, 1)), dictionary)

    @classmethod
    def feature_map(cls, dictionary: KernelDictionary, j: int) -> "BlockVector":
        if not 0 <= j < dictionary.m:
            _fail(ParameterError(f"Sample index {j} outside [0, {dictionary.m})", {"index": j}))
        coefficients = np.zeros((dictionary.p, dictionary.m))
        coefficients[:, j] = 1.0
        return cls(coefficients, dictionary)

    @property
    def p(self) -> int:
        return self.coefficients.shape[0]

    def block_norms(self) -> np.ndarray:
        squares = np.array([
            gram_quadratic_forms(g, c[None, :])[0]
            for g, c in zip(self.dictionary.grams, self.coefficients)
        ])
        return np.sqrt(squares)

    def dot(self, other: "BlockVector") -> float:
        if other.dictionary is not self.dictionary:
            _fail(InputError("Block vectors live on different dictionaries"))
        return math.fsum(
            float(a @ g.entries @ b)
            for g, a, b in zip(self.dictionary.grams, self.coefficients, other.coefficients)
        )


def lp_norm(values: Sequence[float], q: float) -> float:
    """(sum |v|^q)^{1/q}, scaled by the largest entry."""
    values = np.abs(np.asarray(values, dtype=np.float64))
    top = float(np.max(values)) if values.size else 0.0
    if top == 0.0:
        return 0.0
    return top * math.fsum(float(v) for v in (values / top) ** q) ** (1.0 / q)


def conjugate(q: float) -> float:
    if not q > 1.0:
        _fail(ParameterError(f"Hoelder exponent q must be > 1, got {q}", {"q": q}))
    if math.isinf(q):
        return 1.0
    return q / (q - 1.0)


def check_holder_block(w: BlockVector, j: int, q: float) -> InequalityResult:
    """|w . Phi(x_j)| <= ||(||w_k||)_k||_q ||(||Phi_k(x_j)||)_k||_r with 1/q + 1/r = 1."""
    log.debug("check_holder_block", {"index": j, "q": q})
    r = conjugate(q)
    phi = BlockVector.feature_map(w.dictionary, j)
    lhs = abs(w.dot(phi))
    rhs = lp_norm(w.block_norms(), q) * lp_norm(phi.block_norms(), r)
    return InequalityResult.at_most("holder_block", lhs, rhs, detail={"q": q, "r": r, "index": j})


def check_first_factor(
    mu: CombinationWeights,
    alpha: np.ndarray,
    dictionary: KernelDictionary,
    q: float,
) -> InequalityResult:
    """(sum_k (mu_k^2 alpha^T K_k alpha)^{q/2})^{1/q} <= sqrt(alpha^T K_mu alpha)."""
    log.debug("check_first_factor", {"p": mu.p, "q": q, "family": mu.tag.value})
    conjugate(q)
    if mu.tag is Family.L2_SIGNED:
        _fail(ParameterError("The first-factor bound needs nonnegative weights; use L1 or L2"))
    if mu.tag is Family.L2 and q < SPHERE_MIN_Q:
        _fail(ParameterError(f"For L2 weights q must be >= 4/3, got {q}", {"q": q}))
    if mu.p != dictionary.p:
        _fail(InputError(f"Expected {dictionary.p} weights, got {mu.p}"))
    mu.require_feasible()

    weights = mu.as_array()
    forms = quadratic_forms(dictionary, np.asarray(alpha, dtype=np.float64)[None, :])[0]
    lhs = lp_norm(np.abs(weights) * np.sqrt(forms), q)
    rhs = math.sqrt(max(0.0, math.fsum(float(v) for v in weights * forms)))
    return InequalityResult.at_most("first_factor", lhs, rhs, detail={"q": q, "family": mu.tag.value})


def check_sphere_exponent(mu: CombinationWeights, q: float) -> InequalityResult:
    """mu_k^{4(q-1)/q} <= mu_k on the nonnegative sphere; reported at the worst k."""
    log.debug("check_sphere_exponent", {"p": mu.p, "q": q})
    if mu.tag is not Family.L2:
        _fail(ParameterError("The sphere exponent step applies to L2 weights only"))
    if q < SPHERE_MIN_Q:
        _fail(ParameterError(f"q must be >= 4/3, got {q}", {"q": q}))
    mu.require_feasible()
    weights = mu.as_array()
    exponent = 4.0 * (q - 1.0) / q
    powered = weights ** exponent
    worst = int(np.argmax(powered - weights))
    return InequalityResult.at_most(
        "sphere_exponent", powered[worst], weights[worst], detail={"q": q, "k": worst, "exponent": exponent},
    )


def _check_order(r: int) -> None:
    if isinstance(r, bool) or int(r) != r or r < 2 or r % 2:
        _fail(ParameterError(f"r must be an even integer >= 2, got {r}", {"r": r}))


def check_moment_bound(
    g: GramMatrix,
    r: int,
    mode: str = "exact",
    n_trials: int = 100000,
    seed: int = 0,
) -> InequalityResult:
    """E_sigma[(sigma^T K sigma)^{r/2}] <= (r Tr[K])^{r/2}."""
    log.debug("check_moment_bound", {"kernel": g.name, "m": g.m, "r": r, "mode": mode})
    _check_order(r)
    rhs = (r * g.trace) ** (r / 2)
    if mode == "exact":
        if g.m > MOMENT_EXACT_CAP:
            _fail(CapacityError(f"Exact moment check needs m <= {MOMENT_EXACT_CAP}, got {g.m}", MOMENT_EXACT_CAP, {"m": g.m}))
        # (sigma^T K sigma) is even in sigma
        parts = [float(np.sum(gram_quadratic_forms(g, signs) ** (r // 2))) for signs in enumerate_signs(g.m, half=True)]
        lhs = math.fsum(parts) / 2 ** (g.m - 1)
        return InequalityResult.at_most("moment_bound", lhs, rhs, detail={"r": r, "mode": mode, "kernel": g.name})
    if mode == "monteCarlo":
        seed = check_seed(seed)
        if n_trials < 2:
            _fail(ParameterError("Monte Carlo moment check needs at least two trials", {"n_trials": n_trials}))
        values = gram_quadratic_forms(g, mc_signs(seed, g.m, 0, n_trials)) ** (r // 2)
        stderr = float(np.std(values, ddof=1)) / math.sqrt(n_trials)
        return InequalityResult.at_most(
            "moment_bound", float(np.mean(values)), rhs, stderr=stderr,
            detail={"r": r, "mode": mode, "kernel": g.name, "trials": n_trials, "seed": seed},
        )
    _fail(ParameterError(f"Unknown moment check mode: {mode}", {"mode": mode}))


def check_second_factor(dictionary: KernelDictionary, r: int) -> InequalityResult:
    """E[(sum_k u_k^{r/2})^{1/r}] <= (sum_k E[u_k^{r/2}])^{1/r} with u_k = sigma^T K_k sigma."""
    log.debug("check_second_factor", {"p": dictionary.p, "m": dictionary.m, "r": r})
    _check_order(r)
    if dictionary.m > SECOND_FACTOR_CAP:
        _fail(CapacityError(
            f"Second-factor check enumerates signs and needs m <= {SECOND_FACTOR_CAP}",
            SECOND_FACTOR_CAP,
            {"m": dictionary.m},
        ))
    outer: List[float] = []
    moments = np.zeros(dictionary.p)
    for signs in enumerate_signs(dictionary.m, half=True):
        norms = np.sqrt(quadratic_forms(dictionary, signs))
        outer.extend(lp_norm(row, r) for row in norms)
        moments += np.sum(norms ** r, axis=0)
    count = 2 ** (dictionary.m - 1)
    lhs = math.fsum(outer) / count
    rhs = math.fsum(float(v) for v in moments / count) ** (1.0 / r)
    return InequalityResult.at_most("second_factor", lhs, rhs, detail={"r": r, "p": dictionary.p})


def check_gram_cauchy_schwarz(g: GramMatrix) -> InequalityResult:
    """|K_ij| <= sqrt(K_ii K_jj), reported at the pair with the smallest slack."""
    log.debug("check_gram_cauchy_schwarz", {"kernel": g.name, "m": g.m})
    diagonal = np.maximum(g.diagonal, 0.0)
    bound = np.sqrt(np.outer(diagonal, diagonal))
    gap = np.abs(g.entries) - bound
    i, j = np.unravel_index(int(np.argmax(gap)), gap.shape)
    return InequalityResult.at_most(
        "gram_cauchy_schwarz", abs(g.entries[i, j]), bound[i, j], detail={"i": int(i), "j": int(j), "kernel": g.name},
    )


def check_trace_ceiling(dictionary: KernelDictionary) -> List[InequalityResult]:
    log.debug("check_trace_ceiling", {"p": dictionary.p, "m": dictionary.m})
    ceiling = dictionary.m * dictionary.kernel_ceiling_r2
    return [
        InequalityResult.at_most("trace_ceiling", g.trace, ceiling, detail={"kernel": g.name})
        for g in dictionary.grams
    ]


def _check_composition(r_prime: int, t: Sequence[int]) -> List[int]:
    t = [int(v) for v in t]
    if r_prime < 1 or r_prime > MULTINOMIAL_CAP:
        _fail(ParameterError(f"r' must be in [1, {MULTINOMIAL_CAP}], got {r_prime}", {"r_prime": r_prime}))
    if any(v < 0 for v in t):
        _fail(ParameterError("composition parts must be nonnegative", {"t": t}))
    if sum(t) != r_prime:
        _fail(ParameterError(f"composition {t} does not sum to r'={r_prime}", {"t": t, "r_prime": r_prime}))
    return t


def _product(values: Sequence[int]) -> int:
    return math.prod(values) if values else 1


def _exact(name: str, lhs: Fraction, rhs: Fraction, relation: str, detail: dict) -> InequalityResult:
    holds = lhs <= rhs if relation == "le" else lhs == rhs
    return InequalityResult(
        name=name,
        lhs=float(lhs),
        rhs=float(rhs),
        holds=holds,
        slack=float(rhs - lhs),
        relation=relation,
        detail={**detail, "lhs_exact": str(lhs), "rhs_exact": str(rhs)},
    )


def check_multinomial_footnote(r_prime: int, t: Sequence[int]) -> InequalityResult:
    """(2r')! / prod (2t_i)! <= (2r')^{r'} r'! / prod t_i!, in exact integers."""
    log.debug("check_multinomial_footnote", {"r_prime": r_prime, "t": list(t)})
    t = _check_composition(r_prime, t)
    lhs = Fraction(math.factorial(2 * r_prime), _product([math.factorial(2 * v) for v in t]))
    rhs = Fraction((2 * r_prime) ** r_prime * math.factorial(r_prime), _product([math.factorial(v) for v in t]))
    return _exact("multinomial_footnote", lhs, rhs, "le", {"r_prime": r_prime, "t": t})


def check_multinomial_chain(r_prime: int, t: Sequence[int]) -> List[InequalityResult]:
    """The four links from (2r'; 2t) to (2r')^{r'} (r'; t)."""
    log.debug("check_multinomial_chain", {"r_prime": r_prime, "t": list(t)})
    t = _check_composition(r_prime, t)
    half = _product([math.factorial(v) for v in t])
    full = _product([math.factorial(2 * v) for v in t])
    falling = _product(list(range(r_prime + 1, 2 * r_prime + 1)))
    power = (2 * r_prime) ** r_prime

    steps = [
        Fraction(math.factorial(2 * r_prime), full),
        Fraction(math.factorial(2 * r_prime), half),
        Fraction(falling * math.factorial(r_prime), half),
        Fraction(power * math.factorial(r_prime), half),
        Fraction(power * (math.factorial(r_prime) // half)),
    ]
    relations = ["le", "eq", "le", "eq"]
    detail = {"r_prime": r_prime, "t": t}
    return [
        _exact(f"multinomial_chain[{index}]", steps[index], steps[index + 1], relation, {**detail, "step": index})
        for index, relation in enumerate(relations)
    ]


def compositions(total: int, parts: int):
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        edges = (-1,) + bars + (total + parts - 1,)
        yield tuple(edges[k + 1] - edges[k] - 1 for k in range(parts))


def check_multinomial_trace_identity(g: GramMatrix, r_prime: int) -> InequalityResult:
    """sum over compositions t of r' of (r'; t) prod K_ii^{t_i} equals Tr[K]^{r'}."""
    log.debug("check_multinomial_trace_identity", {"kernel": g.name, "m": g.m, "r_prime": r_prime})
    if r_prime < 1 or r_prime > MULTINOMIAL_CAP:
        _fail(ParameterError(f"r' must be in [1, {MULTINOMIAL_CAP}], got {r_prime}", {"r_prime": r_prime}))
    if g.m > MOMENT_EXACT_CAP:
        _fail(CapacityError(f"Trace identity check needs m <= {MOMENT_EXACT_CAP}", MOMENT_EXACT_CAP, {"m": g.m}))
    diagonal = [float(v) for v in g.diagonal]
    factorial = math.factorial(r_prime)
    terms = []
    for t in compositions(r_prime, g.m):
        coefficient = factorial // _product([math.factorial(v) for v in t])
        terms.append(coefficient * math.prod(d ** v for d, v in zip(diagonal, t)))
    return InequalityResult.equal(
        "multinomial_trace_identity", math.fsum(terms), g.trace ** r_prime, tol=1e-9,
        detail={"r_prime": r_prime, "kernel": g.name},
    )


def check_vanishing_odd_moments(m: int, s: Sequence[int]) -> InequalityResult:
    """|E[sigma_1^{s_1} ... sigma_m^{s_m}]| is 1 when every s_i is even and 0 otherwise."""
    log.debug("check_vanishing_odd_moments", {"m": m, "s": list(s)})
    s = [int(v) for v in s]
    if m < 1 or m > ODD_MOMENT_CAP:
        _fail(ParameterError(f"m must be in [1, {ODD_MOMENT_CAP}], got {m}", {"m": m}))
    if len(s) != m:
        _fail(ParameterError(f"Expected {m} exponents, got {len(s)}", {"m": m, "s": s}))
    if any(v < 0 for v in s):
        _fail(ParameterError("exponents must be nonnegative", {"s": s}))

    total = 0
    for signs in itertools.product((1, -1), repeat=m):
        total += _product([sign ** power for sign, power in zip(signs, s)])
    lhs = Fraction(abs(total), 2 ** m)
    rhs = Fraction(1 if all(v % 2 == 0 for v in s) else 0)
    return _exact("vanishing_odd_moments", lhs, rhs, "eq", {"m": m, "s": s})


def random_weights(rng: np.random.Generator, p: int, tag: Family, sparsity: Optional[float] = None) -> CombinationWeights:
    """Feasible weights drawn from a Dirichlet (L1) or a folded Gaussian (L2)."""
    if tag is Family.L1:
        mu = rng.dirichlet(np.ones(p))
        mu = mu / math.fsum(mu)
    else:
        mu = np.abs(rng.standard_normal(p))
        if tag is Family.L2_SIGNED:
            mu = mu * rng.choice((-1.0, 1.0), size=p)
        mu = mu / np.linalg.norm(mu)
    if sparsity is not None:
        mask = rng.random(p) < sparsity
        if mask.all():
            mask[int(rng.integers(0, p))] = False
        mu = np.where(mask, 0.0, mu)
        mu = mu / (math.fsum(mu) if tag is Family.L1 else np.linalg.norm(mu))
    log.trace("random_weights", {"p": p, "tag": tag.value})
    return CombinationWeights.of(mu, tag)
