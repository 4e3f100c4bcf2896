"""
Closed-form Rademacher complexity bounds for L1 (simplex) and L2 (sphere)
combinations of base kernels, plus the pseudo-dimension comparator.

All logarithms are natural.
"""

import math
from typing import List, NoReturn, Optional, Sequence, Tuple, Union

from .domain import BoundReport, NotApplicable
from .errors import KernboundError, ParameterError
from .kernels import KernelDictionary
from .logger import logger
from .options import BoundForm, Family

log = logger.create("kernbound", __file__)

BoundValue = Union[float, NotApplicable]

LOG_INTEGER_GUARD = 1e-12
L2_ORDERS = (2, 4)


def _fail(error: KernboundError) -> NoReturn:
    log.error(error.message, error.context)
    raise error


def _family(family: Union[Family, str]) -> Family:
    family = Family.parse(family)
    if family is Family.L2_SIGNED:
        return Family.L2
    return family


def _check_positive(**values: float) -> None:
    for name, value in values.items():
        if not value > 0 or not math.isfinite(value):
            _fail(ParameterError(f"{name} must be a positive finite number, got {value}", {name: value}))


def _check_order(r: int, family: Family) -> None:
    if isinstance(r, bool) or int(r) != r:
        _fail(ParameterError(f"r must be an integer, got {r}", {"r": r}))
    if r <= 0 or r % 2 != 0:
        _fail(ParameterError(f"r must be a positive even integer, got {r}", {"r": r}))
    if family is Family.L2 and r not in L2_ORDERS:
        _fail(ParameterError(f"L2 bounds only hold for r in {L2_ORDERS}, got {r}", {"r": r}))


def ceil_log(p: int) -> int:
    """Ceiling of ln p, snapping values within 1e-12 of an integer onto it first."""
    value = math.log(p)
    nearest = round(value)
    if abs(value - nearest) <= LOG_INTEGER_GUARD:
        return int(nearest)
    return math.ceil(value)


def _scale(kernel_ceiling_r2: float, rho: float, m: int) -> float:
    return math.sqrt(kernel_ceiling_r2 / rho ** 2 / m)


def trace_bound(traces: Sequence[float], m: int, rho: float, r: int, family: Union[Family, str] = Family.L1) -> float:
    """||tau||_r / (m rho) with tau_k = sqrt(r Tr[K_k])."""
    family = _family(family)
    log.debug("trace_bound", {"p": len(traces), "m": m, "rho": rho, "r": r, "family": family.value})
    _check_order(r, family)
    _check_positive(rho=rho, m=m)
    if not traces:
        _fail(ParameterError("trace_bound needs at least one trace"))
    if any(t < 0 or not math.isfinite(t) for t in traces):
        _fail(ParameterError("traces must be finite and nonnegative", {"traces": list(traces)}))

    # sorted so the sum does not depend on kernel order; scaled by the largest term to avoid overflow
    tau = sorted(math.sqrt(r * t) for t in traces)
    top = tau[-1]
    if top == 0.0:
        return 0.0
    norm = top * math.fsum((t / top) ** r for t in tau) ** (1.0 / r)
    return norm / (m * rho)


def intermediate_bound(p: int, kernel_ceiling_r2: float, rho: float, m: int, r: int) -> float:
    """p^{1/r} sqrt(r) sqrt(R^2/rho^2/m): the trace bound when every trace equals m R^2."""
    _check_positive(p=p, r2=kernel_ceiling_r2, rho=rho, m=m)
    return p ** (1.0 / r) * math.sqrt(r) * _scale(kernel_ceiling_r2, rho, m)


def ceiling_bound(
    p: int,
    kernel_ceiling_r2: float,
    rho: float,
    m: int,
    family: Union[Family, str] = Family.L1,
) -> BoundValue:
    family = _family(family)
    log.debug("ceiling_bound", {"p": p, "r2": kernel_ceiling_r2, "rho": rho, "m": m, "family": family.value})
    _check_positive(p=p, r2=kernel_ceiling_r2, rho=rho, m=m)
    if family is Family.L1:
        if p < 2:
            return NotApplicable(reason="L1 ceiling bound requires p >= 2; use the trace bound with r=2")
        return math.sqrt(2.0 * math.e * ceil_log(p) * kernel_ceiling_r2 / rho ** 2 / m)
    # sqrt(sqrt(p)) keeps value(16p) / value(p) exactly 2 in floating point
    return 2.0 * math.sqrt(math.sqrt(p)) * _scale(kernel_ceiling_r2, rho, m)


def continuous_minimum(p: int, kernel_ceiling_r2: float, rho: float, m: int) -> BoundValue:
    """Intermediate form evaluated at the real minimiser r0 = 2 ln p."""
    _check_positive(p=p, r2=kernel_ceiling_r2, rho=rho, m=m)
    if p < 2:
        return NotApplicable(reason="the real minimiser 2 ln p is only defined for p >= 2")
    return math.sqrt(2.0 * math.e * math.log(p) * kernel_ceiling_r2 / rho ** 2 / m)


def even_r_window(p: int, family: Union[Family, str] = Family.L1) -> List[int]:
    family = _family(family)
    if family is Family.L2:
        return list(L2_ORDERS)
    upper = 2 * math.ceil(2.0 * math.log(p)) + 4
    return list(range(2, upper + 1, 2))


def optimize_even_r(
    p: int,
    kernel_ceiling_r2: float,
    rho: float,
    m: int,
    family: Union[Family, str] = Family.L1,
) -> Tuple[int, float]:
    _check_positive(p=p, r2=kernel_ceiling_r2, rho=rho, m=m)
    if p == 1:
        return 2, intermediate_bound(1, kernel_ceiling_r2, rho, m, 2)
    best_r, best_value = 0, math.inf
    for r in even_r_window(p, family):
        value = intermediate_bound(p, kernel_ceiling_r2, rho, m, r)
        if value < best_value:
            best_r, best_value = r, value
    return best_r, best_value


def comparator_sb(p: int, kernel_ceiling_r2: float, rho: float, m: int) -> BoundValue:
    """Pseudo-dimension bound, constants as published; not applicable when a log argument is <= 1."""
    log.debug("comparator_sb", {"p": p, "r2": kernel_ceiling_r2, "rho": rho, "m": m})
    _check_positive(p=p, r2=kernel_ceiling_r2, rho=rho, m=m)
    r = math.sqrt(kernel_ceiling_r2)
    ratio = kernel_ceiling_r2 / rho ** 2
    arguments = {
        "128 e m^3 R^2 / (rho^2 p)": 128.0 * math.e * m ** 3 * ratio / p,
        "rho e m / (8 R)": rho * math.e * m / (8.0 * r),
        "128 m R^2 / rho^2": 128.0 * m * ratio,
    }
    for label, argument in arguments.items():
        if not argument > 1.0:
            return NotApplicable(reason=f"log argument {label} = {argument:.6g} is not > 1")
    first, second, third = (math.log(a) for a in arguments.values())
    inner = 2.0 + p * first + 256.0 * ratio * second * third
    return math.sqrt(8.0 * inner / m)


def _report(
    family: Family,
    form: BoundForm,
    value: BoundValue,
    p: int,
    m: int,
    rho: float,
    r2: Optional[float],
    r: Optional[int] = None,
    traces: Optional[Sequence[float]] = None,
    fallback: Optional[float] = None,
) -> BoundReport:
    applicable = not isinstance(value, NotApplicable)
    return BoundReport(
        family=family,
        form=form.value,
        r=r,
        value=float(value) if applicable else None,
        reason=None if applicable else value.reason,
        fallback=fallback,
        p=p,
        m=m,
        rho=rho,
        r2=r2,
        traces=list(traces) if traces is not None else None,
    )


def trace_report(dictionary: KernelDictionary, rho: float, r: int, family: Union[Family, str] = Family.L1) -> BoundReport:
    family = _family(family)
    value = trace_bound(dictionary.traces, dictionary.m, rho, r, family)
    return _report(family, BoundForm.TRACE, value, dictionary.p, dictionary.m, rho, None, r=r, traces=dictionary.traces)


def _sort_key(report: BoundReport) -> Tuple[int, str, str]:
    return report.p, report.family.value, report.form


def sweep_closed_forms(
    m: int,
    kernel_ceiling_r2: float,
    rho: float,
    p_values: Sequence[int],
    fallbacks: Optional[Sequence[Optional[float]]] = None,
) -> List[BoundReport]:
    """Four rows per p: L1 ceiling, L1 comparatorSB, L1 evenROptimized, L2 ceiling.

    Without dictionary fallbacks the p = 1 row falls back to the r=2 trace bound
    with every trace at m R^2.
    """
    rows: List[BoundReport] = []
    for index, p in enumerate(p_values):
        if p < 1:
            _fail(ParameterError(f"p values must be >= 1, got {p}", {"p": p}))
        fallback = fallbacks[index] if fallbacks is not None else None
        if fallback is None and p == 1:
            fallback = intermediate_bound(1, kernel_ceiling_r2, rho, m, 2)
        l1 = ceiling_bound(p, kernel_ceiling_r2, rho, m, Family.L1)
        rows.append(_report(
            Family.L1, BoundForm.CEILING, l1, p, m, rho, kernel_ceiling_r2,
            fallback=fallback if isinstance(l1, NotApplicable) else None,
        ))
        rows.append(_report(Family.L1, BoundForm.COMPARATOR_SB, comparator_sb(p, kernel_ceiling_r2, rho, m), p, m, rho, kernel_ceiling_r2))
        r_star, best = optimize_even_r(p, kernel_ceiling_r2, rho, m, Family.L1)
        rows.append(_report(Family.L1, BoundForm.EVEN_R_OPTIMIZED, best, p, m, rho, kernel_ceiling_r2, r=r_star))
        rows.append(_report(Family.L2, BoundForm.CEILING, ceiling_bound(p, kernel_ceiling_r2, rho, m, Family.L2), p, m, rho, kernel_ceiling_r2))
    rows.sort(key=_sort_key)
    log.debug("Closed-form sweep", {"m": m, "p_values": list(p_values), "rows": len(rows)})
    return rows


def sweep_bounds(dictionary: KernelDictionary, rho: float, p_values: Sequence[int]) -> List[BoundReport]:
    """Sweep over nested prefixes of the dictionary; p = 1 rows carry the r=2 trace bound as fallback."""
    for p in p_values:
        if p > dictionary.p:
            _fail(ParameterError(f"p value {p} exceeds the dictionary size {dictionary.p}", {"p": p, "available": dictionary.p}))
    fallbacks = [
        trace_bound(dictionary.traces[:1], dictionary.m, rho, 2, Family.L1) if p == 1 else None
        for p in p_values
    ]
    return sweep_closed_forms(dictionary.m, dictionary.kernel_ceiling_r2, rho, p_values, fallbacks)


def bound_for(
    dictionary: KernelDictionary,
    rho: float,
    family: Union[Family, str],
    form: Union[BoundForm, str],
    r: Optional[int] = None,
) -> BoundReport:
    """Single BoundReport for the ``bound`` command."""
    family = _family(family)
    form = BoundForm(form) if isinstance(form, str) else form
    p, m, r2 = dictionary.p, dictionary.m, dictionary.kernel_ceiling_r2
    if form is BoundForm.TRACE:
        return trace_report(dictionary, rho, r if r is not None else 2, family)
    if form is BoundForm.CEILING:
        value = ceiling_bound(p, r2, rho, m, family)
        fallback = None
        if isinstance(value, NotApplicable):
            fallback = trace_bound(dictionary.traces, m, rho, 2, family)
        return _report(family, form, value, p, m, rho, r2, fallback=fallback)
    if form is BoundForm.EVEN_R_OPTIMIZED:
        r_star, value = optimize_even_r(p, r2, rho, m, family)
        return _report(family, form, value, p, m, rho, r2, r=r_star)
    return _report(Family.L1, form, comparator_sb(p, r2, rho, m), p, m, rho, r2)
