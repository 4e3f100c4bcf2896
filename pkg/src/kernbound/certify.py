"""
Margin-based generalization certificates.

    R(h) <= margin_loss + 2 * complexity + 2 * sqrt(ln(2/delta) / (2m))

where complexity is either a closed-form bound or an empirical estimate of
the Rademacher complexity of the hypothesis set at margin rho.
"""

import math
from typing import Any, Dict, Optional

from .bounds import ceiling_bound, trace_bound
from .domain import Certificate, HypothesisFamily, MarginConfig, NotApplicable, Sample
from .errors import InputError, MembershipError, ParameterError
from .kernels import KernelDictionary, dictionary_hash
from .learner import Model, alpha_norm_squared, margin_loss, predict_train, sample_hash
from .logger import logger
from .options import DEFAULT_EXACT_CAP, FEASIBILITY_TOLERANCE, BoundChoice
from .rademacher import estimate_exact, estimate_mc

log = logger.create("kernbound", __file__)


def confidence_term(delta: float, m: int) -> float:
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"delta must be in (0, 1), got {delta}", {"delta": delta})
    if m < 1:
        raise ParameterError("m must be >= 1", {"m": m})
    return 2.0 * math.sqrt(math.log(2.0 / delta) / (2.0 * m))


def assemble(
    margin_loss_value: float,
    rademacher_value: float,
    margin: MarginConfig,
    m: int,
    p: int,
    family: Any,
    bound_choice: str,
    provenance: Optional[Dict[str, Any]] = None,
) -> Certificate:
    complexity = 2.0 * rademacher_value
    confidence = confidence_term(margin.delta, m)
    return Certificate(
        margin_loss=margin_loss_value,
        complexity_term=complexity,
        confidence_term=confidence,
        total=margin_loss_value + complexity + confidence,
        bound_choice=bound_choice,
        rademacher_value=rademacher_value,
        family=family,
        rho=margin.rho,
        delta=margin.delta,
        m=m,
        p=p,
        provenance=provenance or {},
    )


def check_provenance(model: Model, sample: Sample, dictionary: KernelDictionary) -> None:
    """The model must come from this sample and this kernel list, in order."""
    if model.kernel_specs and dictionary.specs and list(model.kernel_specs) != list(dictionary.specs):
        names = {
            "model": [spec.name for spec in model.kernel_specs],
            "dictionary": [spec.name for spec in dictionary.specs],
        }
        log.error("Model kernels differ from the dictionary", names)
        raise InputError("Model was trained on a different kernel list", names)
    if model.train_sample_hash and model.train_sample_hash != sample_hash(sample):
        log.error("Model was trained on another sample", {"model_hash": model.train_sample_hash[:16]})
        raise InputError("Model was trained on a different sample", {"train_sample_hash": model.train_sample_hash})


def check_membership(model: Model, dictionary: KernelDictionary, rho: float) -> float:
    """rho * sqrt(alpha^T K_mu alpha) <= 1 up to tolerance; returns the admissible maximum rho."""
    norm_sq = alpha_norm_squared(model, dictionary)
    rho_max = math.inf if norm_sq == 0.0 else 1.0 / math.sqrt(norm_sq)
    if rho * math.sqrt(norm_sq) > 1.0 + FEASIBILITY_TOLERANCE:
        log.error("Hypothesis lies outside the set at this margin", {"rho": rho, "rho_max": rho_max})
        raise MembershipError(
            f"rho={rho} exceeds the admissible maximum {rho_max:.6g} for this model",
            rho_max,
            {"rho": rho},
        )
    return rho_max


def certify(
    model: Model,
    sample: Sample,
    dictionary: KernelDictionary,
    margin: MarginConfig,
    bound_choice: BoundChoice = BoundChoice.CEILING,
    r: Optional[int] = None,
    n_trials: int = 20000,
    seed: int = 0,
    exact_cap: int = DEFAULT_EXACT_CAP,
    threads: int = 0,
) -> Certificate:
    bound_choice = BoundChoice.parse(bound_choice)
    if sample.y is None:
        raise InputError("Certification needs a labelled sample")
    if sample.m != dictionary.m or len(model.alpha) != dictionary.m:
        raise InputError("Model, sample and dictionary sizes differ", {"sample_m": sample.m, "dictionary_m": dictionary.m})
    check_provenance(model, sample, dictionary)
    m, p, rho, family = dictionary.m, dictionary.p, margin.rho, model.family
    rho_max = check_membership(model, dictionary, rho)

    loss = margin_loss(predict_train(model, dictionary), sample.y, rho)
    provenance: Dict[str, Any] = {
        "dictionary_hash": dictionary_hash(dictionary),
        "train_sample_hash": model.train_sample_hash,
        "rho_max": rho_max if math.isfinite(rho_max) else None,
    }

    if bound_choice is BoundChoice.TRACE:
        order = r if r is not None else 2
        value = trace_bound(dictionary.traces, m, rho, order, family)
        label = f"trace(r={order})"
        provenance["r"] = order
    elif bound_choice is BoundChoice.CEILING:
        value = ceiling_bound(p, dictionary.kernel_ceiling_r2, rho, m, family)
        label = "ceiling"
        if isinstance(value, NotApplicable):
            value = trace_bound(dictionary.traces, m, rho, 2, family)
            label = "trace(r=2)"
            provenance["fallback"] = "ceiling bound needs p >= 2"
    elif bound_choice is BoundChoice.EMPIRICAL_EXACT:
        value = estimate_exact(dictionary, HypothesisFamily(tag=family, rho=rho), exact_cap).value
        label = bound_choice.value
    else:
        estimate = estimate_mc(dictionary, HypothesisFamily(tag=family, rho=rho), n_trials, seed, threads)
        value = estimate.value
        label = bound_choice.value
        provenance.update(seed=seed, trials=n_trials, stderr=estimate.stderr)

    certificate = assemble(loss, value, margin, m, p, family, label, provenance)
    log.info("Certificate assembled", {
        "bound": label,
        "margin_loss": certificate.margin_loss,
        "complexity_term": certificate.complexity_term,
        "confidence_term": certificate.confidence_term,
        "total": certificate.total,
    })
    return certificate
