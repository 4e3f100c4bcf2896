"""
Alternating projected-gradient trainer for kernel-combination classifiers.

For fixed weights mu the inner problem is the bias-free soft-margin dual

    J(beta; mu) = 1^T beta - 1/2 (y*beta)^T K_mu (y*beta),   0 <= beta <= C,

solved by projected gradient ascent. The outer loop minimises
G(mu) = max_beta J(beta; mu) over the simplex (L1) or the nonnegative
sphere (L2) using dG/dmu_k = -1/2 (y*beta)^T K_k (y*beta). A step is only
accepted when G does not increase, so the recorded objective is monotone.

The learned hypothesis is h(x) = sum_i alpha_i K_mu(x_i, x) with
alpha = y * beta.
"""

import hashlib
import json
import math
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_serializer, model_validator
from scipy.linalg import eigvalsh

from .domain import CombinationWeights, KernelSpec, Sample
from .errors import DataError, DegenerateDataError, InputError, ParameterError
from .kernels import KernelDictionary, compute_cross_gram, quadratic_forms, weighted_sum
from .logger import logger
from .options import FEASIBILITY_TOLERANCE, Family, TrainOptions
from .projections import project

log = logger.create("kernbound", __file__)


class Model(BaseModel):
    model_config = ConfigDict(frozen=True)

    family: Family
    kernel_specs: List[KernelSpec] = []
    mu: List[float]
    alpha: List[float]
    train_sample_hash: str = ""
    converged: bool = True
    iterations: int = 0
    trainer_log: List[float] = []
    reg_c: float = 1.0

    @model_validator(mode="after")
    def _check(self) -> "Model":
        if self.family is Family.L2_SIGNED:
            raise ValueError("models are trained for L1 or L2 families only")
        weights = CombinationWeights.of(self.mu, self.family)
        if not weights.is_feasible(FEASIBILITY_TOLERANCE):
            raise ValueError(f"mu is infeasible for {self.family.value} (defect {weights.feasibility_defect():.3g})")
        if not all(math.isfinite(a) for a in self.alpha):
            raise ValueError("alpha must be finite")
        if self.kernel_specs and len(self.kernel_specs) != len(self.mu):
            raise ValueError("one kernel spec per weight is required")
        return self

    @field_serializer("family")
    def _serialize_family(self, family: Family) -> str:
        return family.value

    @property
    def weights(self) -> CombinationWeights:
        return CombinationWeights.of(self.mu, self.family)

    @property
    def alpha_array(self) -> np.ndarray:
        return np.asarray(self.alpha, dtype=np.float64)

    @property
    def mu_array(self) -> np.ndarray:
        return np.asarray(self.mu, dtype=np.float64)


def sample_hash(sample: Sample) -> str:
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(sample.x, dtype="<f8").tobytes())
    if sample.y is not None:
        digest.update(np.ascontiguousarray(sample.y, dtype="<f8").tobytes())
    return digest.hexdigest()


def save_model(model: Model, path: str) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(model.model_dump_json(indent=2) + "\n", encoding="utf-8")
    log.info("Saved model", {"path": str(target), "family": model.family.value, "p": len(model.mu)})
    return target


def load_model(path: str) -> Model:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"Cannot read model file {path}: {e}", {"path": path}) from e
    try:
        return Model.model_validate(raw)
    except ValueError as e:
        raise DataError(f"Invalid model file {path}: {e}", {"path": path}) from e


def _dual_objective(beta: np.ndarray, q: np.ndarray) -> float:
    return float(np.sum(beta) - 0.5 * beta @ q @ beta)


def solve_inner(
    q: np.ndarray,
    reg_c: float,
    beta0: np.ndarray,
    max_iter: int,
    tol: float,
) -> Tuple[np.ndarray, float, int]:
    """Projected gradient ascent of 1^T beta - 1/2 beta^T Q beta on [0, C]^m."""
    top = float(eigvalsh(q, subset_by_index=[q.shape[0] - 1, q.shape[0] - 1])[0])
    step = 1.0 / top if top > 0.0 else 1.0
    beta = np.clip(beta0, 0.0, reg_c)
    for iteration in range(1, max_iter + 1):
        updated = np.clip(beta + step * (1.0 - q @ beta), 0.0, reg_c)
        moved = float(np.max(np.abs(updated - beta)))
        beta = updated
        if moved <= tol * max(1.0, reg_c):
            return beta, _dual_objective(beta, q), iteration
    return beta, _dual_objective(beta, q), max_iter


def _check_training_input(sample: Sample, dictionary: KernelDictionary, family: Family, options: TrainOptions) -> np.ndarray:
    if family is Family.L2_SIGNED:
        raise ParameterError("Training supports the L1 and L2 families only", {"family": family.value})
    if sample.y is None:
        raise InputError("Training needs a labelled sample")
    if sample.m != dictionary.m:
        raise InputError(f"Sample has {sample.m} points, dictionary {dictionary.m}", {"m": sample.m, "dictionary_m": dictionary.m})
    if not options.reg_c > 0:
        raise ParameterError("reg_c must be positive", {"reg_c": options.reg_c})
    if options.max_outer < 1:
        raise ParameterError("max_outer must be >= 1", {"max_outer": options.max_outer})
    y = sample.y
    if np.all(y == y[0]):
        raise DegenerateDataError("All training labels are identical", {"label": int(y[0])})
    return y


def train(
    sample: Sample,
    dictionary: KernelDictionary,
    family: Family = Family.L1,
    options: TrainOptions = TrainOptions(),
) -> Model:
    family = Family.parse(family)
    y = _check_training_input(sample, dictionary, family, options)
    m, p = dictionary.m, dictionary.p
    train_log = log.with_context({"family": family.value, "m": m, "p": p})
    train_log.info("Training started", {"reg_c": options.reg_c, "max_outer": options.max_outer})

    yy = np.outer(y, y)

    def inner(mu: np.ndarray, beta0: np.ndarray) -> Tuple[np.ndarray, float]:
        q = yy * weighted_sum(dictionary, mu).entries
        beta, value, _ = solve_inner(q, options.reg_c, beta0, options.inner_iter, options.inner_tol)
        return beta, value

    mu = CombinationWeights.uniform(p, family).as_array()
    beta, objective = inner(mu, np.zeros(m))
    objectives = [objective]
    converged = False
    iterations = 0

    for iterations in range(1, options.max_outer + 1):
        forms = quadratic_forms(dictionary, (y * beta)[None, :])[0]
        gradient = -0.5 * forms
        scale = float(np.max(np.abs(gradient)))
        if scale == 0.0 or p == 1:
            converged = True
            break

        step = options.mu_step / scale
        accepted = None
        for _ in range(options.max_backtrack):
            candidate = project(mu - step * gradient, family)
            candidate_beta, candidate_objective = inner(candidate, beta)
            if candidate_objective <= objective:
                accepted = (candidate, candidate_beta, candidate_objective)
                break
            step *= 0.5
        if accepted is None:
            converged = True
            break

        previous = objective
        mu, beta, objective = accepted
        objectives.append(objective)
        train_log.debug("Outer iteration", {"iteration": iterations, "objective": objective, "step": step})
        if abs(previous - objective) <= options.tol * max(1.0, abs(previous)):
            converged = True
            break

    if not converged:
        train_log.warn("Training stopped before convergence", {"iterations": iterations, "objective": objective})

    model = Model(
        family=family,
        kernel_specs=list(dictionary.specs),
        mu=[float(v) for v in mu],
        alpha=[float(v) for v in y * beta],
        train_sample_hash=sample_hash(sample),
        converged=converged,
        iterations=iterations,
        trainer_log=objectives,
        reg_c=options.reg_c,
    )
    train_log.info("Training finished", {"converged": converged, "iterations": iterations, "objective": objective})
    return model


def predict(model: Model, cross_grams: Sequence[np.ndarray]) -> np.ndarray:
    """score_j = sum_k mu_k (K_k^cross alpha)_j, cross-Grams shaped (queries, m)."""
    if len(cross_grams) != len(model.mu):
        raise InputError(f"Expected {len(model.mu)} cross-Gram matrices, got {len(cross_grams)}")
    alpha = model.alpha_array
    scores: Optional[np.ndarray] = None
    for weight, cross in zip(model.mu, cross_grams):
        cross = np.asarray(cross, dtype=np.float64)
        if cross.ndim != 2 or cross.shape[1] != alpha.size:
            raise InputError(
                f"Cross-Gram has shape {cross.shape}, expected (n, {alpha.size})",
                {"shape": list(cross.shape), "m": alpha.size},
            )
        term = weight * (cross @ alpha)
        scores = term if scores is None else scores + term
    return scores


def predict_samples(model: Model, train_sample: Sample, query: Sample) -> np.ndarray:
    if not model.kernel_specs:
        raise InputError("Model carries no kernel specs; pass cross-Gram matrices to predict instead")
    if train_sample.m != len(model.alpha):
        raise InputError(f"Training sample has {train_sample.m} points, model {len(model.alpha)}")
    return predict(model, [compute_cross_gram(train_sample, query, spec) for spec in model.kernel_specs])


def predict_train(model: Model, dictionary: KernelDictionary) -> np.ndarray:
    """Scores on the training points, K_mu alpha."""
    return predict(model, [g.entries for g in dictionary.grams])


def margin_loss(scores: np.ndarray, labels: np.ndarray, rho: float) -> float:
    """Fraction of points with y * h(x) <= rho."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if scores.size == 0:
        raise ParameterError("margin_loss needs at least one point")
    if scores.shape != labels.shape:
        raise ParameterError(f"{scores.size} scores for {labels.size} labels", {"scores": scores.size, "labels": labels.size})
    if not rho > 0:
        raise ParameterError("rho must be positive", {"rho": rho})
    return float(np.count_nonzero(labels * scores <= rho)) / scores.size


def classification_error(scores: np.ndarray, labels: np.ndarray) -> float:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if scores.size == 0 or scores.shape != labels.shape:
        raise ParameterError("scores and labels must be non-empty and of equal length")
    return float(np.count_nonzero(labels * scores < 0.0)) / scores.size


def alpha_norm_squared(model: Model, dictionary: KernelDictionary) -> float:
    """alpha^T K_mu alpha = sum_k mu_k alpha^T K_k alpha."""
    if len(model.alpha) != dictionary.m or len(model.mu) != dictionary.p:
        raise InputError("Model does not match the dictionary", {"m": dictionary.m, "p": dictionary.p})
    forms = quadratic_forms(dictionary, model.alpha_array[None, :])[0]
    return max(0.0, math.fsum(float(v) for v in model.mu_array * forms))


def admissible_rho(model: Model, dictionary: KernelDictionary) -> float:
    """Largest rho with rho * sqrt(alpha^T K_mu alpha) <= 1; infinite when h = 0."""
    norm_sq = alpha_norm_squared(model, dictionary)
    return math.inf if norm_sq == 0.0 else 1.0 / math.sqrt(norm_sq)
