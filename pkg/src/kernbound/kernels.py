"""
Gram matrices and kernel dictionaries.

Everything downstream (bounds, Rademacher estimates, proof checks, training)
works from Gram entries only; feature maps are never materialised.
"""

import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigvalsh
from scipy.spatial.distance import cdist

from .domain import CombinationWeights, KernelSpec, PsdDiagnostics, Sample
from .errors import DataError, InputError, ParameterError, PsdViolationError
from .logger import logger
from .options import PSD_TOLERANCE, QUADRATIC_CLAMP, CeilingPolicy, KernelKind

log = logger.create("kernbound", __file__)


@dataclass(frozen=True, eq=False)
class GramMatrix:
    entries: np.ndarray
    name: str = "gram"
    trace: float = field(init=False)

    def __post_init__(self) -> None:
        entries = np.array(self.entries, dtype=np.float64, copy=True)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise InputError(f"Gram matrix '{self.name}' must be square, got shape {entries.shape}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "trace", float(np.sum(np.diagonal(entries))))

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def spectrum(self) -> Tuple[float, float]:
        if not np.all(np.isfinite(self.entries)):
            raise DataError(f"Gram matrix '{self.name}' has non-finite entries", {"kernel": self.name})
        sym = 0.5 * (self.entries + self.entries.T)
        eigs = eigvalsh(sym)
        return float(eigs[0]), float(eigs[-1])

    @property
    def diagonal(self) -> np.ndarray:
        return np.diagonal(self.entries)


@dataclass(frozen=True, eq=False)
class KernelDictionary:
    grams: Tuple[GramMatrix, ...]
    kernel_ceiling_r2: float
    specs: Tuple[KernelSpec, ...] = ()

    def __post_init__(self) -> None:
        grams = tuple(self.grams)
        object.__setattr__(self, "grams", grams)
        object.__setattr__(self, "specs", tuple(self.specs))
        if not grams:
            raise ParameterError("A kernel dictionary needs at least one kernel")
        m = grams[0].m
        for g in grams:
            if g.m != m:
                raise InputError(
                    f"Gram '{g.name}' has size {g.m}, expected {m}",
                    {"kernel": g.name, "m": g.m, "expected": m},
                )
        if not self.kernel_ceiling_r2 > 0:
            raise DataError("Kernel ceiling R^2 must be positive", {"r2": self.kernel_ceiling_r2})
        if self.kernel_ceiling_r2 < self.max_diagonal:
            raise ParameterError(
                f"Kernel ceiling {self.kernel_ceiling_r2} is below the largest diagonal entry {self.max_diagonal}",
                {"r2": self.kernel_ceiling_r2, "max_diagonal": self.max_diagonal},
            )

    @property
    def m(self) -> int:
        return self.grams[0].m

    @property
    def p(self) -> int:
        return len(self.grams)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(g.name for g in self.grams)

    @cached_property
    def traces(self) -> Tuple[float, ...]:
        return tuple(g.trace for g in self.grams)

    @cached_property
    def max_diagonal(self) -> float:
        return float(max(np.max(g.diagonal) for g in self.grams))

    @cached_property
    def stacked(self) -> np.ndarray:
        stack = np.stack([g.entries for g in self.grams])
        stack.setflags(write=False)
        return stack

    def subset(self, p: int) -> "KernelDictionary":
        """First ``p`` kernels in dictionary order, same ceiling."""
        if p < 1 or p > self.p:
            raise ParameterError(f"Cannot take {p} kernels from a dictionary of {self.p}", {"p": p, "available": self.p})
        return KernelDictionary(self.grams[:p], self.kernel_ceiling_r2, self.specs[:p])

    @classmethod
    def from_matrices(
        cls,
        matrices: Sequence[np.ndarray],
        kernel_ceiling_r2: Optional[float] = None,
        names: Optional[Sequence[str]] = None,
    ) -> "KernelDictionary":
        names = list(names) if names is not None else [f"K{k + 1}" for k in range(len(matrices))]
        grams = tuple(GramMatrix(np.asarray(mat, dtype=np.float64), name) for mat, name in zip(matrices, names))
        if kernel_ceiling_r2 is None:
            kernel_ceiling_r2 = float(max(np.max(g.diagonal) for g in grams))
        return cls(grams, kernel_ceiling_r2)


def _pairwise(x: np.ndarray, z: np.ndarray, spec: KernelSpec) -> np.ndarray:
    if spec.kind is KernelKind.LINEAR:
        return x @ z.T
    if spec.kind is KernelKind.POLYNOMIAL:
        return (x @ z.T + spec.offset) ** spec.degree
    if spec.kind is KernelKind.GAUSSIAN:
        return np.exp(-spec.gamma * cdist(x, z, "sqeuclidean"))
    raise ParameterError(f"Unsupported kernel kind: {spec.kind}")


def compute_gram(sample: Sample, spec: KernelSpec) -> GramMatrix:
    """Upper triangle of k(x_i, x_j), mirrored so the result is exactly symmetric."""
    log.debug("compute_gram", {"kernel": spec.name, "kind": spec.kind.value, "m": sample.m, "d": sample.d})
    full = _pairwise(sample.x, sample.x, spec)
    upper = np.triu(full)
    entries = upper + np.triu(full, 1).T
    return GramMatrix(entries, spec.name)


def compute_cross_gram(train: Sample, query: Sample, spec: KernelSpec) -> np.ndarray:
    """Rows are query points, columns training points."""
    if train.d != query.d:
        raise InputError(
            f"Query points have dimension {query.d}, training points {train.d}",
            {"train_d": train.d, "query_d": query.d},
        )
    return _pairwise(query.x, train.x, spec)


def symmetric_defect(entries: np.ndarray) -> float:
    scale = max(1.0, float(np.max(np.abs(entries))) if entries.size else 1.0)
    return float(np.max(np.abs(entries - entries.T))) / scale


def validate_psd(g: GramMatrix, tol: float = PSD_TOLERANCE) -> PsdDiagnostics:
    if not np.all(np.isfinite(g.entries)):
        log.error("Gram matrix has non-finite entries", {"kernel": g.name})
        raise DataError(f"Gram matrix '{g.name}' has non-finite entries", {"kernel": g.name})
    min_eig, max_eig = g.spectrum
    defect = symmetric_defect(g.entries)
    passed = min_eig >= -tol * max(max_eig, 1.0) and defect <= tol
    log.trace("validate_psd", {"kernel": g.name, "min_eig": min_eig, "max_eig": max_eig, "defect": defect})
    return PsdDiagnostics(min_eig=min_eig, max_eig=max_eig, symmetric_defect=defect, passed=passed)


def build_dictionary(
    sample: Sample,
    specs: Sequence[KernelSpec],
    ceiling_policy: CeilingPolicy = CeilingPolicy.from_sample(),
    gram_source: Optional[Callable[[Sample, KernelSpec], GramMatrix]] = None,
) -> KernelDictionary:
    """Grams come from ``gram_source`` when given (a cache, say) and are PSD-validated either way."""
    if not specs:
        raise ParameterError("At least one kernel spec is required")
    names = [spec.name for spec in specs]
    duplicates = sorted({n for n in names if names.count(n) > 1})
    if duplicates:
        raise ParameterError(f"Kernel names must be unique: {', '.join(duplicates)}", {"duplicates": duplicates})

    log.info("Building kernel dictionary", {"p": len(specs), "m": sample.m, "kernels": names})
    grams = []
    for spec in specs:
        gram = (gram_source or compute_gram)(sample, spec)
        diagnostics = validate_psd(gram)
        if not diagnostics.passed:
            log.error("Gram failed PSD validation", {"kernel": spec.name, **diagnostics.model_dump()})
            raise DataError(
                f"Kernel '{spec.name}' is not positive semidefinite on this sample "
                f"(min eigenvalue {diagnostics.min_eig:.3g})",
                {"kernel": spec.name, "min_eig": diagnostics.min_eig, "max_eig": diagnostics.max_eig},
            )
        grams.append(gram)

    sample_max = float(max(np.max(g.diagonal) for g in grams))
    if ceiling_policy.is_from_sample:
        ceiling = sample_max
    else:
        ceiling = ceiling_policy.user_value
        if ceiling < sample_max:
            raise ParameterError(
                f"User kernel ceiling {ceiling} is below the sample maximum diagonal {sample_max}",
                {"r2": ceiling, "sample_max": sample_max},
            )
    if not ceiling > 0:
        raise DataError("Every kernel diagonal is zero; the kernel ceiling R^2 must be positive")

    dictionary = KernelDictionary(tuple(grams), ceiling, tuple(specs))
    log.debug("Dictionary ready", {"r2": ceiling, "traces": list(dictionary.traces)})
    return dictionary


def _clamp(raw: float, norm_sq: float, max_eig: float, name: str) -> float:
    if raw >= 0.0:
        return raw
    if raw >= -QUADRATIC_CLAMP * norm_sq * max(max_eig, 0.0):
        return 0.0
    raise PsdViolationError(
        f"Quadratic form on '{name}' is negative ({raw:.3g}) beyond tolerance",
        {"kernel": name, "value": raw},
    )


def quadratic_form(g: GramMatrix, v: np.ndarray) -> float:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (g.m,):
        raise InputError(f"Vector of length {v.size} does not match Gram size {g.m}", {"length": v.size, "m": g.m})
    raw = float(v @ g.entries @ v)
    if raw >= 0.0:
        return raw
    return _clamp(raw, float(v @ v), g.spectrum[1], g.name)


def gram_quadratic_forms(g: GramMatrix, vectors: np.ndarray) -> np.ndarray:
    """Batched v^T K v for each row v of ``vectors``, clamped like ``quadratic_form``."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    if vectors.shape[1] != g.m:
        raise InputError(
            f"Vectors of length {vectors.shape[1]} do not match Gram size {g.m}",
            {"length": vectors.shape[1], "m": g.m},
        )
    out = np.sum((vectors @ g.entries) * vectors, axis=1)
    negative = np.nonzero(out < 0.0)[0]
    if negative.size:
        norms = np.sum(vectors * vectors, axis=1)
        for t in negative:
            out[t] = _clamp(float(out[t]), float(norms[t]), g.spectrum[1], g.name)
    return out


def quadratic_forms(dictionary: KernelDictionary, vectors: np.ndarray) -> np.ndarray:
    """
    Batched v^T K_k v for every row v of ``vectors`` and every kernel k.

    Returns an array of shape (len(vectors), p), clamped like ``quadratic_form``.
    """
    vectors = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    if vectors.shape[1] != dictionary.m:
        raise InputError(
            f"Vectors of length {vectors.shape[1]} do not match Gram size {dictionary.m}",
            {"length": vectors.shape[1], "m": dictionary.m},
        )
    return np.stack([gram_quadratic_forms(g, vectors) for g in dictionary.grams], axis=1)


def weighted_sum(dictionary: KernelDictionary, mu: np.ndarray, name: str = "combined") -> GramMatrix:
    """Entrywise sum mu_k K_k in dictionary order, with no constraint check."""
    mu = np.asarray(mu, dtype=np.float64)
    if mu.shape != (dictionary.p,):
        raise InputError(f"Expected {dictionary.p} weights, got {mu.size}", {"p": dictionary.p, "got": mu.size})
    total = np.zeros((dictionary.m, dictionary.m))
    for weight, g in zip(mu, dictionary.grams):
        total = total + weight * g.entries
    return GramMatrix(total, name)


def combine(dictionary: KernelDictionary, mu: CombinationWeights) -> GramMatrix:
    if mu.p != dictionary.p:
        raise InputError(f"Expected {dictionary.p} weights, got {mu.p}", {"p": dictionary.p, "got": mu.p})
    mu.require_feasible()
    return weighted_sum(dictionary, mu.as_array(), name=f"combined[{mu.tag.value}]")


def dictionary_hash(dictionary: KernelDictionary) -> str:
    digest = hashlib.sha256()
    digest.update(f"{dictionary.m}:{dictionary.p}:{dictionary.kernel_ceiling_r2!r}".encode())
    for g in dictionary.grams:
        digest.update(g.name.encode())
        digest.update(np.ascontiguousarray(g.entries, dtype="<f8").tobytes())
    return digest.hexdigest()
