"""
Command orchestration behind the CLI.

Every command returns an ``SDKResult``: on success ``data`` holds the
``Report`` (plus any written artifact paths); on failure ``error`` carries the
error code, message and context, and ``exit_code`` the process exit status.
"""

import math
from typing import Any, Callable, Dict, Generic, List, Optional, TypeVar

from pydantic import BaseModel, ConfigDict

from .bounds import bound_for, sweep_bounds, sweep_closed_forms
from .certify import certify
from .config import RunConfig
from .datasets import cached_gram_source, load_sample, write_gram_cache
from .domain import HypothesisFamily, MarginConfig, Sample
from .errors import ConfigError, ExitCode, KernboundError
from .kernels import KernelDictionary, build_dictionary, dictionary_hash, validate_psd
from .learner import Model, admissible_rho, classification_error, load_model, margin_loss, predict_samples, predict_train, save_model, train
from .logger import logger
from .options import BoundChoice
from .rademacher import estimate_many
from .reports import Report, rows_payload, write_csv, write_report
from .verify import run_verification

T = TypeVar("T")

COMMANDS = ("gram", "bound", "estimate", "verify", "train", "certify", "sweep")


class SDKError(BaseModel):
    code: str
    message: str
    details: Optional[Dict[str, Any]] = None


class SDKResult(BaseModel, Generic[T]):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    success: bool
    data: Optional[T] = None
    error: Optional[SDKError] = None
    exit_code: int = ExitCode.SUCCESS
    artifacts: List[str] = []


class KernboundSDK:
    def __init__(self, config: RunConfig):
        self.config = config
        self.logger = logger.create("kernbound", "sdk.py")
        self._sample: Optional[Sample] = None
        self._dictionary: Optional[KernelDictionary] = None

    def _success(self, report: Report, artifacts: Optional[List[str]] = None, exit_code: int = ExitCode.SUCCESS) -> SDKResult[Report]:
        return SDKResult(success=exit_code == ExitCode.SUCCESS, data=report, exit_code=exit_code, artifacts=artifacts or [])

    def _failure(self, error: KernboundError) -> SDKResult[Report]:
        self.logger.error(f"Command failed: [{error.code}] {error.message}", error.context)
        return SDKResult(
            success=False,
            error=SDKError(code=error.code, message=error.message, details=error.context or None),
            exit_code=error.exit_code,
        )

    # inputs

    def sample(self, command: str) -> Sample:
        if self._sample is None:
            data = self.config.data
            if data.path is None:
                raise ConfigError(f"data.path is required for '{command}'", context={"key": "data.path"})
            self._sample = load_sample(data.path, data.format, data.header, data.label_column)
        return self._sample

    def dictionary(self, command: str) -> KernelDictionary:
        if self._dictionary is None:
            kernels = self.config.kernels
            if not kernels.specs:
                raise ConfigError(f"kernels must list at least one kernel for '{command}'", context={"key": "kernels"})
            gram = self.config.gram
            source = cached_gram_source(gram.cache_dir) if gram.reuse else None
            self._dictionary = build_dictionary(self.sample(command), kernels.specs, kernels.ceiling_policy(), source)
        return self._dictionary

    def _rho(self, command: str) -> float:
        rho = self.config.margin.rho
        if rho == "max":
            raise ConfigError(f"margin.rho: 'max' is only meaningful for certify, not '{command}'", context={"key": "margin.rho"})
        return float(rho)

    def _report(self, command: str, result: Any, seed: Optional[int] = None) -> Report:
        return Report(command=command, config=self.config.echo(), seed=seed, result=result)

    def _emit(self, report: Report, exit_code: int = ExitCode.SUCCESS, extra: Optional[List[str]] = None) -> SDKResult[Report]:
        artifacts = list(extra or [])
        if self.config.output.path is not None:
            artifacts.insert(0, str(write_report(report, self.config.output.path)))
        return self._success(report, artifacts, exit_code)

    # commands

    def gram(self) -> SDKResult[Report]:
        dictionary = self.dictionary("gram")
        cache_dir = self.config.gram.cache_dir
        kernels, artifacts = [], []
        for gram, spec in zip(dictionary.grams, dictionary.specs):
            meta_path, raw_path = write_gram_cache(gram, spec, cache_dir, self.sample("gram"))
            artifacts.extend([str(meta_path), str(raw_path)])
            kernels.append({
                "name": spec.name,
                "spec": spec.parameters(),
                "trace": gram.trace,
                "psd": validate_psd(gram).model_dump(by_alias=True),
                "meta": meta_path.name,
            })
        result = {
            "m": dictionary.m,
            "p": dictionary.p,
            "r2": dictionary.kernel_ceiling_r2,
            "dictionary_hash": dictionary_hash(dictionary),
            "kernels": kernels,
        }
        return self._emit(self._report("gram", result), extra=artifacts)

    def bound(self) -> SDKResult[Report]:
        dictionary = self.dictionary("bound")
        cfg = self.config
        report = bound_for(dictionary, self._rho("bound"), cfg.family, cfg.bound.form, cfg.bound.r)
        return self._emit(self._report("bound", report))

    def estimate(self) -> SDKResult[Report]:
        dictionary = self.dictionary("estimate")
        cfg = self.config.estimate
        family = HypothesisFamily(tag=self.config.family, rho=self._rho("estimate"))
        (estimate,) = estimate_many(
            dictionary,
            [family],
            cfg.estimate_method,
            n_trials=cfg.trials,
            seed=cfg.seed,
            threads=self.config.threads,
            exact_cap=cfg.exact_cap,
        )
        seed = cfg.seed if cfg.method == "mc" else None
        return self._emit(self._report("estimate", estimate, seed))

    def verify(self) -> SDKResult[Report]:
        seed = self.config.estimate.seed
        outcome = run_verification(seed=seed, threads=self.config.threads)
        exit_code = ExitCode.SUCCESS if outcome.all_passed else ExitCode.VERIFICATION_FAILED
        return self._emit(self._report("verify", outcome, seed), exit_code)

    def _train(self) -> Model:
        return train(self.sample("train"), self.dictionary("train"), self.config.family, self.config.train.options())

    def train(self) -> SDKResult[Report]:
        model_path = self.config.model.path
        if model_path is None:
            raise ConfigError("model.path is required for 'train'", context={"key": "model.path"})
        model = self._train()
        sample, dictionary = self.sample("train"), self.dictionary("train")
        saved = save_model(model, model_path)

        scores = predict_train(model, dictionary)
        rho_max = admissible_rho(model, dictionary)
        result: Dict[str, Any] = {
            "model_path": str(saved),
            "family": model.family.value,
            "mu": model.mu,
            "converged": model.converged,
            "iterations": model.iterations,
            "objective": model.trainer_log[-1],
            "training_error": classification_error(scores, sample.y),
            "rho_max": rho_max,
            "margin_loss_at_rho_max": margin_loss(scores, sample.y, rho_max) if math.isfinite(rho_max) else None,
        }
        if self.config.query.path is not None:
            data = self.config.data
            query = load_sample(self.config.query.path, data.format, data.header, data.label_column)
            query_scores = predict_samples(model, sample, query)
            result["query_points"] = query.m
            if query.y is not None:
                result["test_error"] = classification_error(query_scores, query.y)
        return self._emit(self._report("train", result), extra=[str(saved)])

    def certify(self) -> SDKResult[Report]:
        sample, dictionary = self.sample("certify"), self.dictionary("certify")
        model_path = self.config.model.path
        model = load_model(model_path) if model_path is not None else self._train()
        if model.family is not self.config.family:
            self.logger.warn("Model family differs from the configured family; using the model's", {
                "model": model.family.value, "config": self.config.family.value,
            })

        rho = self.config.margin.rho
        if rho == "max":
            rho = admissible_rho(model, dictionary)
            if not math.isfinite(rho):
                raise ConfigError("margin.rho: 'max' is unbounded for the zero hypothesis", context={"key": "margin.rho"})
        cfg = self.config
        choice = BoundChoice.parse(cfg.certify.bound)
        certificate = certify(
            model,
            sample,
            dictionary,
            MarginConfig(rho=rho, delta=cfg.margin.delta),
            choice,
            r=cfg.certify.r,
            n_trials=cfg.estimate.trials,
            seed=cfg.estimate.seed,
            exact_cap=cfg.estimate.exact_cap,
            threads=cfg.threads,
        )
        seed = cfg.estimate.seed if choice is BoundChoice.EMPIRICAL_MC else None
        return self._emit(self._report("certify", certificate, seed))

    def sweep(self) -> SDKResult[Report]:
        cfg = self.config
        rho = self._rho("sweep")
        if cfg.sweep.m is not None and cfg.sweep.r2 is not None:
            rows = sweep_closed_forms(cfg.sweep.m, cfg.sweep.r2, rho, cfg.sweep.p_values)
        else:
            rows = sweep_bounds(self.dictionary("sweep"), rho, cfg.sweep.p_values)
        report = self._report("sweep", {"rows": rows_payload(rows)})
        extra = [str(write_csv(rows, report, cfg.output.path))] if cfg.output.path is not None else []
        return self._emit(report, extra=extra)

    def run(self, command: str) -> SDKResult[Report]:
        handlers: Dict[str, Callable[[], SDKResult[Report]]] = {
            "gram": self.gram,
            "bound": self.bound,
            "estimate": self.estimate,
            "verify": self.verify,
            "train": self.train,
            "certify": self.certify,
            "sweep": self.sweep,
        }
        if command not in handlers:
            return self._failure(ConfigError(f"Unknown command: {command}", context={"commands": list(COMMANDS)}))
        self.logger.info("Running command", {"command": command, "family": self.config.family.value})
        try:
            return handlers[command]()
        except KernboundError as e:
            return self._failure(e)


def run(command: str, config: RunConfig) -> SDKResult[Report]:
    return KernboundSDK(config).run(command)
