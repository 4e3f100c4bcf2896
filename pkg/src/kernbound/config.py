"""
Run configuration.

Layers, lowest precedence first:

    built-in defaults
    YAML config files, in the order given
    KERNBOUND_* environment variables (and .env), e.g. KERNBOUND_ESTIMATE__TRIALS=500
    CLI flags

Files may use flat dotted keys (``estimate.trials: 500``) or nested mappings.
"""

import copy
import re
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Union

import yaml
from deepmerge import Merger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .domain import KernelSpec
from .errors import ConfigError
from .logger import logger
from .options import DEFAULT_EXACT_CAP, HARD_EXACT_CAP, BoundChoice, BoundForm, CeilingPolicy, EstimateMethod, Family, TrainOptions

log = logger.create("kernbound", __file__)

merger = Merger(
    [(dict, ["merge"]), (list, ["override"]), (set, ["override"])],
    ["override"],
    ["override"],
)

DEFAULT_P_VALUES = [1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048, 4096, 8192]


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class DataSection(_Section):
    path: Optional[str] = None
    format: Literal["csv", "sparse"] = "csv"
    header: bool = False
    label_column: Literal["auto", "last", "none"] = "auto"


class KernelsSection(_Section):
    specs: List[KernelSpec] = []
    ceiling: Optional[float] = Field(default=None, gt=0)

    def ceiling_policy(self) -> CeilingPolicy:
        return CeilingPolicy.from_sample() if self.ceiling is None else CeilingPolicy.user(self.ceiling)


class MarginSection(_Section):
    rho: Union[Literal["max"], float] = 1.0
    delta: float = Field(default=0.05, gt=0, lt=1)

    @field_validator("rho")
    @classmethod
    def _positive(cls, rho: Any) -> Any:
        if rho != "max" and not rho > 0:
            raise ValueError("rho must be positive or 'max'")
        return rho


class BoundSection(_Section):
    r: Optional[int] = None
    form: BoundForm = BoundForm.CEILING


class EstimateSection(_Section):
    trials: int = Field(default=20000, ge=1)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    exact_cap: int = Field(default=DEFAULT_EXACT_CAP, ge=1, le=HARD_EXACT_CAP)
    method: Literal["mc", "exact"] = "mc"

    @property
    def estimate_method(self) -> EstimateMethod:
        return EstimateMethod.EXACT if self.method == "exact" else EstimateMethod.MONTE_CARLO


class SweepSection(_Section):
    p_values: List[int] = Field(default_factory=lambda: list(DEFAULT_P_VALUES))
    m: Optional[int] = Field(default=None, ge=1)
    r2: Optional[float] = Field(default=None, gt=0)

    @field_validator("p_values")
    @classmethod
    def _positive(cls, values: List[int]) -> List[int]:
        if not values or any(p < 1 for p in values):
            raise ValueError("p_values must be a non-empty list of integers >= 1")
        return values


class CertifySection(_Section):
    bound: str = "ceiling"
    r: Optional[int] = None

    @field_validator("bound")
    @classmethod
    def _known(cls, bound: str) -> str:
        return BoundChoice.parse(bound).value


class TrainSection(_Section):
    reg_c: float = Field(default=1.0, gt=0)
    max_outer: int = Field(default=50, ge=1)
    tol: float = Field(default=1e-6, gt=0)
    inner_iter: int = Field(default=2000, ge=1)

    def options(self) -> TrainOptions:
        return TrainOptions(reg_c=self.reg_c, max_outer=self.max_outer, tol=self.tol, inner_iter=self.inner_iter)


class PathSection(_Section):
    path: Optional[str] = None


class GramSection(_Section):
    cache_dir: str = ".kernbound-cache"
    reuse: bool = False


class RunConfig(_Section):
    data: DataSection = DataSection()
    kernels: KernelsSection = KernelsSection()
    margin: MarginSection = MarginSection()
    family: Family = Family.L1
    bound: BoundSection = BoundSection()
    estimate: EstimateSection = EstimateSection()
    sweep: SweepSection = SweepSection()
    certify: CertifySection = CertifySection()
    train: TrainSection = TrainSection()
    model: PathSection = PathSection()
    query: PathSection = PathSection()
    output: PathSection = PathSection()
    gram: GramSection = GramSection()
    threads: int = Field(default=0, ge=0)

    @field_validator("family", mode="before")
    @classmethod
    def _parse_family(cls, value: Any) -> Family:
        return Family.parse(value)

    def echo(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


class EnvOverrides(BaseSettings):
    """KERNBOUND_<SECTION>__<KEY> variables; values are validated with the rest of the config."""
    model_config = SettingsConfigDict(
        env_prefix="KERNBOUND_",
        env_nested_delimiter="__",
        env_file=".env",
        extra="ignore",
    )

    data: Optional[Dict[str, Any]] = None
    kernels: Optional[Dict[str, Any]] = None
    margin: Optional[Dict[str, Any]] = None
    family: Optional[str] = None
    bound: Optional[Dict[str, Any]] = None
    estimate: Optional[Dict[str, Any]] = None
    sweep: Optional[Dict[str, Any]] = None
    certify: Optional[Dict[str, Any]] = None
    train: Optional[Dict[str, Any]] = None
    model: Optional[Dict[str, Any]] = None
    query: Optional[Dict[str, Any]] = None
    output: Optional[Dict[str, Any]] = None
    gram: Optional[Dict[str, Any]] = None
    threads: Optional[int] = None

    def as_layer(self) -> Dict[str, Any]:
        return {k: v for k, v in self.model_dump().items() if v is not None}


def expand_dotted(mapping: Dict[str, Any]) -> Dict[str, Any]:
    """Turn ``{"a.b": 1}`` into ``{"a": {"b": 1}}``; a bare ``kernels`` list becomes ``kernels.specs``."""
    expanded: Dict[str, Any] = {}
    for key, value in mapping.items():
        parts = str(key).split(".")
        if isinstance(value, dict):
            value = expand_dotted(value)
        if parts == ["kernels"] and isinstance(value, list):
            value = {"specs": value}
        node: Dict[str, Any] = {}
        cursor = node
        for part in parts[:-1]:
            cursor[part] = {}
            cursor = cursor[part]
        cursor[parts[-1]] = value
        merger.merge(expanded, node)
    return expanded


def locate_line(text: str, dotted: str) -> Optional[int]:
    """1-based line of ``dotted`` in YAML text, as a flat key or a nested path."""
    lines = text.splitlines()
    flat = re.compile(rf"^\s*['\"]?{re.escape(dotted)}['\"]?\s*:")
    for number, line in enumerate(lines, start=1):
        if flat.match(line):
            return number

    found: Optional[int] = None
    start = 0
    for part in dotted.split("."):
        pattern = re.compile(rf"^\s*-?\s*['\"]?{re.escape(part)}['\"]?\s*:")
        for index in range(start, len(lines)):
            if pattern.match(lines[index]):
                found, start = index + 1, index + 1
                break
        else:
            return found
    return found


def read_layer(path: str) -> Dict[str, Any]:
    file_path = Path(path)
    if not file_path.exists():
        raise ConfigError(f"Config file not found: {path}", context={"path": path})
    text = file_path.read_text(encoding="utf-8")
    try:
        content = yaml.safe_load(text) or {}
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        problem = getattr(e, "problem", None) or str(e)
        raise ConfigError(f"{path}: invalid YAML: {problem}", line, {"path": path}) from e
    if not isinstance(content, dict):
        raise ConfigError(f"{path}: top level must be a mapping", 1, {"path": path})
    log.debug("Loaded config file", {"path": path, "keys": sorted(str(k) for k in content)})
    return expand_dotted(content)


def _dotted(loc: Sequence[Any]) -> str:
    dotted = ".".join(str(part) for part in loc if not isinstance(part, int))
    # specs are written as a bare ``kernels:`` list
    return re.sub(r"^kernels\.specs", "kernels", dotted)


def _locate(paths: Sequence[str], dotted: str) -> Optional[int]:
    for path in reversed(list(paths)):
        line = locate_line(Path(path).read_text(encoding="utf-8"), dotted) if dotted else None
        if line is not None:
            return line
    return None


def _resolve_paths(config: RunConfig, paths: Sequence[str]) -> None:
    for section in ("data", "query"):
        target = getattr(config, section).path
        if target is not None and not Path(target).exists():
            key = f"{section}.path"
            raise ConfigError(f"{key}: file not found: {target}", _locate(paths, key), {"key": key, "path": target})


def load_config(
    paths: Sequence[str] = (),
    overrides: Optional[Dict[str, Any]] = None,
    use_env: bool = True,
    check_paths: bool = True,
) -> RunConfig:
    merged: Dict[str, Any] = {}
    for path in paths:
        merger.merge(merged, read_layer(path))
    if use_env:
        try:
            merger.merge(merged, expand_dotted(EnvOverrides().as_layer()))
        except ValidationError as e:
            raise ConfigError(f"invalid KERNBOUND_* environment value: {e.errors()[0]['msg']}") from e
    if overrides:
        merger.merge(merged, expand_dotted(copy.deepcopy(overrides)))

    try:
        config = RunConfig.model_validate(merged)
    except ValidationError as e:
        first = e.errors()[0]
        dotted = _dotted(first["loc"])
        raise ConfigError(
            f"{dotted or 'config'}: {first['msg']}",
            _locate(paths, dotted),
            {"key": dotted, "errors": len(e.errors())},
        ) from e
    if check_paths:
        _resolve_paths(config, paths)
    log.debug("Configuration resolved", {"files": list(paths), "family": config.family.value})
    return config
