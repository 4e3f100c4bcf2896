import csv
import json
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .domain import KernelSpec, Sample
from .errors import DataError, InputError, ParameterError
from .kernels import GramMatrix, KernelDictionary, compute_gram
from .learner import sample_hash
from .logger import logger

log = logger.create("kernbound", __file__)

LABEL_MODES = ("auto", "last", "none")


def _parse_float(token: str, path: str, line_number: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise DataError(f"{path}:{line_number}: not a number: '{token}'", {"line": line_number}) from None
    if not np.isfinite(value):
        raise DataError(f"{path}:{line_number}: non-finite value '{token}'", {"line": line_number})
    return value


def _is_label_column(values: Sequence[float]) -> bool:
    return len(values) > 0 and all(v in (-1.0, 1.0) for v in values)


def read_lines(path: str) -> List[str]:
    """Decode a data file line by line so that encoding errors carry their line number."""
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        log.error("Cannot read data file", {"path": path, "error": str(e)})
        raise DataError(f"Cannot read data file {path}: {e.strerror or e}", {"path": path}) from e
    lines: List[str] = []
    for line_number, chunk in enumerate(raw.splitlines(keepends=True), start=1):
        try:
            lines.append(chunk.decode("utf-8"))
        except UnicodeDecodeError:
            raise DataError(f"{path}:{line_number}: not valid UTF-8", {"path": path, "line": line_number}) from None
    return lines


def load_csv(path: str, header: bool = False, label_column: str = "auto") -> Sample:
    if label_column not in LABEL_MODES:
        raise ParameterError(f"label_column must be one of {LABEL_MODES}", {"label_column": label_column})
    log.debug("Loading CSV sample", {"path": path, "header": header, "label_column": label_column})

    rows: List[List[float]] = []
    width: Optional[int] = None
    for line_number, record in enumerate(csv.reader(read_lines(path)), start=1):
        if header and line_number == 1:
            continue
        if not record or all(not cell.strip() for cell in record) or record[0].lstrip().startswith("#"):
            continue
        values = [_parse_float(cell.strip(), path, line_number) for cell in record]
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise DataError(
                f"{path}:{line_number}: expected {width} columns, found {len(values)}",
                {"line": line_number, "expected": width, "found": len(values)},
            )
        rows.append(values)

    if not rows:
        raise DataError(f"{path}: no data rows")

    table = np.asarray(rows, dtype=np.float64)
    use_labels = label_column == "last" or (
        label_column == "auto" and table.shape[1] >= 2 and _is_label_column(table[:, -1])
    )
    if use_labels:
        if table.shape[1] < 2:
            raise DataError(f"{path}: a label column needs at least one feature column")
        if not _is_label_column(table[:, -1]):
            raise DataError(f"{path}: last column is not a +/-1 label column")
        sample = Sample.from_arrays(table[:, :-1], table[:, -1].astype(int))
    else:
        sample = Sample.from_arrays(table)
    log.info("Loaded CSV sample", {"path": path, "m": sample.m, "d": sample.d, "labels": sample.has_labels})
    return sample


def load_sparse(path: str) -> Sample:
    """Lines of ``label idx:val idx:val ...`` with 1-based indices; absent indices are 0."""
    log.debug("Loading sparse sample", {"path": path})
    labels: List[int] = []
    entries: List[Dict[int, float]] = []
    dimension = 0
    for line_number, line in enumerate(read_lines(path), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        label = _parse_float(tokens[0], path, line_number)
        if label not in (-1.0, 1.0):
            raise DataError(f"{path}:{line_number}: label must be -1 or +1, got '{tokens[0]}'", {"line": line_number})
        row: Dict[int, float] = {}
        for token in tokens[1:]:
            if ":" not in token:
                raise DataError(f"{path}:{line_number}: expected idx:val, got '{token}'", {"line": line_number})
            idx_text, value_text = token.split(":", 1)
            try:
                idx = int(idx_text)
            except ValueError:
                raise DataError(f"{path}:{line_number}: bad index '{idx_text}'", {"line": line_number}) from None
            if idx < 1:
                raise DataError(f"{path}:{line_number}: indices are 1-based, got {idx}", {"line": line_number})
            row[idx - 1] = _parse_float(value_text, path, line_number)
            dimension = max(dimension, idx)
        labels.append(int(label))
        entries.append(row)

    if not entries:
        raise DataError(f"{path}: no data rows")
    x = np.zeros((len(entries), max(dimension, 1)))
    for i, row in enumerate(entries):
        for j, value in row.items():
            x[i, j] = value
    sample = Sample.from_arrays(x, np.asarray(labels))
    log.info("Loaded sparse sample", {"path": path, "m": sample.m, "d": sample.d})
    return sample


def load_sample(path: str, data_format: str = "csv", header: bool = False, label_column: str = "auto") -> Sample:
    if not Path(path).exists():
        raise DataError(f"Data file not found: {path}", {"path": path})
    if data_format == "csv":
        return load_csv(path, header=header, label_column=label_column)
    if data_format == "sparse":
        return load_sparse(path)
    raise ParameterError(f"Unknown data format: {data_format}", {"format": data_format})


def write_gram_cache(
    gram: GramMatrix,
    spec: KernelSpec,
    directory: str,
    sample: Optional[Sample] = None,
) -> Tuple[Path, Path]:
    """Write ``<name>.json`` metadata and ``<name>.f64`` raw little-endian row-major entries.

    With a sample the metadata also records its hash, which ``cached_gram_source`` requires.
    """
    target = Path(directory)
    target.mkdir(parents=True, exist_ok=True)
    meta_path = target / f"{spec.name}.json"
    raw_path = target / f"{spec.name}.f64"
    meta = {
        "m": gram.m,
        "kernel": spec.name,
        "spec": spec.parameters(),
        "trace": gram.trace,
        "dtype": "<f8",
        "order": "C",
        "data": raw_path.name,
    }
    if sample is not None:
        meta["sample_hash"] = sample_hash(sample)
    np.ascontiguousarray(gram.entries, dtype="<f8").tofile(raw_path)
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    log.info("Wrote Gram cache", {"kernel": spec.name, "meta": str(meta_path), "m": gram.m})
    return meta_path, raw_path


def read_gram_cache(meta_path: str) -> GramMatrix:
    meta_file = Path(meta_path)
    try:
        meta = json.loads(meta_file.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"Cannot read Gram metadata {meta_path}: {e}") from e
    m = int(meta["m"])
    raw = np.fromfile(meta_file.parent / meta["data"], dtype="<f8")
    if raw.size != m * m:
        raise DataError(
            f"Gram cache {meta['data']} holds {raw.size} values, expected {m * m}",
            {"expected": m * m, "found": int(raw.size)},
        )
    gram = GramMatrix(raw.reshape(m, m).astype(np.float64), meta["kernel"])
    if gram.trace != float(meta["trace"]):
        raise DataError(f"Gram cache trace mismatch for '{meta['kernel']}'", {"kernel": meta["kernel"]})
    return gram


def cached_gram_source(directory: str) -> Callable[[Sample, KernelSpec], GramMatrix]:
    """Gram lookup for ``build_dictionary``: reuse ``<name>.json`` when its spec and sample hash match."""
    cache = Path(directory)

    def source(sample: Sample, spec: KernelSpec) -> GramMatrix:
        meta_path = cache / f"{spec.name}.json"
        if meta_path.is_file():
            try:
                meta = json.loads(meta_path.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as e:
                raise DataError(f"Cannot read Gram metadata {meta_path}: {e}") from e
            if meta.get("spec") == spec.parameters() and meta.get("sample_hash") == sample_hash(sample):
                log.debug("Gram cache hit", {"kernel": spec.name, "meta": str(meta_path)})
                return read_gram_cache(str(meta_path))
            log.info("Gram cache is stale, recomputing", {"kernel": spec.name, "meta": str(meta_path)})
        return compute_gram(sample, spec)

    return source


def make_two_blobs(m: int, seed: int, separation: float = 3.0, d: int = 2, scale: float = 1.0) -> Sample:
    """Two isotropic Gaussian blobs centred at +/- separation/2 along the first axis, balanced labels."""
    if m < 2:
        raise ParameterError("Two blobs need at least two points", {"m": m})
    rng = np.random.default_rng(seed)
    labels = np.where(np.arange(m) % 2 == 0, 1, -1)
    rng.shuffle(labels)
    centers = np.zeros((m, d))
    centers[:, 0] = labels * separation / 2.0
    x = centers + scale * rng.standard_normal((m, d))
    return Sample.from_arrays(x, labels)


def random_specs(rng: np.random.Generator, p: int) -> List[KernelSpec]:
    specs: List[KernelSpec] = []
    for k in range(p):
        choice = int(rng.integers(0, 3))
        if choice == 0:
            specs.append(KernelSpec.linear(name=f"k{k}_linear"))
        elif choice == 1:
            specs.append(KernelSpec.polynomial(int(rng.integers(1, 4)), float(rng.uniform(0.0, 2.0)), name=f"k{k}_poly"))
        else:
            specs.append(KernelSpec.gaussian(float(10.0 ** rng.uniform(-1.5, 1.0)), name=f"k{k}_gauss"))
    return specs


def random_dictionary(rng: np.random.Generator, m: int, p: int, d: int = 3) -> KernelDictionary:
    """Mixed linear/polynomial/gaussian dictionary on random points; ceiling read from the sample."""
    if m < 1 or p < 1:
        raise InputError("random_dictionary needs m >= 1 and p >= 1", {"m": m, "p": p})
    sample = Sample.from_arrays(rng.uniform(-1.0, 1.0, size=(m, d)))
    specs = random_specs(rng, p)
    grams = [compute_gram(sample, spec) for spec in specs]
    ceiling = float(max(np.max(g.diagonal) for g in grams))
    return KernelDictionary(tuple(grams), ceiling, tuple(specs))
