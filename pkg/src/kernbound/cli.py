import functools
import sys
from typing import Any, Callable, Dict, Optional, Tuple

import click
from dotenv import load_dotenv

from .config import load_config
from .errors import KernboundError
from .logger import logger, set_log_level
from .reports import TOOL_VERSION
from .sdk import KernboundSDK

log = logger.create("kernbound", __file__)


def _rho(value: Optional[str]) -> Any:
    if value is None or value == "max":
        return value
    try:
        return float(value)
    except ValueError:
        raise click.BadParameter(f"expected a positive number or 'max', got '{value}'") from None


def common_options(func: Callable) -> Callable:
    @click.option("--config", "config_paths", multiple=True, type=click.Path(dir_okay=False), help="YAML config file (repeatable, later files win)")
    @click.option("--rho", default=None, help="Margin rho (certify also accepts 'max')")
    @click.option("--delta", type=float, default=None, help="Confidence parameter delta")
    @click.option("--family", type=click.Choice(["l1", "l2", "l2signed"], case_sensitive=False), default=None)
    @click.option("--trials", type=int, default=None, help="Monte Carlo trials")
    @click.option("--seed", type=int, default=None, help="Seed for Monte Carlo signs and verification sweeps")
    @click.option("--threads", type=int, default=None, help="Worker cap, 0 = auto; results do not depend on it")
    @click.option("--out", default=None, help="Output directory, or file name whose stem gets the content hash")
    @click.option("--log-level", type=click.Choice(["error", "warn", "info", "debug", "trace"]), default=None)
    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        return func(*args, **kwargs)

    return wrapper


def overrides_from(options: Dict[str, Any], extra: Dict[str, Any]) -> Dict[str, Any]:
    mapping = {
        "margin.rho": _rho(options.get("rho")),
        "margin.delta": options.get("delta"),
        "family": options.get("family"),
        "estimate.trials": options.get("trials"),
        "estimate.seed": options.get("seed"),
        "threads": options.get("threads"),
        "output.path": options.get("out"),
        **extra,
    }
    return {key: value for key, value in mapping.items() if value is not None and value != ()}


def execute(command: str, options: Dict[str, Any], extra: Optional[Dict[str, Any]] = None) -> None:
    if options.get("log_level"):
        set_log_level(options["log_level"])
    overrides = overrides_from(options, extra or {})
    log.debug("CLI invocation", {"command": command, "overrides": overrides})
    try:
        config = load_config(options.get("config_paths") or (), overrides)
    except KernboundError as e:
        click.echo(f"Error: {e.message}", err=True)
        sys.exit(e.exit_code)

    result = KernboundSDK(config).run(command)
    if result.data is not None:
        click.echo(result.data.to_json())
        for artifact in result.artifacts:
            click.echo(f"wrote {artifact}", err=True)
    if result.error is not None:
        click.echo(f"Error: [{result.error.code}] {result.error.message}", err=True)
    sys.exit(result.exit_code)


@click.group()
@click.version_option(version=TOOL_VERSION, prog_name="kernbound")
def cli() -> None:
    """Rademacher complexity bounds and certificates for learned kernel combinations."""
    load_dotenv(".env", override=False)


@cli.command()
@common_options
@click.option("--cache-dir", default=None, help="Directory for Gram cache files")
def gram(cache_dir: Optional[str], **options: Any) -> None:
    """Compute, validate and cache the base-kernel Gram matrices."""
    execute("gram", options, {"gram.cache_dir": cache_dir})


@cli.command()
@common_options
@click.option("--form", type=click.Choice(["trace", "ceiling", "evenROptimized", "comparatorSB"]), default=None)
@click.option("--r", "order", type=int, default=None, help="Even order r for the trace bound")
def bound(form: Optional[str], order: Optional[int], **options: Any) -> None:
    """Evaluate one closed-form bound on the configured dictionary."""
    execute("bound", options, {"bound.form": form, "bound.r": order})


@cli.command()
@common_options
@click.option("--method", type=click.Choice(["mc", "exact"]), default=None)
@click.option("--exact-cap", type=int, default=None, help="Largest m for exact enumeration")
def estimate(method: Optional[str], exact_cap: Optional[int], **options: Any) -> None:
    """Estimate the empirical Rademacher complexity."""
    execute("estimate", options, {"estimate.method": method, "estimate.exact_cap": exact_cap})


@cli.command()
@common_options
def verify(**options: Any) -> None:
    """Run the proof-inequality and bound-domination sweeps; exit 1 on any failure."""
    execute("verify", options)


@cli.command()
@common_options
@click.option("--model", "model_path", default=None, help="Where to write the trained model")
@click.option("--query", "query_path", default=None, help="Held-out file to score")
def train(model_path: Optional[str], query_path: Optional[str], **options: Any) -> None:
    """Train a kernel-combination classifier."""
    execute("train", options, {"model.path": model_path, "query.path": query_path})


@cli.command()
@common_options
@click.option("--model", "model_path", default=None, help="Trained model to certify (trains one when omitted)")
@click.option("--bound", "bound_choice", type=click.Choice(["trace", "ceiling", "exact", "mc"]), default=None)
@click.option("--r", "order", type=int, default=None, help="Even order r when --bound trace")
def certify(model_path: Optional[str], bound_choice: Optional[str], order: Optional[int], **options: Any) -> None:
    """Assemble the margin-based generalization certificate."""
    execute("certify", options, {"model.path": model_path, "certify.bound": bound_choice, "certify.r": order})


@cli.command()
@common_options
@click.option("--p", "p_values", type=int, multiple=True, help="Dictionary size (repeatable)")
@click.option("--m", "m", type=int, default=None, help="Sample size for a data-free sweep")
@click.option("--r2", type=float, default=None, help="Kernel ceiling R^2 for a data-free sweep")
def sweep(p_values: Tuple[int, ...], m: Optional[int], r2: Optional[float], **options: Any) -> None:
    """Tabulate the closed forms over p (JSON to stdout, CSV next to --out)."""
    execute("sweep", options, {"sweep.p_values": list(p_values) or None, "sweep.m": m, "sweep.r2": r2})


if __name__ == "__main__":
    cli()
