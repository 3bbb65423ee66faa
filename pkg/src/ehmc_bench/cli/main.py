import logging
import tomllib
from pathlib import Path

import click
import numpy as np

from ..analytics import (
    build_report,
    chain_report,
    failed_cells,
    format_summary,
    median_curves,
    summarize,
)
from ..core import MassSpec
from ..core.experiment import (
    DEFAULT_P0_GRID,
    KS_REFERENCES,
    MASS_CHOICES,
    BenchmarkRunner,
    ExperimentSpec,
    build_model,
    n_failed,
)
from ..persistence import ResultStore, dump_irt_csv, dump_logistic_csv, dump_sv_csv
from ..samplers import SamplerConfig, SamplerKind, run_sampler
from ..targets import MODEL_BUILDERS, irt_simulate, logistic_simulate, sv_simulate
from ..targets.registry import SV_TRUE_PARAMS
from ..tuning import BatchLearnConfig, learn_batch_distribution, tune_step_size
from ..tuning.uturn import DEFAULT_MAX_BATCH

SAMPLER_CHOICES = [kind.value for kind in SamplerKind]
LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR"]

# Config keys whose parameter has a different name
_ALIASES = {"format": "fmt"}

_store = None


# Lazy loading the ResultStore instance to prevent initializing
# before test fixtures can patch the data directory
def get_store():
    """Get or create the ResultStore instance."""
    global _store
    if _store is None:
        _store = ResultStore()
    return _store


def _config_key(key: str) -> str:
    key = key.strip().lstrip("-").replace("-", "_").lower()
    return _ALIASES.get(key, key)


def _multiple_options(command) -> set:
    """Names of the options of a command that take several values."""
    return {p.name for p in command.params if getattr(p, "multiple", False)}


def _config_values(table: dict, multiple: set, shared: bool = False) -> dict:
    # a scalar for an option that takes several values is wrapped in a list;
    # a shared list only reaches the commands that accept several values
    values = {}
    for key, value in table.items():
        key = _config_key(key)
        if isinstance(value, dict):
            if key != "param":
                continue
            value = [f"{k}={v}" for k, v in value.items()]
        if key in multiple and not isinstance(value, list):
            value = [value]
        elif shared and isinstance(value, list) and key not in multiple:
            continue
        values[key] = value
    return values


def _load_config(ctx, param, value):
    """Loads a TOML file into the default map of every command.

    Top-level keys apply to all commands; a table named after a command
    overrides them for that command. Explicit flags override both.
    """
    if value is None:
        return
    try:
        with open(value, "rb") as fh:
            data = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as e:
        raise click.BadParameter(f"Cannot read config file {value}: {e}")

    default_map = {}
    for name, command in ctx.command.commands.items():
        multiple = _multiple_options(command)
        section = data.get(name, {})
        default_map[name] = {
            **_config_values(data, multiple, shared=True),
            **_config_values(section, multiple),
        }
    ctx.default_map = default_map


def _parse_params(pairs):
    """Turns ('d=20', 'rho=0.9') into {'d': 20, 'rho': 0.9}."""
    params = {}
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        if not sep or not key.strip():
            raise click.BadParameter(f"Expected key=value, got '{pair}'", param_hint="--param")
        raw = raw.strip()
        for cast in (int, float):
            try:
                params[key.strip()] = cast(raw)
                break
            except ValueError:
                continue
        else:
            params[key.strip()] = raw
    return params


def model_options(f):
    """Adds the options that select a model and its data."""
    f = click.option("--seed", type=int, default=0, show_default=True, help="Root seed")(f)
    f = click.option(
        "--param",
        "param",
        multiple=True,
        metavar="KEY=VALUE",
        help="Model parameter, e.g. d=20 or rho=0.99 (repeatable)",
    )(f)
    f = click.option(
        "--data",
        type=click.Path(exists=True, dir_okay=False, path_type=Path),
        help="CSV file with the model's data",
    )(f)
    f = click.option(
        "--model",
        type=click.Choice(list(MODEL_BUILDERS), case_sensitive=False),
        default="mvn",
        show_default=True,
    )(f)
    return f


def _model(model, data, param, seed):
    spec = ExperimentSpec(model=model, model_params=_parse_params(param), data_path=data, seed=seed)
    return build_model(spec)


def _mass(mass_file, dim: int) -> MassSpec:
    if mass_file is None:
        return MassSpec.identity()
    mass = get_store().read_mass(mass_file)
    mass.check_dim(dim)
    return mass


mass_file_option = click.option(
    "--mass-file",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Mass written by 'tune --mass diag' [default: identity]",
)


def _echo_report(report):
    for key, value in report.to_dict().items():
        if isinstance(value, float):
            click.echo(f"  {key:<28} {value:.6g}")
        else:
            click.echo(f"  {key:<28} {value}")


@click.group()
@click.option(
    "--config",
    type=click.Path(exists=True, dir_okay=False),
    callback=_load_config,
    is_eager=True,
    expose_value=False,
    help="TOML file with default option values",
)
@click.option(
    "--log-level",
    type=click.Choice(LOG_LEVELS, case_sensitive=False),
    default="WARNING",
    show_default=True,
)
def main(log_level):
    """eHMC bench - empirical HMC samplers and benchmarks."""
    logging.basicConfig(
        level=getattr(logging, log_level.upper()),
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command()
@model_options
@click.option(
    "--sampler",
    multiple=True,
    type=click.Choice(SAMPLER_CHOICES),
    help="Sampler to benchmark (repeatable) [default: ehmc]",
)
@click.option("--p0", multiple=True, type=float, help="Target acceptance (repeatable)")
@click.option("--warmup", type=int, default=2000, show_default=True)
@click.option("--batch-iters", type=int, default=1000, show_default=True)
@click.option("--iters", type=int, default=10_000, show_default=True)
@click.option("--reps", type=int, default=5, show_default=True)
@click.option("--eta", type=float, default=0.5, show_default=True)
@click.option("--l0", type=int, default=10, show_default=True)
@click.option("--l-fixed", type=int, help="Baseline HMC length [default: batch median]")
@click.option("--max-batch", type=int, default=DEFAULT_MAX_BATCH, show_default=True)
@click.option("--mass", type=click.Choice(MASS_CHOICES), default="identity", show_default=True)
@click.option("--grad-budget", type=int, help="Stop production after this many gradients")
@click.option(
    "--ks-reference", type=click.Choice(KS_REFERENCES), default="analytic", show_default=True
)
@click.option(
    "--dump-chains",
    is_flag=False,
    flag_value="",
    default=None,
    help="Write every chain as CSV into this directory (data directory if empty)",
)
@click.option(
    "--sv-cross-check",
    is_flag=True,
    help="Compare the sv potential with its re-derivation before running",
)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option(
    "--out", type=click.Path(path_type=Path), default="results.csv", show_default=True
)
@click.option(
    "--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True
)
@click.pass_context
def run(
    ctx,
    model,
    data,
    param,
    seed,
    sampler,
    p0,
    warmup,
    batch_iters,
    iters,
    reps,
    eta,
    l0,
    l_fixed,
    max_batch,
    mass,
    grad_budget,
    ks_reference,
    dump_chains,
    sv_cross_check,
    jobs,
    out,
    fmt,
):
    """Runs the benchmark grid and writes one row per cell and sampler."""
    store = get_store()
    try:
        dump_dir = None
        if dump_chains is not None:
            dump_dir = Path(dump_chains) if dump_chains else store.data_dir / "chains"
        spec = ExperimentSpec(
            model=model,
            model_params=_parse_params(param),
            data_path=data,
            samplers=sampler or ("ehmc",),
            p0_grid=p0 or DEFAULT_P0_GRID,
            warmup=warmup,
            batch_iters=batch_iters,
            iters=iters,
            reps=reps,
            seed=seed,
            eta=eta,
            L0=l0,
            L_fixed=l_fixed,
            max_batch=max_batch,
            mass=mass,
            grad_budget=grad_budget,
            ks_reference=ks_reference,
            dump_chains=dump_dir,
            jobs=jobs,
        )
        runner = BenchmarkRunner(store)
        if sv_cross_check:
            deviation = runner.cross_check(spec)
            click.echo(f"✓ SV potential cross-check: max deviation {deviation:.3g}")
        results = runner.run(spec)
        path = store.write_results(results, out, fmt)
    except Exception as e:
        click.echo(f"✗ Error: {str(e)}", err=True)
        ctx.exit(1)

    failed = n_failed(results)
    click.echo(f"✓ Wrote {len(results)} rows to {path}")
    if failed:
        click.echo(f"✗ {failed} of {len(results)} rows failed:", err=True)
        for cell in failed_cells(results):
            click.echo(
                f"  • {cell['sampler']} p0={cell['p0']:.2f} rep={cell['rep']}: {cell['reason']}",
                err=True,
            )
        ctx.exit(1)


@main.command()
@model_options
@click.option("--p0", type=float, default=0.8, show_default=True)
@click.option("--warmup", type=int, default=2000, show_default=True)
@click.option("--l0", type=int, default=10, show_default=True)
@click.option("--mass", type=click.Choice(MASS_CHOICES), default="identity", show_default=True)
@click.option(
    "--mass-out",
    type=click.Path(path_type=Path),
    default="mass.json",
    show_default=True,
    help="Where to write the adapted diagonal mass (with --mass diag)",
)
def tune(model, data, param, seed, p0, warmup, l0, mass, mass_out):
    """Tunes the step size for a target acceptance probability.

    With --mass diag the adapted diagonal is written to --mass-out; pass it
    to 'learn-batches' and 'sample' with --mass-file.
    """
    try:
        target = _model(model, data, param, seed)
        init_seq, tune_seq = np.random.SeedSequence(seed).spawn(2)
        result = tune_step_size(
            target,
            MassSpec.identity(),
            target.initial_point(np.random.default_rng(init_seq)),
            p0,
            warmup,
            l0,
            np.random.default_rng(tune_seq),
            adapt_mass=mass == "diag",
        )
        click.echo(f"✓ eps = {result.eps:.17g}")
        click.echo(f"  mean accept {result.mean_accept:.3f} (target {p0:.2f})")
        click.echo(f"  {target.grad_calls} gradient calls")
        if mass == "diag":
            path = get_store().write_mass(result.mass, mass_out)
            click.echo(f"✓ Wrote the adapted mass to {path}")
    except Exception as e:
        click.echo(f"✗ Error: {str(e)}", err=True)


@main.command("learn-batches")
@model_options
@click.option("--eps", type=float, required=True, help="Step size, e.g. from 'tune'")
@click.option("--batch-iters", type=int, default=1000, show_default=True)
@click.option("--l0", type=int, default=10, show_default=True)
@click.option("--max-batch", type=int, default=DEFAULT_MAX_BATCH, show_default=True)
@click.option(
    "--out", type=click.Path(path_type=Path), default="batches.csv", show_default=True
)
@mass_file_option
def learn_batches(model, data, param, seed, eps, batch_iters, l0, max_batch, out, mass_file):
    """Learns the longest-batch distribution and writes it as CSV."""
    try:
        target = _model(model, data, param, seed)
        init_seq, learn_seq = np.random.SeedSequence(seed).spawn(2)
        dist, _ = learn_batch_distribution(
            target,
            _mass(mass_file, target.dim),
            target.initial_point(np.random.default_rng(init_seq)),
            BatchLearnConfig(eps, l0, batch_iters, max_batch),
            np.random.default_rng(learn_seq),
        )
        path = get_store().write_batches(dist, out)
        click.echo(f"✓ Wrote {dist.size} batch lengths to {path}")
        click.echo(f"  median {dist.median()}, mean {dist.mean():.2f}")
    except Exception as e:
        click.echo(f"✗ Error: {str(e)}", err=True)


@main.command()
@model_options
@click.option("--eps", type=float, required=True, help="Step size, e.g. from 'tune'")
@click.option(
    "--batches",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Batch length CSV from 'learn-batches'",
)
@click.option("--sampler", type=click.Choice(SAMPLER_CHOICES), default="ehmc", show_default=True)
@click.option("--iters", type=int, default=10_000, show_default=True)
@click.option("--eta", type=float, default=0.5, show_default=True)
@click.option("--l-fixed", type=int, help="Baseline HMC length [default: batch median]")
@click.option("--out", type=click.Path(path_type=Path), default="chain.csv", show_default=True)
@mass_file_option
def sample(
    model, data, param, seed, eps, batches, sampler, iters, eta, l_fixed, out, mass_file
):
    """Runs one sampler from a given step size and batch distribution."""
    try:
        target = _model(model, data, param, seed)
        store = get_store()
        dist = store.read_batches(batches) if batches is not None else None
        init_seq, run_seq = np.random.SeedSequence(seed).spawn(2)
        cfg = SamplerConfig(eps=eps, sampler=sampler, iters=iters, L_fixed=l_fixed, eta=eta)
        result = run_sampler(
            target,
            _mass(mass_file, target.dim),
            target.initial_point(np.random.default_rng(init_seq)),
            cfg,
            np.random.default_rng(run_seq),
            dist,
        )
        path = store.write_chain(result.chain, out.stem, out.parent)
        click.echo(f"✓ Wrote {result.n_draws} draws to {path}")
        _echo_report(build_report(result, target, target.marginal_cdfs()))
    except Exception as e:
        click.echo(f"✗ Error: {str(e)}", err=True)


@main.command()
@click.argument("chain", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@model_options
@click.option("--grad-calls", type=int, required=True, help="Gradient calls spent on the chain")
@click.option(
    "--ks-reference", type=click.Choice(["analytic", "none"]), default="analytic", show_default=True
)
def report(chain, model, data, param, seed, grad_calls, ks_reference):
    """Computes efficiency metrics of a stored chain."""
    try:
        target = _model(model, data, param, seed)
        draws = get_store().read_chain(chain)
        reference = target.marginal_cdfs() if ks_reference == "analytic" else None
        result = chain_report(draws, grad_calls, target, reference)
        click.echo(f"\n📈 Report for {chain.name}")
        click.echo("=" * 40)
        _echo_report(result)
    except Exception as e:
        click.echo(f"✗ Error: {str(e)}", err=True)


@main.command("summarize")
@click.argument("results", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", type=click.Path(path_type=Path), help="Write the summary table as CSV")
@click.option(
    "--curves", type=click.Path(path_type=Path), help="Write median curves over p0 as CSV"
)
def summarize_command(results, out, curves):
    """Summarizes a result table: best min-ESS per gradient over p0."""
    try:
        store = get_store()
        frame = store.read_results(results)
        table = summarize(frame)

        click.echo("\n📊 Min ESS per gradient (x 10^-2)")
        click.echo("=" * 60)
        click.echo(format_summary(table))

        if out is not None:
            click.echo(f"\n✓ Wrote summary to {store.write_summary(table, out)}")
        if curves is not None:
            path = store.write_summary(median_curves(frame), curves)
            click.echo(f"✓ Wrote median curves to {path}")

        failed = failed_cells(frame)
        if failed:
            click.echo(f"\n⚠️  {len(failed)} failed rows were left out")
    except Exception as e:
        click.echo(f"✗ Error: {str(e)}", err=True)


@main.command()
@click.argument("kind", type=click.Choice(["sv", "irt", "logistic"]))
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--param", multiple=True, metavar="KEY=VALUE", help="T, n_items, n_persons, ...")
def simulate(kind, out, seed, param):
    """Writes a synthetic data set for the sv, irt or logistic model."""
    try:
        params = _parse_params(param)
        rng = np.random.default_rng(seed)
        if kind == "sv":
            data = sv_simulate(int(params.get("T", 100)), *SV_TRUE_PARAMS, rng)
            path = dump_sv_csv(data, out)
        elif kind == "irt":
            data = irt_simulate(
                int(params.get("n_items", 20)), int(params.get("n_persons", 100)), rng
            )
            path = dump_irt_csv(data, out)
        else:
            data = logistic_simulate(
                int(params.get("n_obs", 200)), int(params.get("n_covariates", 5)), rng
            )
            path = dump_logistic_csv(data, out)
        click.echo(f"✓ Wrote {kind} data to {path}")
    except Exception as e:
        click.echo(f"✗ Error: {str(e)}", err=True)
