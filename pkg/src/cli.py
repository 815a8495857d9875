# Copyright 2026 The mbias-twoplate Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Command-line interface.

Usage: python src/cli.py [--seed N] [--out-dir DIR] [--config FILE] COMMAND [OPTIONS]

Options resolve in the order command-line flags, then the JSON ``--config`` file,
then the settings TOML, then built-in defaults. Commands that write files record
the resolved options in ``<out-dir>/run_config.json``.
"""

import json
import logging
import os
import re
import sys
from typing import Any, Dict, List, Optional, Sequence

import click
import typer
from pydantic import BaseModel, ConfigDict, Field, ValidationError
from rich.console import Console
from rich.markup import escape

from causal import graph
from causal.estimators import estimate_all
from causal.model import ancestral_sample_array, intervene, tabulate
from causal.schemas import PriorSpec, RunConfig
from config import get_config
from datastores import chains as chain_store
from datastores import files
from inference import analysis
from inference.mcmc import Chain, importance_sampler, merge_chains, run_chains
from lib.constants import (
    CHAIN_CSV,
    ESTIMATES_JSON,
    M_GRAPH_PATH,
    ORACLE_JSON,
    RECORDS_CSV,
    RUN_CONFIG_JSON,
    SUMMARY_JSON,
    TABLE1_PATH,
    TABLE_CSV,
)
from lib.errors import ConfigError, InvariantViolation, UndefinedEstimateError
from lib.rng import oracle_rng

logger = logging.getLogger(__name__)

app = typer.Typer(add_completion=False, no_args_is_help=True, help="Bayesian analysis of M-bias.")
console = Console(soft_wrap=True, highlight=False)
err_console = Console(stderr=True, soft_wrap=True, highlight=False)

FULL_SCALE_TOTAL = 200_000_000

# (settings section, settings key) -> CliConfig field
SETTINGS_FIELDS = {
    ("sampler", "seed"): "seed",
    ("sampler", "burn_in"): "burn_in",
    ("sampler", "total"): "total",
    ("sampler", "thin"): "thin",
    ("sampler", "block_size"): "block_size",
    ("sampler", "chains"): "chains",
    ("prior", "K"): "K",
    ("prior", "alpha_concentration"): "alpha_concentration",
    ("prior", "omega_concentration"): "omega_concentration",
    ("prior", "nu_concentration"): "nu_concentration",
    ("prior", "theta_a"): "theta_a",
    ("prior", "theta_b"): "theta_b",
    ("importance", "draws"): "oracle_draws",
    ("output", "out_dir"): "out_dir",
    ("plots", "histogram_bins"): "histogram_bins",
    ("plots", "axis_limit"): "axis_limit",
}


class CliConfig(BaseModel):
    """Fully resolved options of one command invocation."""

    model_config = ConfigDict(extra="forbid")

    command: str = ""
    seed: int = 20190117
    out_dir: str = "mbias-out"
    burn_in: int = Field(default=50_000, ge=0)
    total: int = Field(default=10_000_000, ge=0)
    thin: int = Field(default=50_000, ge=1)
    block_size: int = Field(default=65_536, ge=1)
    chains: int = Field(default=1, ge=1)
    paper_scale: bool = False
    oracle_draws: int = Field(default=1_000_000, ge=0)
    K: int = Field(default=2, ge=2)
    alpha_concentration: float = Field(default=1.0, gt=0.0)
    omega_concentration: float = Field(default=1.0, gt=0.0)
    nu_concentration: float = Field(default=1.0, gt=0.0)
    theta_a: float = Field(default=1.0, gt=0.0)
    theta_b: float = Field(default=1.0, gt=0.0)
    histogram_bins: int = Field(default=80, ge=1)
    axis_limit: float = Field(default=1.0, gt=0.0)
    inputs: Dict[str, Any] = Field(default_factory=dict)

    def run_config(self) -> RunConfig:
        try:
            return RunConfig(
                burn_in=self.burn_in, total=self.total, thin=self.thin, seed=self.seed, block_size=self.block_size
            )
        except ValidationError as e:
            raise ConfigError(_validation_message(e)) from e

    def sampling_config(self) -> RunConfig:
        """The run schedule, rejected when it would keep no draws."""
        config = self.run_config()
        if config.kept == 0:
            raise ConfigError(
                f"The schedule keeps no draws: total {config.total}, burn_in {config.burn_in}, "
                f"thin {config.thin}. Increase total or lower thin."
            )
        return config

    def prior_spec(self) -> PriorSpec:
        return PriorSpec(
            K=self.K,
            alpha_concentration=self.alpha_concentration,
            omega_concentration=self.omega_concentration,
            nu_concentration=self.nu_concentration,
            theta_a=self.theta_a,
            theta_b=self.theta_b,
        )


FILE_FIELDS = frozenset(CliConfig.model_fields) - {"command", "inputs"}


def _validation_message(e: ValidationError) -> str:
    first = e.errors()[0]
    location = ".".join(str(part) for part in first["loc"]) or "config"
    return f"{location}: {first['msg']}"


def resolve_config(
    command: str,
    flags: Dict[str, Any],
    config_path: Optional[str] = None,
    settings: Optional[dict] = None,
    inputs: Optional[Dict[str, Any]] = None,
) -> CliConfig:
    """Merge settings, the JSON config file and command-line flags.

    Flags set to None are treated as not given. ``paper_scale`` replaces the
    total with the settings' ``paper_total`` and cannot be combined with an
    explicit ``--total`` flag.

    Raises:
        ConfigError: For unknown keys, invalid values or conflicting flags.
    """
    settings = get_config() if settings is None else settings
    values: Dict[str, Any] = {}
    for (section, key), name in SETTINGS_FIELDS.items():
        if key in settings.get(section, {}):
            values[name] = settings[section][key]

    if config_path:
        try:
            from_file = files.read_json(config_path)
        except ValueError as e:
            raise ConfigError(str(e)) from e
        if not isinstance(from_file, dict):
            raise ConfigError(f"{config_path}: expected a JSON object.")
        unknown = sorted(set(from_file) - FILE_FIELDS)
        if unknown:
            raise ConfigError(f"{config_path}: unknown option(s) {', '.join(unknown)}.")
        values.update(from_file)

    given = {name: value for name, value in flags.items() if value is not None}
    values.update(given)
    if values.get("paper_scale"):
        if "total" in given:
            raise ConfigError("--paper-scale and --total cannot be combined.")
        values["total"] = settings.get("sampler", {}).get("paper_total", FULL_SCALE_TOTAL)

    try:
        return CliConfig(command=command, inputs=inputs or {}, **values)
    except ValidationError as e:
        raise ConfigError(_validation_message(e)) from e


def _resolve(ctx: typer.Context, command: str, inputs: Dict[str, Any], **flags) -> CliConfig:
    options = ctx.obj or {}
    flags.update(seed=options.get("seed"), out_dir=options.get("out_dir"))
    return resolve_config(command, flags, options.get("config_file"), options.get("settings"), inputs)


def _prepare_out_dir(cfg: CliConfig) -> str:
    try:
        os.makedirs(cfg.out_dir, exist_ok=True)
    except OSError as e:
        raise OSError(f"Cannot create output directory {cfg.out_dir}: {e.strerror or e}") from e
    files.write_json(cfg.model_dump(), os.path.join(cfg.out_dir, RUN_CONFIG_JSON))
    return cfg.out_dir


def _node_set(text: Optional[str]) -> List[str]:
    """Nodes separated by commas or whitespace; an empty string is the empty set."""
    return [node for node in re.split(r"[,\s]+", (text or "").strip()) if node]


def _parse_intervention(text: str) -> int:
    match = re.fullmatch(r"\s*T\s*=\s*([01])\s*", text)
    if not match:
        raise ConfigError(f"--intervene expects T=0 or T=1, got {text!r}.")
    return int(match.group(1))


def _sample_chain(tab, cfg: CliConfig) -> Chain:
    chains = run_chains(tab, cfg.prior_spec(), cfg.sampling_config(), n_chains=cfg.chains)
    return merge_chains(chains)


def _chain_meta(chain: Chain, cfg: CliConfig, table_path: str) -> dict:
    return {
        "table": table_path,
        "draws": len(chain),
        "chains": cfg.chains,
        "accepted": chain.accepted,
        "proposed": chain.proposed,
        "acceptance_rate": chain.acceptance_rate,
        "run": chain.config.model_dump(),
        "prior": chain.spec.model_dump(),
    }


def _summary_payload(summary, columns, estimates=None) -> dict:
    payload = summary.model_dump()
    payload["predictive"] = {
        name: quantity.model_dump() for name, quantity in analysis.interventional_predictive(columns).items()
    }
    payload["decision"] = analysis.recommend_treatment(columns)
    payload["estimates"] = estimates.model_dump() if estimates is not None else None
    return payload


def _print_summary(summary) -> None:
    q = summary.quantities
    console.print(f"draws: {summary.draws}")
    if summary.acceptance_rate is not None:
        console.print(f"acceptance rate: {summary.acceptance_rate:.3g}")
    for name in ("ate_half_sum", "ate_marginal", "d_w0", "d_w1", "d_z0", "d_z1"):
        console.print(f"{name}: mean {q[name].mean:.4f}, std {q[name].std:.4f}")
    for name, corr in summary.correlations.items():
        value = f"{corr.value:.4f}" if corr.defined else f"undefined ({corr.reason})"
        console.print(f"corr {name}: {value}")


@app.callback()
def main(
    ctx: typer.Context,
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed of every random stream."),
    out_dir: Optional[str] = typer.Option(None, "--out-dir", help="Directory for output files."),
    config_file: Optional[str] = typer.Option(None, "--config", help="JSON file with run options."),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log at DEBUG level."),
) -> None:
    """Estimate treatment effects under the M-structure from observational counts."""
    settings = get_config()
    level = "DEBUG" if verbose else settings.get("logging", {}).get("level", "INFO")
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    ctx.obj = {"seed": seed, "out_dir": out_dir, "config_file": config_file, "settings": settings}


@app.command()
def generate(
    ctx: typer.Context,
    params: str = typer.Option(..., "--params", help="Generative parameters as flat JSON."),
    records: int = typer.Option(100_000, "--records", "-m", min=0, help="Number of units to sample."),
    intervene_on: Optional[str] = typer.Option(None, "--intervene", help="Force treatment, e.g. T=1."),
    write_records: bool = typer.Option(False, "--write-records", help="Also write one row per unit."),
) -> None:
    """Sample units from the M-structure and write their contingency table."""
    cfg = _resolve(
        ctx,
        "generate",
        {"params": params, "records": records, "intervene": intervene_on, "write_records": write_records},
    )
    gp = files.read_params(params)
    if intervene_on is not None:
        gp = intervene(gp, _parse_intervention(intervene_on))
    out_dir = _prepare_out_dir(cfg)
    sampled = ancestral_sample_array(gp, records, cfg.seed)
    tab = tabulate(sampled)
    files.write_table(tab, os.path.join(out_dir, TABLE_CSV))
    if write_records:
        files.write_records(sampled, os.path.join(out_dir, RECORDS_CSV))
    console.print(f"Sampled {records} units; wrote {os.path.join(out_dir, TABLE_CSV)}")


@app.command()
def estimate(
    table: str = typer.Option(TABLE1_PATH, "--table", help="Contingency table CSV (T,Z,Y,N)."),
    as_json: bool = typer.Option(False, "--json", help="Print the estimates as JSON."),
) -> None:
    """Plug-in estimates: unadjusted contrast and back-door strata."""
    report = estimate_all(files.read_table(table))
    if as_json:
        typer.echo(report.model_dump_json(indent=2))
        return
    console.print(f"records: {report.total}")
    for name in ("ate_unadjusted", "backdoor_z0", "backdoor_z1", "backdoor_adjusted"):
        item = getattr(report, name)
        flag = "" if item.causal else "  (not causal)"
        console.print(escape(f"{name}: {item.label} = {item.fraction} = {item.value:.6f}{flag}"))
    console.print(f"kappa: {report.kappa:.6f}")
    console.print(f"nu: ({report.nu[0]:.6f}, {report.nu[1]:.6f})")


@app.command()
def dsep(
    graph_path: str = typer.Option(M_GRAPH_PATH, "--graph", help="Edge list file."),
    x: str = typer.Option(..., "--x", help="First node set (the rule's Z set with --rule)."),
    y: str = typer.Option(..., "--y", help="Second node set."),
    given: str = typer.Option("", "--given", help="Conditioning set (the rule's W set with --rule)."),
    mutilate_incoming: str = typer.Option("", "--mutilate", help="Remove edges into these nodes first."),
    mutilate_outgoing: str = typer.Option("", "--mutilate-outgoing", help="Remove edges out of these nodes first."),
    rule: Optional[int] = typer.Option(None, "--rule", help="Check a do-calculus rule (1, 2 or 3) instead."),
    do: str = typer.Option("", "--do", help="Intervened set X of the rule."),
    explain: bool = typer.Option(False, "--explain", help="List the open paths."),
    as_json: bool = typer.Option(False, "--json", help="Print the verdict as JSON."),
) -> None:
    """d-separation of node sets in a DAG, or a do-calculus rule condition."""
    g = files.read_graph(graph_path)
    if rule is not None:
        holds = graph.rule_condition_holds(
            g, rule, y=_node_set(y), x=_node_set(do), z=_node_set(x), w=_node_set(given)
        )
        if as_json:
            typer.echo(json.dumps({"rule": rule, "holds": holds}))
        else:
            console.print(f"rule {rule} holds: {str(holds).lower()}")
        return

    if mutilate_incoming:
        g = graph.mutilate(g, _node_set(mutilate_incoming))
    if mutilate_outgoing:
        g = graph.remove_outgoing(g, _node_set(mutilate_outgoing))
    xs, ys, zs = _node_set(x), _node_set(y), _node_set(given)
    verdict = graph.d_separated(g, xs, ys, zs)
    paths = graph.open_paths(g, xs, ys, zs) if explain or as_json else []
    if as_json:
        payload = {"d_separated": verdict, "open_paths": [graph.format_trail(g, p) for p in paths]}
        typer.echo(json.dumps(payload))
        return
    console.print(f"d-separated: {str(verdict).lower()}")
    if explain:
        if not paths:
            console.print("no open paths")
        for trail in paths:
            console.print(f"open: {graph.format_trail(g, trail)}")


@app.command()
def sample(
    ctx: typer.Context,
    table: str = typer.Option(TABLE1_PATH, "--table", help="Contingency table CSV (T,Z,Y,N)."),
    burn_in: Optional[int] = typer.Option(None, "--burn-in", help="Iterations discarded first."),
    total: Optional[int] = typer.Option(None, "--total", help="Total iterations."),
    thin: Optional[int] = typer.Option(None, "--thin", help="Keep every thin-th iteration."),
    chains: Optional[int] = typer.Option(None, "--chains", help="Independent chains run concurrently."),
    block_size: Optional[int] = typer.Option(None, "--block-size", help="Proposals drawn per block."),
    paper_scale: bool = typer.Option(False, "--paper-scale", help="Run the full-length schedule."),
) -> None:
    """Run the independence sampler and write chain.csv."""
    cfg = _resolve(
        ctx,
        "sample",
        {"table": table},
        burn_in=burn_in,
        total=total,
        thin=thin,
        chains=chains,
        block_size=block_size,
        paper_scale=paper_scale or None,
    )
    cfg.sampling_config()
    tab = files.read_table(table)
    out_dir = _prepare_out_dir(cfg)
    chain = _sample_chain(tab, cfg)
    path = chain_store.write_chain_csv(analysis.chain_columns(chain), out_dir)
    chain_store.write_chain_meta(_chain_meta(chain, cfg, table), out_dir)
    console.print(f"Kept {len(chain)} draws, acceptance rate {chain.acceptance_rate:.3g}; wrote {path}")


@app.command()
def analyze(
    ctx: typer.Context,
    chain_path: Optional[str] = typer.Option(None, "--chain", help="Chain CSV; defaults to <out-dir>/chain.csv."),
) -> None:
    """Summarize a chain and draw its panels."""
    cfg = _resolve(ctx, "analyze", {"chain": chain_path})
    chain_path = chain_path or os.path.join(cfg.out_dir, CHAIN_CSV)
    columns = chain_store.read_chain_csv(chain_path)
    meta = chain_store.read_chain_meta(chain_path)
    summary = analysis.summarize_columns(columns, meta.get("accepted"), meta.get("proposed"))
    out_dir = _prepare_out_dir(cfg)
    files.write_json(_summary_payload(summary, columns), os.path.join(out_dir, SUMMARY_JSON))
    analysis.export_figures(columns, out_dir, bins=cfg.histogram_bins, limit=cfg.axis_limit)
    _print_summary(summary)


@app.command()
def report(
    ctx: typer.Context,
    table: str = typer.Option(TABLE1_PATH, "--table", help="Contingency table CSV (T,Z,Y,N)."),
    burn_in: Optional[int] = typer.Option(None, "--burn-in", help="Iterations discarded first."),
    total: Optional[int] = typer.Option(None, "--total", help="Total iterations."),
    thin: Optional[int] = typer.Option(None, "--thin", help="Keep every thin-th iteration."),
    chains: Optional[int] = typer.Option(None, "--chains", help="Independent chains run concurrently."),
    block_size: Optional[int] = typer.Option(None, "--block-size", help="Proposals drawn per block."),
    paper_scale: bool = typer.Option(False, "--paper-scale", help="Run the full-length schedule."),
    oracle_draws: Optional[int] = typer.Option(None, "--oracle-draws", help="Importance-sampling draws; 0 skips."),
) -> None:
    """Estimates, posterior sampling, summary and panels in one run."""
    cfg = _resolve(
        ctx,
        "report",
        {"table": table},
        burn_in=burn_in,
        total=total,
        thin=thin,
        chains=chains,
        block_size=block_size,
        paper_scale=paper_scale or None,
        oracle_draws=oracle_draws,
    )
    cfg.sampling_config()
    tab = files.read_table(table)
    out_dir = _prepare_out_dir(cfg)

    try:
        estimates = estimate_all(tab)
        files.write_json(estimates.model_dump(), os.path.join(out_dir, ESTIMATES_JSON))
    except UndefinedEstimateError as e:
        logger.warning(f"Plug-in estimates skipped: {e}")
        estimates = None

    chain = _sample_chain(tab, cfg)
    analysis.export_artifacts(chain, out_dir, bins=cfg.histogram_bins, limit=cfg.axis_limit)
    chain_store.write_chain_meta(_chain_meta(chain, cfg, table), out_dir)
    columns = analysis.chain_columns(chain)
    summary = analysis.summarize(chain)
    files.write_json(_summary_payload(summary, columns, estimates), os.path.join(out_dir, SUMMARY_JSON))

    if cfg.oracle_draws > 0:
        weighted = importance_sampler(tab, cfg.prior_spec(), cfg.oracle_draws, oracle_rng(cfg.seed), cfg.block_size)
        comparison = analysis.compare_with_oracle(columns, weighted)
        files.write_json(comparison.model_dump(), os.path.join(out_dir, ORACLE_JSON))
        console.print(f"oracle ess: {comparison.ess:.1f}")

    if estimates is not None:
        console.print(f"unadjusted estimate: {estimates.ate_unadjusted.value:.6f}")
    _print_summary(summary)
    console.print(f"Wrote outputs to {out_dir}")


def _error(message: str) -> None:
    line = " ".join(part.strip() for part in str(message).splitlines() if part.strip())
    err_console.print(f"[bold red]Error: {escape(line)}[/bold red]")


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and return its exit code.

    0 on success, 1 for bad input (usage errors, invalid files or options, I/O
    failures) and 2 when an internal invariant is violated.
    """
    args = list(sys.argv[1:] if argv is None else argv)
    try:
        result = app(args=args, prog_name="mbias", standalone_mode=False)
    except click.exceptions.Abort:
        _error("Aborted.")
        return 1
    except click.ClickException as e:
        _error(e.format_message())
        return 1
    except InvariantViolation as e:
        _error(f"internal invariant violated: {e}")
        return 2
    except (ValueError, OSError) as e:
        _error(str(e))
        return 1
    return result if isinstance(result, int) else 0


if __name__ == "__main__":
    sys.exit(run())
