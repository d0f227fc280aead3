"""Command-line entry point.

Machine-readable JSON goes to stdout, human-readable tables to stderr, so
pipelines stay composable. Exit codes: 0 success, 2 validation/data error,
1 assertion failure (harness checks).
"""

from __future__ import annotations

import csv
import functools
import json
import sys
from pathlib import Path

import click

from . import demo, evalharness, stats as statsmod
from .catalog import (
    dump_catalog,
    filter_catalog,
    load_catalog,
    load_schema,
    product_to_dict,
)
from .errors import UndrError
from .needslog import (
    ALL_COHORT,
    DEFAULT_COHORTS,
    ExclusionRule,
    dump_records,
    load_records,
)
from .ranking import (
    METHOD_RATING,
    METHOD_UNDR,
    rank_by_rating,
    rank_undr,
    ranked_to_dict,
    top_k,
)
from .server import EngineConfig, EngineState, serve as run_server
from .weights import (
    DEFAULT_MIN_POOL,
    DENOMINATOR_MODES,
    SELECTION_SHARE,
    build_weight_table,
    load_table,
    render_table,
    table_to_dict,
)


def _echo_json(data) -> None:
    click.echo(json.dumps(data, indent=2, sort_keys=True))


def _info(message: str) -> None:
    click.echo(message, err=True)


def data_errors_exit_2(f):
    """Data/validation problems exit 2; harness assertion failures exit 1 elsewhere."""

    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except UndrError as exc:
            _info(f"error: {exc}")
            sys.exit(2)

    return wrapper


def _cohort_spec(cohort_id: str):
    for spec in DEFAULT_COHORTS:
        if spec.cohort_id == cohort_id:
            return spec
    raise click.BadParameter(f"unknown cohort {cohort_id!r}; expected all, basic or advanced")


def _normalize_default_map(command: click.Command, data: dict) -> dict:
    """Translate config keys written as flag names into click parameter names."""
    if isinstance(command, click.Group):
        out = {}
        for key, value in data.items():
            sub = command.commands.get(key)
            if sub is not None and isinstance(value, dict):
                out[key] = _normalize_default_map(sub, value)
            else:
                out[key] = value
        return out
    by_flag = {}
    for param in command.params:
        for opt in param.opts:
            by_flag[opt.lstrip("-")] = param.name
            by_flag[opt.lstrip("-").replace("-", "_")] = param.name
    return {by_flag.get(key, key): value for key, value in data.items()}


@click.group()
@click.option(
    "--config",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="JSON file with per-subcommand flag defaults (keys mirror subcommand names and flags).",
)
@click.pass_context
def main(ctx: click.Context, config: str | None) -> None:
    """Needs-driven faceted product ranking toolkit."""
    if config is not None:
        loaded = json.loads(Path(config).read_text(encoding="utf-8"))
        ctx.default_map = _normalize_default_map(ctx.command, loaded)


@main.command("ingest-catalog")
@click.option("--catalog", "catalog_path", required=True, type=click.Path(exists=True), help="Product JSONL file.")
@click.option("--schema", "schema_path", required=True, type=click.Path(exists=True), help="Facet schema JSON file.")
@click.option("--min-ratings", default=10, show_default=True, help="Minimum rating count to keep a product.")
@click.option("--currency-rate", default=None, type=float, help="Multiply the price attribute by this rate at ingest.")
@click.option("--currency-facet", default="price", show_default=True, help="Facet holding the price attribute.")
@click.option("--out", "out_path", default=None, type=click.Path(), help="Write the filtered catalog JSONL here.")
@data_errors_exit_2
def ingest_catalog(catalog_path, schema_path, min_ratings, currency_rate, currency_facet, out_path):
    """Filter a raw catalog: complete attributes, enough ratings, no duplicates."""
    schema = load_schema(schema_path)
    products = load_catalog(catalog_path)
    if currency_rate is not None:
        converted = []
        for p in products:
            attributes = dict(p.attributes)
            price = attributes.get(currency_facet)
            if isinstance(price, (int, float)):
                attributes[currency_facet] = round(float(price) * currency_rate, 2)
            converted.append(
                type(p)(
                    product_id=p.product_id,
                    title=p.title,
                    attributes=attributes,
                    rating_count=p.rating_count,
                    rating_sum=p.rating_sum,
                    price_currency=p.price_currency,
                )
            )
        products = converted
    kept = filter_catalog(products, schema, min_ratings)
    if out_path is not None:
        dump_catalog(kept, out_path)
        _info(f"wrote {len(kept)} products to {out_path}")
    _echo_json(
        {
            "input": len(products),
            "kept": len(kept),
            "dropped": len(products) - len(kept),
            "products": [product_to_dict(p) for p in kept],
        }
    )
    _info(f"kept {len(kept)} of {len(products)} products (min_ratings={min_ratings})")


@main.command("ingest-survey")
@click.option("--records", "records_path", required=True, type=click.Path(exists=True), help="Survey JSONL or CSV.")
@click.option("--schema", "schema_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", default=None, type=click.Choice(["jsonl", "csv"]), help="Defaults to the file extension.")
@click.option(
    "--exclude-demographic",
    "exclude",
    multiple=True,
    help="KEY=VALUE: reject records whose demographics match (repeatable).",
)
@click.option("--out", "out_path", default=None, type=click.Path(), help="Write retained records as JSONL here.")
@data_errors_exit_2
def ingest_survey(records_path, schema_path, fmt, exclude, out_path):
    """Validate selection records; rejections carry machine-readable reasons."""
    schema = load_schema(schema_path)
    rules = []
    for item in exclude:
        key, _, value = item.partition("=")
        rules.append(
            ExclusionRule(
                name=f"{key}={value}",
                predicate=lambda r, k=key, v=value: bool(r.demographics) and str(r.demographics.get(k)) == v,
            )
        )
    records, rejected = load_records(records_path, schema, fmt=fmt, exclusions=rules)
    if out_path is not None:
        dump_records(records, out_path)
        _info(f"wrote {len(records)} records to {out_path}")
    _echo_json(
        {
            "retained": len(records),
            "rejected": [
                {"line": r.line_number, "reason": r.reason, "detail": r.detail} for r in rejected
            ],
        }
    )
    _info(f"retained {len(records)}, rejected {len(rejected)}")


@main.command("weights")
@click.option("--records", "records_path", required=True, type=click.Path(exists=True))
@click.option("--schema", "schema_path", required=True, type=click.Path(exists=True))
@click.option("--cohort", default="all", show_default=True, type=click.Choice(["all", "basic", "advanced"]))
@click.option("--mode", default=SELECTION_SHARE, show_default=True, type=click.Choice(list(DENOMINATOR_MODES)))
@click.option("--min-pool", default=DEFAULT_MIN_POOL, show_default=True, help="Warn below this pool size.")
@click.option("--out", "out_path", default=None, type=click.Path(), help="Write the weight table JSON here.")
@data_errors_exit_2
def weights_cmd(records_path, schema_path, cohort, mode, min_pool, out_path):
    """Compute a per-cohort weight table from selection records."""
    schema = load_schema(schema_path)
    records, rejected = load_records(records_path, schema)
    if rejected:
        _info(f"ignoring {len(rejected)} rejected records")
    table = build_weight_table(records, schema, cohort_spec=_cohort_spec(cohort), mode=mode, min_pool=min_pool)
    if out_path is not None:
        from .weights import dump_table

        dump_table(table, out_path)
        _info(f"wrote weight table to {out_path}")
    _echo_json(table_to_dict(table))
    _info(render_table(table, schema))


@main.command("rank")
@click.option("--catalog", "catalog_path", required=True, type=click.Path(exists=True))
@click.option("--schema", "schema_path", required=True, type=click.Path(exists=True))
@click.option("--weights", "weights_path", default=None, type=click.Path(exists=True), help="Weight table JSON (else derive from --records).")
@click.option("--records", "records_path", default=None, type=click.Path(exists=True))
@click.option("--method", default=METHOD_UNDR, show_default=True, type=click.Choice([METHOD_UNDR, METHOD_RATING]))
@click.option("--cohort", default="all", show_default=True, type=click.Choice(["all", "basic", "advanced"]))
@click.option("--mode", default=SELECTION_SHARE, show_default=True, type=click.Choice(list(DENOMINATOR_MODES)))
@click.option("--min-ratings", default=10, show_default=True)
@click.option("--k", default=10, show_default=True, help="List length; 0 means the full catalog.")
@data_errors_exit_2
def rank_cmd(catalog_path, schema_path, weights_path, records_path, method, cohort, mode, min_ratings, k):
    """Rank a catalog by the needs-driven score or the rating baseline."""
    schema = load_schema(schema_path)
    products = filter_catalog(load_catalog(catalog_path), schema, min_ratings)
    if method == METHOD_RATING:
        ranked = rank_by_rating(products)
    else:
        if weights_path is not None:
            table = load_table(weights_path)
        elif records_path is not None:
            records, _ = load_records(records_path, schema)
            table = build_weight_table(records, schema, cohort_spec=_cohort_spec(cohort), mode=mode)
        else:
            raise click.UsageError("--method undr needs --weights or --records")
        ranked = rank_undr(products, table, schema)
    if k > 0:
        ranked = top_k(ranked, k)
    _echo_json(ranked_to_dict(ranked, products))
    _info(f"{method}: {len(ranked.ordering)} products listed")


@main.command("compare")
@click.option("--catalog", "catalog_path", required=True, type=click.Path(exists=True))
@click.option("--schema", "schema_path", required=True, type=click.Path(exists=True))
@click.option("--records", "records_path", required=True, type=click.Path(exists=True))
@click.option("--cohort", default="all", show_default=True, type=click.Choice(["all", "basic", "advanced"]))
@click.option("--mode", default=SELECTION_SHARE, show_default=True, type=click.Choice(list(DENOMINATOR_MODES)))
@click.option("--min-ratings", default=10, show_default=True)
@click.option("--k", default=5, show_default=True)
@data_errors_exit_2
def compare_cmd(catalog_path, schema_path, records_path, cohort, mode, min_ratings, k):
    """Compare the needs-driven ranking against the rating baseline."""
    schema = load_schema(schema_path)
    products = filter_catalog(load_catalog(catalog_path), schema, min_ratings)
    records, _ = load_records(records_path, schema)
    table = build_weight_table(records, schema, cohort_spec=_cohort_spec(cohort), mode=mode)
    report = evalharness.compare_rankings(rank_undr(products, table, schema), rank_by_rating(products), k=k)
    _echo_json(report.to_dict())
    _info(report.summary)


# --- statistics -----------------------------------------------------------------

@main.group("stats")
def stats_group():
    """Nonparametric tests over rating CSVs or direct counts."""


def _read_csv_columns(path: str, columns: list[str]) -> dict[str, list[float]]:
    out: dict[str, list[float]] = {c: [] for c in columns}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            for c in columns:
                cell = (row.get(c) or "").strip()
                if cell:
                    out[c].append(float(cell))
    return out


@stats_group.command("wilcoxon")
@click.option("--csv", "csv_path", required=True, type=click.Path(exists=True), help="CSV with two paired rating columns.")
@click.option("--col-a", default="a", show_default=True)
@click.option("--col-b", default="b", show_default=True)
@click.option("--sidedness", default=statsmod.TWO_SIDED, show_default=True, type=click.Choice(list(statsmod.SIDEDNESS)))
@data_errors_exit_2
def wilcoxon_cmd(csv_path, col_a, col_b, sidedness):
    """Paired signed-rank test."""
    cols = _read_csv_columns(csv_path, [col_a, col_b])
    if len(cols[col_a]) != len(cols[col_b]):
        raise click.UsageError("paired columns must have equal length")
    result = statsmod.wilcoxon_signed_rank(list(zip(cols[col_a], cols[col_b])), sidedness)
    _echo_json(result.to_dict())


@stats_group.command("mannwhitney")
@click.option("--csv", "csv_path", required=True, type=click.Path(exists=True), help="CSV with two unpaired rating columns.")
@click.option("--col-x", default="x", show_default=True)
@click.option("--col-y", default="y", show_default=True)
@click.option("--sidedness", default=statsmod.TWO_SIDED, show_default=True, type=click.Choice(list(statsmod.SIDEDNESS)))
@data_errors_exit_2
def mannwhitney_cmd(csv_path, col_x, col_y, sidedness):
    """Unpaired rank-sum test (blank cells are skipped, so lengths may differ)."""
    cols = _read_csv_columns(csv_path, [col_x, col_y])
    result = statsmod.mann_whitney_u(cols[col_x], cols[col_y], sidedness)
    _echo_json(result.to_dict())


@stats_group.command("binomial")
@click.option("--successes", required=True, type=int)
@click.option("--trials", required=True, type=int)
@click.option("--p0", default=0.5, show_default=True, type=float)
@data_errors_exit_2
def binomial_cmd(successes, trials, p0):
    """Exact upper-tail binomial test."""
    result = statsmod.binomial_test_ge(successes, trials, p0)
    _echo_json(result.to_dict())


@stats_group.command("bonferroni")
@click.option("--p", "p_values", multiple=True, type=float, required=True, help="p-value (repeatable).")
@data_errors_exit_2
def bonferroni_cmd(p_values):
    """Family-wise correction: multiply by the family size, cap at 1."""
    _echo_json({"input": list(p_values), "corrected": statsmod.bonferroni(list(p_values))})


# --- harness ---------------------------------------------------------------------

@main.group("harness")
def harness_group():
    """Deterministic end-to-end checks on synthetic data."""


@harness_group.command("table1")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--tolerance", default=0.005, show_default=True, type=float)
@data_errors_exit_2
def table1_cmd(seed, tolerance):
    """Recover the bundled reference survey's facet weight column.

    Exit code 1 when any facet weight misses the published value.
    """
    pool = evalharness.generate_pool(evalharness.reference_pool_spec(seed))
    report = evalharness.reproduce_table1(pool, tolerance=tolerance)
    _echo_json(report.to_dict())
    _info(report.render())
    if not report.ok:
        sys.exit(1)


@harness_group.command("compare")
@click.option("--k", default=5, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--products", default=182, show_default=True, type=int)
@data_errors_exit_2
def harness_compare_cmd(k, seed, products):
    """Needs-driven vs rating ranking on synthetic data; byte-stable per seed."""
    schema = demo.laptop_schema()
    pool = evalharness.generate_pool(evalharness.reference_pool_spec(seed))
    catalog = evalharness.generate_catalog(products, schema, seed)
    table = build_weight_table(pool, schema, cohort_spec=ALL_COHORT)
    report = evalharness.compare_rankings(rank_undr(catalog, table, schema), rank_by_rating(catalog), k=k)
    _echo_json(report.to_dict())
    _info(report.summary)


# --- synthetic data ----------------------------------------------------------------

@main.group("generate")
def generate_group():
    """Synthetic pools, catalogs and the demo schema."""


@generate_group.command("schema")
@click.option("--out", "out_path", required=True, type=click.Path())
def generate_schema_cmd(out_path):
    """Write the demo laptop facet schema."""
    from .catalog import dump_schema

    dump_schema(demo.laptop_schema(), out_path)
    _info(f"wrote schema to {out_path}")


@generate_group.command("pool")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--total", default=demo.REFERENCE_TOTAL_USERS, show_default=True, type=int, help="Pool size; marginals scale proportionally.")
@data_errors_exit_2
def generate_pool_cmd(out_path, seed, total):
    """Write a synthetic selection pool with the reference survey's shape."""
    schema = demo.laptop_schema()
    scale = total / demo.REFERENCE_TOTAL_USERS
    spec = evalharness.SyntheticPoolSpec(
        schema=schema,
        total_users=total,
        marginals={
            fid: evalharness.FacetMarginal(any_count=min(total, round(count * scale)))
            for fid, count in demo.REFERENCE_ANY_COUNTS.items()
        },
        advanced_users=min(total, round(demo.REFERENCE_ADVANCED_USERS * scale)),
        seed=seed,
    )
    records = evalharness.generate_pool(spec)
    dump_records(records, out_path)
    _info(f"wrote {len(records)} records to {out_path}")


@generate_group.command("catalog")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--n", default=182, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@data_errors_exit_2
def generate_catalog_cmd(out_path, n, seed):
    """Write a synthetic product catalog that survives the standard filter."""
    products = evalharness.generate_catalog(n, demo.laptop_schema(), seed)
    dump_catalog(products, out_path)
    _info(f"wrote {len(products)} products to {out_path}")


# --- server --------------------------------------------------------------------------

@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True, envvar="UNDR_HOST")
@click.option("--port", default=8000, show_default=True, type=int, envvar="UNDR_PORT")
@click.option("--schema", "schema_path", required=True, type=click.Path(exists=True), envvar="UNDR_SCHEMA")
@click.option("--catalog", "catalog_path", required=True, type=click.Path(exists=True), envvar="UNDR_CATALOG")
@click.option("--records", "records_path", default=None, type=click.Path(exists=True), envvar="UNDR_RECORDS", help="Seed selection pool (JSONL/CSV).")
@click.option("--log-dir", default=None, type=click.Path(), envvar="UNDR_LOG_DIR", help="Event log + snapshot directory; omit for in-memory.")
@click.option("--min-pool", default=1, show_default=True, type=int, envvar="UNDR_MIN_POOL", help="Minimum finalized records before recompute is allowed.")
@click.option("--mode", default=SELECTION_SHARE, show_default=True, type=click.Choice(list(DENOMINATOR_MODES)), envvar="UNDR_MODE")
@click.option("--min-ratings", default=10, show_default=True, type=int, envvar="UNDR_MIN_RATINGS")
@click.option("--idle-timeout", default=1800.0, show_default=True, type=float, envvar="UNDR_IDLE_TIMEOUT", help="Seconds before an idle session auto-finalizes.")
@click.option("--ui", "ui_dir", default=None, type=click.Path(), envvar="UNDR_UI_DIR", help="Static UI build to mount at /.")
@data_errors_exit_2
def serve_cmd(host, port, schema_path, catalog_path, records_path, log_dir, min_pool, mode, min_ratings, idle_timeout, ui_dir):
    """Run the ranking service."""
    schema = load_schema(schema_path)
    catalog = load_catalog(catalog_path)
    initial: list = []
    if records_path is not None:
        initial, rejected = load_records(records_path, schema)
        if rejected:
            _info(f"seed pool: ignoring {len(rejected)} rejected records")
    engine = EngineState(
        schema=schema,
        catalog=catalog,
        config=EngineConfig(
            min_pool=min_pool,
            denominator_mode=mode,
            min_ratings=min_ratings,
            idle_timeout=idle_timeout,
        ),
        log_dir=log_dir,
        initial_records=initial,
    )
    _info(f"serving {len(engine.catalog)} products on http://{host}:{port} (records: {len(engine.records)})")
    run_server(engine, host=host, port=port, ui_dir=ui_dir)


if __name__ == "__main__":
    main()
