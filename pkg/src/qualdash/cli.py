"""Command line interface.

Diagnostics go to stderr; stdout carries only requested data, so output
stays pipeable.  Exit codes: 0 success, 1 validation failure, 2 I/O
failure, 3 internal error.
"""

from __future__ import annotations

import functools
import json
import sys

import click

from .aggregate.binning import GRANULARITIES, Timeframe, bin_label
from .aggregate.engine import series_for_measure
from .data.derive import DeriveError, derive_and_replace, parse_derivations
from .data.synth import generate_synthetic, load_profile, profile_dictionary
from .data.table import (DataLoadError, _format_cell, concat_tables,
                         load_table, normalize_dates, split_annual,
                         write_table)
from .mss import (DataDictionary, MssParseError, parse_config,
                  validate_config)
from .server import ServerConfigError

EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_INTERNAL = 3


def _fail(code: int, message: str):
    click.echo(message, err=True)
    sys.exit(code)


def _guard(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            func(*args, **kwargs)
        except SystemExit:
            raise
        except click.ClickException:
            raise
        except (MssParseError, DataLoadError, DeriveError, ServerConfigError,
                ValueError) as exc:
            _fail(EXIT_VALIDATION, str(exc))
        except OSError as exc:
            _fail(EXIT_IO, str(exc))
        except Exception as exc:  # the safety net the exit code contract needs
            _fail(EXIT_INTERNAL, f"internal error: {type(exc).__name__}: {exc}")
    return wrapper


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def _load_aliases(path: str | None) -> dict:
    if not path:
        return {}
    raw = json.loads(_read(path))
    if not isinstance(raw, dict) or \
            not all(isinstance(v, str) for v in raw.values()):
        raise DataLoadError(f"{path}: alias file must map strings to strings")
    return raw


def _report_lines(report) -> list[str]:
    lines = []
    for f in report.errors:
        lines.append(f"error: {f.path}: [{f.code}] {f.message}")
    for f in report.warnings:
        lines.append(f"warning: {f.path}: [{f.code}] {f.message}")
    return lines


alias_option = click.option(
    "--alias-file", type=click.Path(exists=True, dir_okay=False),
    default=None, help="JSON file mapping raw column headers to "
                       "dictionary field names.")


@click.group()
@click.version_option(package_name="qualdash", prog_name="qualdash")
def cli():
    """Generate, validate and serve clinical audit dashboards."""


@cli.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.argument("dictionary", type=click.Path(exists=True, dir_okay=False))
@alias_option
@click.option("--format", "fmt", type=click.Choice(["text", "json"]),
              default="text", help="Report format on stdout (json) or "
                                   "stderr (text).")
@_guard
def validate(config, dictionary, alias_file, fmt):
    """Check a metric config against a data dictionary."""
    parsed = parse_config(_read(config))
    dct = DataDictionary.from_json(_read(dictionary))
    aliases = dict(parsed.field_aliases)
    aliases.update(_load_aliases(alias_file))
    if aliases != dict(parsed.field_aliases):
        from dataclasses import replace
        parsed = replace(parsed, field_aliases=aliases)
    report = validate_config(parsed, dct)
    if fmt == "json":
        click.echo(json.dumps(report.to_json(), indent=2))
    else:
        for line in _report_lines(report):
            click.echo(line, err=True)
        if report.ok:
            click.echo(f"{config}: ok "
                       f"({len(parsed.metrics)} metrics)", err=True)
    if not report.ok:
        sys.exit(EXIT_VALIDATION)


@cli.command()
@click.argument("inputs", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--dictionary", "dictionary_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--xfield", default=None,
              help="Date field for the annual split; defaults to the "
                   "config's xfield.")
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Metric config supplying xfield and aliases.")
@click.option("--derive", "derive_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON file of derived field definitions.")
@click.option("--audit", default=None,
              help="Basename for output files; defaults to the config's "
                   "audit name.")
@click.option("--out", "out_dir", required=True,
              type=click.Path(file_okay=False))
@alias_option
@_guard
def preprocess(inputs, dictionary_path, xfield, config_path, derive_path,
               audit, out_dir, alias_file):
    """Normalize dates, compute derived fields and split into annual files.

    Rerunning on its own output reproduces it byte for byte.
    """
    import os

    dct = DataDictionary.from_json(_read(dictionary_path))
    aliases = {}
    if config_path:
        cfg = parse_config(_read(config_path))
        aliases.update(cfg.field_aliases)
        xfield = xfield or cfg.xfield
        audit = audit or cfg.audit
    aliases.update(_load_aliases(alias_file))
    if not xfield:
        raise DataLoadError("no xfield: pass --xfield or --config")
    audit = audit or "audit"
    tables = [load_table(path, dct, aliases=aliases) for path in inputs]
    table = tables[0] if len(tables) == 1 else concat_tables(tables)
    temporal = [f for f in table.field_names()
                if dct.field_type(f) == "temporal"]
    table = normalize_dates(table, temporal)
    if derive_path:
        specs = parse_derivations(_read(derive_path))
        table = derive_and_replace(table, specs)
    if xfield not in table.schema:
        raise DataLoadError(f"xfield {xfield!r} not present in the input")
    split = split_annual(table, xfield)
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for year, part in split.years.items():
        path = os.path.join(out_dir, f"{audit}_{year}.csv")
        write_table(part, path)
        written.append((path, len(part)))
    undated_path = os.path.join(out_dir, f"{audit}_undated.csv")
    write_table(split.undated, undated_path)
    written.append((undated_path, len(split.undated)))
    click.echo(f"{len(table)} records in, "
               f"{table.provenance.unparseable} unparseable cells", err=True)
    for path, n in written:
        click.echo(f"wrote {path} ({n} rows)", err=True)


@cli.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--dictionary", "dictionary_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--data", "data_paths", multiple=True, required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--metric", required=True)
@click.option("--measure", required=True)
@click.option("--rule", default=None,
              help="Override the configured aggregation rule.")
@click.option("--granularity", default=None,
              type=click.Choice(list(GRANULARITIES)))
@click.option("--from", "from_date", default=None,
              help="Timeframe start (ISO date).")
@click.option("--to", "to_date", default=None, help="Timeframe end (ISO date).")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
              default="csv")
@alias_option
@_guard
def query(config_path, dictionary_path, data_paths, metric, measure, rule,
          granularity, from_date, to_date, fmt, alias_file):
    """Compute one measure's binned series and print it."""
    import datetime

    cfg = parse_config(_read(config_path))
    dct = DataDictionary.from_json(_read(dictionary_path))
    aliases = dict(cfg.field_aliases)
    aliases.update(_load_aliases(alias_file))
    report = validate_config(cfg, dct)
    if not report.ok:
        for line in _report_lines(report):
            click.echo(line, err=True)
        sys.exit(EXIT_VALIDATION)
    try:
        spec = cfg.metric(metric)
    except KeyError:
        raise DataLoadError(f"unknown metric {metric!r}") from None
    if measure not in spec.measure_names():
        raise DataLoadError(f"unknown measure {measure!r} in {metric!r}")
    tables = [load_table(p, dct, aliases=aliases) for p in data_paths]
    table = tables[0] if len(tables) == 1 else concat_tables(tables)
    temporal = [f for f in table.field_names()
                if dct.field_type(f) == "temporal"]
    table = normalize_dates(table, temporal)
    years = sorted({row[cfg.xfield].year for row in table.rows
                    if isinstance(row.get(cfg.xfield), datetime.date)})
    if from_date or to_date:
        if not (from_date and to_date):
            raise DataLoadError("--from and --to go together")
        timeframe = Timeframe(datetime.date.fromisoformat(from_date),
                              datetime.date.fromisoformat(to_date))
    elif years:
        timeframe = Timeframe.year(years[-1])
    else:
        raise DataLoadError("no dated records and no --from/--to")
    gran = granularity or spec.subsidiary.default_granularity or "month"
    series = series_for_measure(table, spec, measure, cfg.xfield, gran,
                                timeframe, rule=rule)
    if fmt == "json":
        doc = [{"bin": b.isoformat(), "label": bin_label(b, gran), "value": v}
               for b, v in zip(series.bins, series.values)]
        click.echo(json.dumps(doc, indent=2))
    else:
        for b, v in zip(series.bins, series.values):
            click.echo(f"{bin_label(b, gran)},{_format_cell(v)}")


@cli.command()
@click.option("--profile", required=True,
              help="Built-in profile name (picanet, minap) or a JSON path.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--n", "count", type=int, required=True)
@click.option("--out", "out_path", required=True,
              type=click.Path(dir_okay=False, writable=True))
@click.option("--dictionary-out", "dict_out", default=None,
              type=click.Path(dir_okay=False, writable=True),
              help="Also write the matching data dictionary here.")
@_guard
def gen(profile, seed, count, out_path, dict_out):
    """Generate a deterministic synthetic audit extract."""
    prof = load_profile(profile)
    table = generate_synthetic(seed, count, prof)
    write_table(table, out_path)
    if dict_out:
        with open(dict_out, "w", encoding="utf-8") as handle:
            handle.write(profile_dictionary(prof).to_json() + "\n")
    click.echo(f"wrote {out_path} ({count} rows, seed {seed})", err=True)


@cli.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--bind", default=None,
              help="host:port to listen on; defaults to 127.0.0.1:8799.")
@_guard
def serve(config_path, bind):
    """Run the dashboard server until interrupted."""
    from .server import run

    run(config_path=config_path, bind=bind)


def main():
    cli()


if __name__ == "__main__":
    main()
