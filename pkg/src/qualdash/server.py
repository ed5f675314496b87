"""Local HTTP API serving dashboards, cards, brushes, exports and logs.

All state lives in an immutable Generation that a reload replaces in one
reference assignment, so requests in flight keep the generation they
started with and a failed reload changes nothing.  Binding defaults to
loopback; nothing here ever initiates an outbound connection.
"""

from __future__ import annotations

import datetime
import json
import logging
import os
import threading
from dataclasses import dataclass, field as dc_field
from typing import Any, Mapping, Optional

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.responses import JSONResponse

from . import cards as cardgen
from .aggregate.binning import GRANULARITIES, Timeframe
from .aggregate.engine import breakdown, cohort_ids, yearly_context
from .data.table import DataLoadError, DataTable, concat_tables, load_table, normalize_dates
from .logs import LogSchemaError, LogSink, LogSinkError, validate_log_entry
from .mss import (RULE_KINDS, DashboardConfig, DataDictionary, Finding,
                  MssParseError, ValidationReport, parse_config,
                  validate_config)

log = logging.getLogger(__name__)

DEFAULT_BIND = "127.0.0.1:8799"
ENV_CONFIG = "QUALDASH_CONFIG"
ENV_BIND = "QUALDASH_BIND"


class ServerConfigError(Exception):
    pass


@dataclass(frozen=True)
class AuditEntry:
    name: str
    config_path: str
    dictionary_path: str
    data_paths: tuple[str, ...]


@dataclass(frozen=True)
class Settings:
    audits: tuple[AuditEntry, ...]
    bind: str = DEFAULT_BIND
    log_path: str = "qualdash_interactions.ndjson"
    static_dir: Optional[str] = None
    config_path: Optional[str] = None

    @property
    def host_port(self) -> tuple[str, int]:
        host, _, port = self.bind.rpartition(":")
        if not host or not port.isdigit():
            raise ServerConfigError(f"bad bind address {self.bind!r}")
        return host, int(port)


def load_settings(config_path: str) -> Settings:
    """Read the server config file: audits plus bind/log/static options."""
    try:
        with open(config_path, "r", encoding="utf-8") as handle:
            raw = json.load(handle)
    except OSError as exc:
        raise ServerConfigError(f"cannot read {config_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ServerConfigError(
            f"{config_path}: invalid JSON at line {exc.lineno}") from exc
    if not isinstance(raw, dict) or not isinstance(raw.get("audits"), list):
        raise ServerConfigError(f"{config_path}: needs an 'audits' list")
    base = os.path.dirname(os.path.abspath(config_path))

    def _resolve(p: str) -> str:
        return p if os.path.isabs(p) else os.path.join(base, p)

    audits = []
    for i, entry in enumerate(raw["audits"]):
        if not isinstance(entry, dict):
            raise ServerConfigError(f"audits[{i}] must be an object")
        for key in ("name", "config", "dictionary"):
            if not isinstance(entry.get(key), str):
                raise ServerConfigError(f"audits[{i}] needs a {key!r} path")
        data = entry.get("data", [])
        if not isinstance(data, list):
            raise ServerConfigError(f"audits[{i}].data must be a list")
        audits.append(AuditEntry(
            name=entry["name"],
            config_path=_resolve(entry["config"]),
            dictionary_path=_resolve(entry["dictionary"]),
            data_paths=tuple(_resolve(p) for p in data)))
    bind = os.environ.get(ENV_BIND) or raw.get("bind") or DEFAULT_BIND
    static_dir = raw.get("static_dir")
    return Settings(audits=tuple(audits), bind=bind,
                    log_path=_resolve(raw.get("log_path",
                                              "qualdash_interactions.ndjson")),
                    static_dir=_resolve(static_dir) if static_dir else None,
                    config_path=config_path)


@dataclass(frozen=True)
class AuditRuntime:
    name: str
    config: DashboardConfig
    dictionary: DataDictionary
    table: DataTable
    years: tuple[int, ...]

    def default_timeframe(self) -> Timeframe:
        if self.years:
            return Timeframe.year(self.years[-1])
        return Timeframe.year(datetime.date.today().year)


@dataclass(frozen=True)
class Generation:
    audits: Mapping[str, AuditRuntime]
    built_at: str = dc_field(default="", compare=False)


def _build_audit(entry: AuditEntry, errors: list[Finding],
                 warnings: list[Finding]) -> Optional[AuditRuntime]:
    prefix = f"audits.{entry.name}"
    try:
        with open(entry.config_path, "r", encoding="utf-8") as handle:
            config = parse_config(handle.read())
    except OSError as exc:
        errors.append(Finding(prefix, "IOError", str(exc)))
        return None
    except MssParseError as exc:
        errors.append(Finding(prefix + ".config", "ParseError", str(exc)))
        return None
    try:
        with open(entry.dictionary_path, "r", encoding="utf-8") as handle:
            dictionary = DataDictionary.from_json(handle.read())
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        errors.append(Finding(prefix + ".dictionary", "IOError", str(exc)))
        return None
    report = validate_config(config, dictionary)
    for f in report.errors:
        errors.append(Finding(f"{prefix}.{f.path}", f.code, f.message))
    for f in report.warnings:
        warnings.append(Finding(f"{prefix}.{f.path}", f.code, f.message))
    if report.errors:
        return None
    tables = []
    for path in entry.data_paths:
        try:
            t = load_table(path, dictionary, aliases=config.field_aliases,
                           xfield=config.xfield)
        except DataLoadError as exc:
            errors.append(Finding(f"{prefix}.data", "DataLoadError", str(exc)))
            return None
        except OSError as exc:
            errors.append(Finding(f"{prefix}.data", "IOError", str(exc)))
            return None
        temporal = [f for f in t.field_names()
                    if dictionary.field_type(f) == "temporal"]
        tables.append(normalize_dates(t, temporal))
    if tables:
        try:
            table = concat_tables(tables)
        except DataLoadError as exc:
            errors.append(Finding(f"{prefix}.data", "SchemaMismatch", str(exc)))
            return None
    else:
        table = DataTable(schema=dictionary.restrict([]), rows=())
    years = sorted({row[config.xfield].year for row in table.rows
                    if isinstance(row.get(config.xfield), datetime.date)})
    return AuditRuntime(name=entry.name, config=config, dictionary=dictionary,
                        table=table, years=tuple(years))


class ServerState:
    """Holds the live Generation and swaps it atomically on reload."""

    def __init__(self, settings: Settings):
        self.settings = settings
        self.sink = LogSink(settings.log_path)
        self._lock = threading.Lock()
        self._generation: Optional[Generation] = None

    @property
    def generation(self) -> Generation:
        gen = self._generation
        if gen is None:
            raise RuntimeError("server state not loaded")
        return gen

    def reload(self) -> ValidationReport:
        """Rebuild everything from the files; swap only if fully clean."""
        settings = self.settings
        if settings.config_path:
            try:
                settings = load_settings(settings.config_path)
                settings = Settings(audits=settings.audits,
                                    bind=self.settings.bind,
                                    log_path=settings.log_path,
                                    static_dir=settings.static_dir,
                                    config_path=settings.config_path)
            except ServerConfigError as exc:
                return ValidationReport(errors=(
                    Finding("server", "ConfigError", str(exc)),))
        errors: list[Finding] = []
        warnings: list[Finding] = []
        audits: dict[str, AuditRuntime] = {}
        for entry in settings.audits:
            if entry.name in audits:
                errors.append(Finding(f"audits.{entry.name}", "DuplicateAudit",
                                      "audit name appears twice"))
                continue
            runtime = _build_audit(entry, errors, warnings)
            if runtime is not None:
                audits[entry.name] = runtime
        report = ValidationReport(errors=tuple(errors),
                                  warnings=tuple(warnings))
        if report.ok:
            stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
            generation = Generation(audits=audits, built_at=stamp)
            with self._lock:
                self.settings = settings
                self._generation = generation
            log.info("loaded %d audits", len(audits))
        else:
            log.warning("reload rejected: %d errors", len(report.errors))
        return report


def _parse_timeframe(audit: AuditRuntime, from_param: Optional[str],
                     to_param: Optional[str]) -> Timeframe:
    default = audit.default_timeframe()
    try:
        start = datetime.date.fromisoformat(from_param) if from_param \
            else default.start
        end = datetime.date.fromisoformat(to_param) if to_param \
            else default.end
    except ValueError:
        raise HTTPException(400, "from/to must be ISO dates") from None
    try:
        return Timeframe(start, end)
    except ValueError as exc:
        raise HTTPException(400, str(exc)) from None


def create_app(config_path: Optional[str] = None,
               settings: Optional[Settings] = None) -> FastAPI:
    """Build the application; loads the initial generation eagerly so a
    broken config fails at startup, not on the first request."""
    if settings is None:
        path = config_path or os.environ.get(ENV_CONFIG)
        if not path:
            raise ServerConfigError(
                f"no server config; pass a path or set {ENV_CONFIG}")
        settings = load_settings(path)
    state = ServerState(settings)
    report = state.reload()
    if not report.ok:
        detail = "; ".join(f"{f.path}: {f.message}" for f in report.errors)
        raise ServerConfigError(f"initial load failed: {detail}")

    app = FastAPI(title="qualdash", docs_url=None, redoc_url=None)
    app.state.qualdash = state

    def _audit(name: str) -> AuditRuntime:
        runtime = state.generation.audits.get(name)
        if runtime is None:
            raise HTTPException(404, f"unknown audit {name!r}")
        return runtime

    def _metric(runtime: AuditRuntime, metric: str):
        try:
            return runtime.config.metric(metric)
        except KeyError:
            raise HTTPException(404, f"unknown metric {metric!r}") from None

    @app.get("/audits")
    def list_audits():
        gen = state.generation
        return {"audits": [
            {"name": rt.name,
             "metrics": rt.config.metric_names(),
             "years": list(rt.years),
             "xfield": rt.config.xfield}
            for rt in gen.audits.values()]}

    @app.get("/dashboard/{audit}")
    def dashboard(audit: str, request: Request):
        runtime = _audit(audit)
        timeframe = _parse_timeframe(runtime,
                                     request.query_params.get("from"),
                                     request.query_params.get("to"))
        payloads = []
        referenced: list[str] = []
        for spec in runtime.config.metrics:
            card = cardgen.build_card(spec, runtime.table, timeframe,
                                      cardgen.ENTRY, runtime.config.xfield)
            payloads.append(card.to_payload())
            for f in spec.referenced_fields():
                if f not in referenced:
                    referenced.append(f)
        dictionary = {f: {"type": runtime.dictionary[f].type,
                          "description": runtime.dictionary[f].description}
                      for f in referenced if f in runtime.dictionary}
        return {"audit": audit,
                "from": timeframe.start.isoformat(),
                "to": timeframe.end.isoformat(),
                "xfield": runtime.config.xfield,
                "cards": payloads,
                "dictionary": dictionary}

    def _build_card(audit: str, metric: str, state_param: str,
                    request: Request):
        runtime = _audit(audit)
        spec = _metric(runtime, metric)
        if state_param not in (cardgen.ENTRY, cardgen.EXPANDED):
            raise HTTPException(400, f"unknown state {state_param!r}")
        timeframe = _parse_timeframe(runtime,
                                     request.query_params.get("from"),
                                     request.query_params.get("to"))
        return runtime, cardgen.build_card(spec, runtime.table, timeframe,
                                           state_param, runtime.config.xfield)

    @app.get("/card/{audit}/{metric}")
    def card(audit: str, metric: str, request: Request):
        state_q = request.query_params.get("state", "entry")
        _, built = _build_card(audit, metric, state_q, request)
        return built.to_payload()

    @app.get("/card/{audit}/{metric}/tab")
    def card_tab(audit: str, metric: str, request: Request):
        runtime = _audit(audit)
        spec = _metric(runtime, metric)
        timeframe = _parse_timeframe(runtime,
                                     request.query_params.get("from"),
                                     request.query_params.get("to"))
        view = request.query_params.get("view")
        xfield = runtime.config.xfield
        if view == "categories":
            field_name = request.query_params.get("field")
            ftype = runtime.dictionary.field_type(field_name or "")
            if ftype is None:
                raise HTTPException(400, f"unknown category field "
                                         f"{field_name!r}")
            if ftype not in ("nominal", "ordinal", "boolean"):
                raise HTTPException(400, f"field {field_name!r} is {ftype}; "
                                         f"categories need discrete fields")
            dist = breakdown(runtime.table, spec, field_name, timeframe,
                             xfield)
            return {"field": field_name, "distribution": dist.to_json()}
        if view == "quantities":
            field_name = request.query_params.get("field")
            ftype = runtime.dictionary.field_type(field_name or "")
            if ftype is None:
                raise HTTPException(400, f"unknown quantity field "
                                         f"{field_name!r}")
            if ftype != "quantitative":
                raise HTTPException(400, f"field {field_name!r} is {ftype}; "
                                         f"quantities need quantitative fields")
            aggregate = request.query_params.get("aggregate", "average")
            if aggregate not in RULE_KINDS:
                raise HTTPException(400, f"unknown aggregate {aggregate!r}")
            cohort = cohort_ids(runtime.table, spec, timeframe, xfield)
            granularity = (spec.subsidiary.default_granularity
                           or "month")
            series = cardgen._quantity_series(runtime.table, cohort,
                                              field_name, aggregate, xfield,
                                              granularity, timeframe)
            return {"field": field_name, "aggregate": aggregate,
                    "series": series.to_json()}
        if view == "times":
            granularity = request.query_params.get("granularity", "month")
            if granularity not in GRANULARITIES:
                raise HTTPException(400, f"unknown granularity "
                                         f"{granularity!r}")
            times_map = spec.subsidiary.effective_times(spec.measure_names())
            names = times_map.get(granularity) or spec.measure_names()
            anchor = timeframe.end.year
            measures = {name: [s.to_json() for s in yearly_context(
                runtime.table, spec, name, xfield, granularity,
                spec.subsidiary.effective_tspan, anchor)]
                for name in names}
            return {"granularity": granularity, "measures": measures,
                    "tspan": spec.subsidiary.effective_tspan}
        raise HTTPException(400, f"unknown tab view {view!r}")

    @app.post("/card/{audit}/{metric}/brush")
    async def card_brush(audit: str, metric: str, request: Request):
        runtime, built = _build_card(audit, metric, cardgen.ENTRY, request)
        try:
            body = await request.json()
        except json.JSONDecodeError:
            raise HTTPException(400, "body must be JSON") from None
        try:
            selection = cardgen.parse_selection(body, built.granularity)
        except ValueError as exc:
            raise HTTPException(400, str(exc)) from None
        if selection.has_category:
            if runtime.dictionary.field_type(selection.category_field) is None:
                raise HTTPException(400, f"unknown category field "
                                         f"{selection.category_field!r}")
        update = cardgen.resolve_selection(built, selection)
        return update.to_payload()

    @app.post("/card/{audit}/{metric}/export")
    async def card_export(audit: str, metric: str, request: Request):
        runtime, built = _build_card(audit, metric, cardgen.ENTRY, request)
        try:
            body = await request.json()
        except json.JSONDecodeError:
            raise HTTPException(400, "body must be JSON") from None
        try:
            selection = cardgen.parse_selection(body, built.granularity)
        except ValueError as exc:
            raise HTTPException(400, str(exc)) from None
        try:
            export = cardgen.export_selection(built, selection)
        except cardgen.EmptySelectionError as exc:
            raise HTTPException(400, str(exc)) from None
        filename = f"{audit}_{metric}_selection.csv"
        return Response(
            content=export.to_csv(), media_type="text/csv",
            headers={
                "Content-Disposition": f'attachment; filename="{filename}"',
                "X-Selection-Count": str(len(export.rows)),
            })

    @app.post("/logs")
    async def post_log(request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError:
            raise HTTPException(400, "body must be JSON") from None
        try:
            entry = validate_log_entry(body)
        except LogSchemaError as exc:
            raise HTTPException(400, str(exc)) from None
        try:
            state.sink.append(entry)
        except LogSinkError as exc:
            raise HTTPException(507, f"log sink unavailable: {exc}") from None
        return Response(status_code=204)

    @app.post("/admin/reload")
    def admin_reload():
        report = state.reload()
        return JSONResponse(report.to_json())

    if settings.static_dir and os.path.isdir(settings.static_dir):
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=settings.static_dir, html=True),
                  name="ui")

    return app


def run(config_path: Optional[str] = None,
        bind: Optional[str] = None) -> None:
    """Start uvicorn on the configured bind address (loopback by default)."""
    import uvicorn

    path = config_path or os.environ.get(ENV_CONFIG)
    if not path:
        raise ServerConfigError(
            f"no server config; pass a path or set {ENV_CONFIG}")
    settings = load_settings(path)
    if bind:
        settings = Settings(audits=settings.audits, bind=bind,
                            log_path=settings.log_path,
                            static_dir=settings.static_dir,
                            config_path=settings.config_path)
    app = create_app(settings=settings)
    host, port = settings.host_port
    uvicorn.run(app, host=host, port=port, log_level="info")
