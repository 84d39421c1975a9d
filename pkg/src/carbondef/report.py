"""Report assembly and serialization for the CLI.

Reports are plain dicts with a fixed section order, serialized once at
the end of a run. Internals stay in joules; user-facing numbers are kWh
and kg CO2e, converted here. Output is deterministic: floats use the
shortest round-trip decimal form and metadata carries input digests and
the data window rather than wall-clock time, so identical inputs produce
byte-identical bytes.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from typing import Any

from . import __version__
from .embodied import Ledger, consumer_embodied, idle_residual, lifecycle_total
from .grid import (
    JOULES_PER_KWH,
    EmissionsReport,
    IntensitySeries,
    operational_emissions,
)
from .ingest import RunConfig, fetch_intensity, parse_intensity_feed
from .power import (
    ENERGY_SOURCES,
    EnergySeries,
    UsageTrace,
    clamped_sample_indices,
    trace_to_energy_series,
)
from .sci import compose_totals, overhead_split
from .errors import SchemaError

SCHEMA_VERSION = "1"


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _kwh(joules: float) -> float:
    return joules / JOULES_PER_KWH


def _meta(
    report_type: str,
    config: RunConfig | None = None,
    trace_digest: str | None = None,
    ledger_digest: str | None = None,
    window: tuple[float, float] | None = None,
) -> dict[str, Any]:
    return {
        "tool": "carbondef",
        "version": __version__,
        "report": report_type,
        "config_sha256": config.digest if config is not None else None,
        "inputs": {"trace_sha256": trace_digest, "ledger_sha256": ledger_digest},
        "window": None if window is None else {"start": window[0], "end": window[1]},
    }


def _energy_section(series: EnergySeries) -> dict[str, Any]:
    by_component = {
        source: _kwh(sum(e.joules_by_component[source] for e in series.entries))
        for source in ENERGY_SOURCES
    }
    return {
        "interval_count": len(series),
        "kwh_total": _kwh(series.total_joules()),
        "kwh_by_component": by_component,
        "intervals": [
            {
                "start": entry.start,
                "duration_s": entry.duration_s,
                "kwh_total": _kwh(entry.joules_total),
                "kwh_by_component": {
                    source: _kwh(entry.joules_by_component[source])
                    for source in ENERGY_SOURCES
                },
            }
            for entry in series.entries
        ],
    }


def _operational_section(
    emissions: EmissionsReport, series: EnergySeries, config: RunConfig, region: str
) -> dict[str, Any]:
    software_j, overhead_j = overhead_split(series.total_joules(), config.pue)
    return {
        "pue": emissions.pue,
        "coverage_policy": emissions.coverage_policy,
        "region": region,
        "total_kg_co2e": emissions.total_kg_co2e,
        "software_kwh": _kwh(software_j),
        "overhead_kwh": _kwh(overhead_j),
        "segments": [
            {
                "start": segment.start,
                "duration_s": segment.duration_s,
                "kwh": _kwh(segment.joules),
                "intensity_kg_per_kwh": segment.intensity_kg_per_kwh,
                "kg_co2e": segment.kg_co2e,
            }
            for segment in emissions.segments
        ],
        "uncovered": [
            {
                "start": span.start,
                "duration_s": span.duration_s,
                "kwh": _kwh(span.joules_share),
            }
            for span in emissions.uncovered
        ],
    }


def _embodied_section(ledger: Ledger, consumer_id: str | None = None) -> dict[str, Any]:
    consumer_ids = (
        (consumer_id,) if consumer_id is not None else ledger.consumer_ids()
    )
    consumers = []
    total_attributed = 0.0
    for cid in consumer_ids:
        attribution = consumer_embodied(ledger, cid)
        consumers.append(
            {
                "consumer_id": cid,
                "kg_co2e": attribution.total_kg,
                "objects": [
                    {"object_id": oid, "kg_co2e": kg}
                    for oid, kg in sorted(attribution.by_object.items())
                ],
            }
        )
        total_attributed += attribution.total_kg

    objects = []
    lifecycle_sum = 0.0
    conserved_sum = 0.0
    for oid in sorted(ledger.objects):
        obj = ledger.objects[oid]
        residual = idle_residual(ledger, oid)
        lifecycle = lifecycle_total(obj)
        attributed = lifecycle - residual
        objects.append(
            {
                "object_id": oid,
                "lifecycle_kg_co2e": lifecycle,
                "attributed_kg_co2e": attributed,
                "idle_residual_kg_co2e": residual,
            }
        )
        lifecycle_sum += lifecycle
        conserved_sum += attributed + residual

    return {
        "consumers": consumers,
        "objects": objects,
        "total_attributed_kg_co2e": total_attributed,
        "conservation": {
            "lifecycle_total_kg_co2e": lifecycle_sum,
            "attributed_plus_residual_kg_co2e": conserved_sum,
        },
    }


def _diagnostics(
    config: RunConfig | None,
    trace: UsageTrace | None,
    emissions: EmissionsReport | None,
) -> dict[str, Any]:
    clamped: list[dict[str, Any]] = []
    if config is not None and trace is not None and config.clamp_usage:
        rows = trace.source_rows
        clamped = [
            {"index": index, "row": rows[index] if rows is not None else None}
            for index in clamped_sample_indices(config.server, trace)
        ]
    uncovered = []
    if emissions is not None:
        uncovered = [
            {
                "start": span.start,
                "duration_s": span.duration_s,
                "kwh": _kwh(span.joules_share),
            }
            for span in emissions.uncovered
        ]
    return {"clamped_samples": clamped, "uncovered_intervals": uncovered}


def resolve_intensity(
    config: RunConfig,
    window: tuple[float, float] | None,
    cache_dir: str | None = None,
) -> IntensitySeries:
    """Load the intensity series named by the config, file or endpoint."""
    source = config.intensity
    if source.file is not None:
        return parse_intensity_feed(config.intensity_file().read_bytes())
    if window is None:
        # nothing to fetch for; strict coverage of zero energy is vacuous
        return IntensitySeries(region=source.region, entries=())
    fetch_window = (int(math.floor(window[0])), int(math.ceil(window[1])))
    return fetch_intensity(source.endpoint, source.region, fetch_window, cache_dir)


def build_estimate_report(
    config: RunConfig, trace: UsageTrace, trace_digest: str
) -> dict[str, Any]:
    series = trace_to_energy_series(config.server, trace, clamp=config.clamp_usage)
    return {
        "schema_version": SCHEMA_VERSION,
        "meta": _meta("estimate", config, trace_digest, window=series.window()),
        "energy": _energy_section(series),
        "diagnostics": _diagnostics(config, trace, None),
    }


def build_emissions_report(
    config: RunConfig,
    trace: UsageTrace,
    trace_digest: str,
    cache_dir: str | None = None,
) -> dict[str, Any]:
    series = trace_to_energy_series(config.server, trace, clamp=config.clamp_usage)
    intensity = resolve_intensity(config, series.window(), cache_dir)
    emissions = operational_emissions(
        series, intensity, config.pue, config.coverage_policy
    )
    return {
        "schema_version": SCHEMA_VERSION,
        "meta": _meta("emissions", config, trace_digest, window=series.window()),
        "energy": _energy_section(series),
        "operational": _operational_section(emissions, series, config, intensity.region),
        "diagnostics": _diagnostics(config, trace, emissions),
    }


def build_embodied_report(
    ledger: Ledger, ledger_digest: str, consumer_id: str | None = None
) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "meta": _meta("embodied", ledger_digest=ledger_digest),
        "embodied": _embodied_section(ledger, consumer_id),
    }


def build_full_report(
    config: RunConfig,
    trace: UsageTrace,
    trace_digest: str,
    ledger: Ledger,
    ledger_digest: str,
    consumer_id: str | None = None,
    cache_dir: str | None = None,
) -> dict[str, Any]:
    if config.functional_unit is None:
        raise SchemaError(
            "a functional_unit is required for the full report",
            location="$.functional_unit",
        )
    series = trace_to_energy_series(config.server, trace, clamp=config.clamp_usage)
    intensity = resolve_intensity(config, series.window(), cache_dir)
    emissions = operational_emissions(
        series, intensity, config.pue, config.coverage_policy
    )
    embodied = _embodied_section(ledger, consumer_id)
    totals = compose_totals(
        operational_kg=emissions.total_kg_co2e,
        embodied_kg=embodied["total_attributed_kg_co2e"],
        functional_unit_name=config.functional_unit.name,
        functional_unit_count=config.functional_unit.count,
    )
    return {
        "schema_version": SCHEMA_VERSION,
        "meta": _meta("report", config, trace_digest, ledger_digest, series.window()),
        "energy": _energy_section(series),
        "operational": _operational_section(emissions, series, config, intensity.region),
        "embodied": embodied,
        "sci": {
            "operational_kg_co2e": totals.operational_kg,
            "embodied_kg_co2e": totals.embodied_kg,
            "total_kg_co2e": totals.total_kg,
            "functional_unit": {
                "name": totals.functional_unit_name,
                "count": totals.functional_unit_count,
            },
            "sci_kg_co2e_per_unit": totals.sci_kg_per_unit,
        },
        "diagnostics": _diagnostics(config, trace, emissions),
    }


def to_json_bytes(report: dict[str, Any]) -> bytes:
    return (json.dumps(report, indent=2) + "\n").encode("utf-8")


def _csv_bytes(header: list[str], rows: list[list[Any]]) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue().encode("utf-8")


def to_csv_bytes(report: dict[str, Any]) -> bytes:
    """Chart-friendly CSV rendering, one row per interval where possible."""
    report_type = report["meta"]["report"]
    if report_type == "estimate":
        return _csv_bytes(
            ["start", "duration_s", "kwh_total", "kwh_cpu", "kwh_mem", "kwh_io", "kwh_net", "kwh_idle"],
            [
                [
                    entry["start"],
                    entry["duration_s"],
                    entry["kwh_total"],
                    *[entry["kwh_by_component"][source] for source in ENERGY_SOURCES],
                ]
                for entry in report["energy"]["intervals"]
            ],
        )
    if report_type == "emissions":
        return _csv_bytes(
            ["start", "duration_s", "kwh", "intensity_kg_per_kwh", "kg_co2e"],
            [
                [
                    segment["start"],
                    segment["duration_s"],
                    segment["kwh"],
                    segment["intensity_kg_per_kwh"],
                    segment["kg_co2e"],
                ]
                for segment in report["operational"]["segments"]
            ],
        )
    if report_type == "embodied":
        rows: list[list[Any]] = []
        section = report["embodied"]
        for consumer in section["consumers"]:
            for item in consumer["objects"]:
                rows.append(
                    ["attribution", consumer["consumer_id"], item["object_id"], item["kg_co2e"]]
                )
        for obj in section["objects"]:
            rows.append(["idle_residual", "", obj["object_id"], obj["idle_residual_kg_co2e"]])
            rows.append(["lifecycle_total", "", obj["object_id"], obj["lifecycle_kg_co2e"]])
        rows.append(
            ["conservation", "", "", section["conservation"]["attributed_plus_residual_kg_co2e"]]
        )
        return _csv_bytes(["record_type", "consumer_id", "object_id", "kg_co2e"], rows)
    if report_type == "report":
        rows = []
        for entry in report["energy"]["intervals"]:
            rows.append(["energy", "", entry["start"], entry["duration_s"], "kwh_total", entry["kwh_total"]])
            for source in ENERGY_SOURCES:
                rows.append(
                    ["energy", "", entry["start"], entry["duration_s"], f"kwh_{source}", entry["kwh_by_component"][source]]
                )
        for segment in report["operational"]["segments"]:
            for metric in ("kwh", "intensity_kg_per_kwh", "kg_co2e"):
                rows.append(
                    ["operational", "", segment["start"], segment["duration_s"], metric, segment[metric]]
                )
        for consumer in report["embodied"]["consumers"]:
            for item in consumer["objects"]:
                rows.append(
                    ["embodied", f"{consumer['consumer_id']}/{item['object_id']}", "", "", "kg_co2e", item["kg_co2e"]]
                )
        for obj in report["embodied"]["objects"]:
            rows.append(
                ["embodied", obj["object_id"], "", "", "idle_residual_kg_co2e", obj["idle_residual_kg_co2e"]]
            )
        sci = report["sci"]
        for metric in ("operational_kg_co2e", "embodied_kg_co2e", "total_kg_co2e", "sci_kg_co2e_per_unit"):
            rows.append(["sci", sci["functional_unit"]["name"], "", "", metric, sci[metric]])
        return _csv_bytes(["section", "id", "start", "duration_s", "metric", "value"], rows)
    raise ValueError(f"unknown report type {report_type!r}")


def render_report(report: dict[str, Any], output: str) -> bytes:
    if output == "json":
        return to_json_bytes(report)
    if output == "csv":
        return to_csv_bytes(report)
    raise ValueError(f"output must be 'json' or 'csv', got {output!r}")
