"""Grid carbon-intensity integration.

Energy intervals rarely line up with the (typically 30-minute) update
windows of a grid intensity feed, so each energy interval is split at
intensity boundaries before multiplying. Energy is assumed uniform
within its own interval; intensity is a step function, constant per
feed entry. Intervals are half-open [start, end) everywhere, so a
boundary instant belongs to the later interval.

Facility overhead enters as a single PUE multiplier applied to total
energy, idle baseline included.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from functools import cached_property

from .errors import CoverageError, OracleResolutionError
from .power import EnergySeries

#: exact joule content of one kilowatt-hour
JOULES_PER_KWH = 3.6e6

COVERAGE_POLICIES = ("strict", "skip_uncovered")


@dataclass(frozen=True)
class IntensityEntry:
    """Grid carbon intensity over one half-open window [start, end)."""

    start: int
    end: int
    intensity_kg_per_kwh: float

    def __post_init__(self):
        if self.end <= self.start:
            raise ValueError(f"intensity entry end {self.end} <= start {self.start}")
        if self.intensity_kg_per_kwh < 0:
            raise ValueError("intensity must be >= 0")


@dataclass(frozen=True)
class IntensitySeries:
    """Piecewise-constant intensity for one region; gaps are allowed."""

    region: str
    entries: tuple[IntensityEntry, ...]

    def __post_init__(self):
        previous_end = None
        for entry in self.entries:
            if previous_end is not None and entry.start < previous_end:
                raise ValueError(
                    f"intensity entries unsorted or overlapping at start={entry.start}"
                )
            previous_end = entry.end

    @cached_property
    def _starts(self) -> list[int]:
        return [entry.start for entry in self.entries]

    def value_at(self, t: float) -> float | None:
        """Intensity at instant t, or None when t falls in a gap."""
        index = bisect.bisect_right(self._starts, t) - 1
        if index < 0:
            return None
        entry = self.entries[index]
        return entry.intensity_kg_per_kwh if t < entry.end else None


@dataclass(frozen=True)
class PueFactor:
    """Facility-wide overhead ratio, total energy over IT energy."""

    value: float

    def __post_init__(self):
        if self.value < 1.0:
            raise ValueError(f"PUE must be >= 1, got {self.value}")


@dataclass(frozen=True)
class Segment:
    """Slice of one energy interval lying inside one intensity window."""

    start: float
    duration_s: float
    joules_share: float
    intensity_kg_per_kwh: float


@dataclass(frozen=True)
class UncoveredSpan:
    """Slice of an energy interval with no intensity coverage."""

    start: float
    duration_s: float
    joules_share: float


@dataclass(frozen=True)
class EmissionsSegment:
    """Per-segment emissions row of a report."""

    start: float
    duration_s: float
    joules: float
    intensity_kg_per_kwh: float
    kg_co2e: float


@dataclass(frozen=True)
class EmissionsReport:
    """Operational emissions with per-segment breakdown and diagnostics."""

    total_kg_co2e: float
    pue: float
    coverage_policy: str
    segments: tuple[EmissionsSegment, ...]
    uncovered: tuple[UncoveredSpan, ...]

    def covered_joules(self) -> float:
        return sum(segment.joules for segment in self.segments)

    def uncovered_joules(self) -> float:
        return sum(span.joules_share for span in self.uncovered)


def apply_pue(joules: float, pue: PueFactor) -> float:
    """Scale IT energy up to facility energy."""
    if joules < 0:
        raise ValueError(f"joules must be >= 0, got {joules}")
    return joules * pue.value


def align_segments(
    energy: EnergySeries, intensity: IntensitySeries
) -> tuple[tuple[Segment, ...], tuple[UncoveredSpan, ...]]:
    """Split energy intervals at intensity boundaries.

    Each returned segment lies inside exactly one energy interval and one
    intensity window; its joules share is the interval's energy prorated
    by duration. Spans without intensity coverage come back separately,
    never silently dropped.
    """
    segments: list[Segment] = []
    uncovered: list[UncoveredSpan] = []
    entries = intensity.entries
    starts = [entry.start for entry in entries]

    for interval in energy.entries:
        interval_end = interval.start + interval.duration_s
        rate = interval.joules_total / interval.duration_s
        cursor = interval.start

        # first entry that could overlap: the one covering cursor, else the next
        index = bisect.bisect_right(starts, cursor) - 1
        if index < 0 or entries[index].end <= cursor:
            index += 1

        while index < len(entries) and entries[index].start < interval_end:
            entry = entries[index]
            overlap_start = max(cursor, entry.start)
            if overlap_start > cursor:
                uncovered.append(
                    UncoveredSpan(cursor, overlap_start - cursor, rate * (overlap_start - cursor))
                )
            overlap_end = min(interval_end, entry.end)
            segments.append(
                Segment(
                    start=overlap_start,
                    duration_s=overlap_end - overlap_start,
                    joules_share=interval.joules_total
                    * ((overlap_end - overlap_start) / interval.duration_s),
                    intensity_kg_per_kwh=entry.intensity_kg_per_kwh,
                )
            )
            cursor = overlap_end
            index += 1
        if cursor < interval_end:
            uncovered.append(
                UncoveredSpan(cursor, interval_end - cursor, rate * (interval_end - cursor))
            )
    return tuple(segments), tuple(uncovered)


def operational_emissions(
    energy: EnergySeries,
    intensity: IntensitySeries,
    pue: PueFactor,
    coverage_policy: str = "strict",
) -> EmissionsReport:
    """Integrate energy against the intensity step function.

    Total kg CO2e is pue * sum over segments of intensity * kWh. In
    ``strict`` mode any span of the energy series outside intensity
    coverage raises CoverageError; ``skip_uncovered`` excludes such spans
    from the total and reports them in the diagnostics. An empty energy
    series yields a zero-total report in either mode.
    """
    if coverage_policy not in COVERAGE_POLICIES:
        raise ValueError(f"coverage_policy must be one of {COVERAGE_POLICIES}")

    segments, uncovered = align_segments(energy, intensity)
    if coverage_policy == "strict" and uncovered:
        gap = uncovered[0]
        raise CoverageError(
            f"no intensity coverage for [{gap.start}, {gap.start + gap.duration_s}) "
            f"({gap.joules_share} J); {len(uncovered)} uncovered span(s) total"
        )

    rows = []
    total_kg = 0.0
    for segment in segments:
        kg = pue.value * (
            segment.intensity_kg_per_kwh * segment.joules_share / JOULES_PER_KWH
        )
        rows.append(
            EmissionsSegment(
                start=segment.start,
                duration_s=segment.duration_s,
                joules=segment.joules_share,
                intensity_kg_per_kwh=segment.intensity_kg_per_kwh,
                kg_co2e=kg,
            )
        )
        total_kg += kg
    return EmissionsReport(
        total_kg_co2e=total_kg,
        pue=pue.value,
        coverage_policy=coverage_policy,
        segments=tuple(rows),
        uncovered=uncovered,
    )


def oracle_emissions(
    energy: EnergySeries, intensity: IntensitySeries, pue: PueFactor
) -> float:
    """Reference result by brute-force 1-second enumeration.

    Spreads each interval's joules uniformly over its seconds, looks up
    that second's intensity independently, and sums. Seconds without
    coverage are skipped, mirroring the skip_uncovered policy. Kept
    deliberately naive; only tests should call this.
    """
    for interval in energy.entries:
        if not float(interval.start).is_integer() or not float(interval.duration_s).is_integer():
            raise OracleResolutionError(
                f"energy boundary off the whole-second grid at start={interval.start}"
            )
    for entry in intensity.entries:
        if not float(entry.start).is_integer() or not float(entry.end).is_integer():
            raise OracleResolutionError(
                f"intensity boundary off the whole-second grid at start={entry.start}"
            )

    total = 0.0
    for interval in energy.entries:
        joules_per_second = interval.joules_total / interval.duration_s
        for second in range(int(interval.start), int(interval.start + interval.duration_s)):
            value = intensity.value_at(second)
            if value is None:
                continue
            total += value * joules_per_second
    return pue.value * total / JOULES_PER_KWH
