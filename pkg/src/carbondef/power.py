"""TDP-anchored server power and energy model.

A server is split into four observable components (cpu, mem, io, net).
Full-load CPU power is anchored at TDP times CPU count; the remaining
components are tied to that anchor through a fixed allocation vector,
and every component scales linearly with its usage ratio. An optional
idle baseline is added on top, outside the allocated budget.

All power figures are watts; energy is joules over half-open intervals
[start, start + duration).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .errors import AllocationError, SpecError, TraceOrderError, UsageOutOfRange

COMPONENTS = ("cpu", "mem", "io", "net")

#: per-component energy sources in fixed summation order (reproducibility)
ENERGY_SOURCES = COMPONENTS + ("idle",)

ALPHA_SUM_TOL = 1e-9

USAGE_UNITS = ("bytes", "bytes_per_interval")


@dataclass(frozen=True)
class Allocation:
    """Fractions splitting full-load server energy across components."""

    cpu: float
    mem: float
    io: float
    net: float

    def get(self, component: str) -> float:
        if component not in COMPONENTS:
            raise ValueError(f"unknown component {component!r}")
        return getattr(self, component)


@dataclass(frozen=True)
class UsageLimits:
    """Per-component maximum usage (cpu in cores, others in bytes)."""

    cpu: float
    mem: float
    io: float
    net: float

    def get(self, component: str) -> float:
        if component not in COMPONENTS:
            raise ValueError(f"unknown component {component!r}")
        return getattr(self, component)


@dataclass(frozen=True)
class UnitTags:
    """Declared units for the byte-like usage maxima.

    Tags are checked for consistency only; the model never converts
    between them because only the usage/maximum ratio enters the math.
    """

    mem: str = "bytes"
    io: str = "bytes"
    net: str = "bytes"


@dataclass(frozen=True)
class ServerSpec:
    """Hardware parameters of the modeled server."""

    tdp_watts: float
    n_cpu: int
    alpha: Allocation
    u_max: UsageLimits
    idle_watts: float = 0.0
    u_max_units: UnitTags = field(default_factory=UnitTags)


@dataclass(frozen=True)
class UsageSample:
    """Resource usage aggregated over one half-open interval."""

    start: int
    duration_s: float
    u_cpu: float
    u_mem: float
    u_io: float
    u_net: float

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValueError(f"duration_s must be > 0, got {self.duration_s}")
        for component in COMPONENTS:
            if self.usage(component) < 0:
                raise ValueError(f"u_{component} must be >= 0")

    @property
    def end(self) -> float:
        return self.start + self.duration_s

    def usage(self, component: str) -> float:
        if component not in COMPONENTS:
            raise ValueError(f"unknown component {component!r}")
        return getattr(self, f"u_{component}")


@dataclass(frozen=True)
class UsageTrace:
    """Sorted, non-overlapping usage samples.

    ``source_rows`` keeps the originating input row per sample so later
    diagnostics (clamping, range errors) can name the offending line.
    """

    samples: tuple[UsageSample, ...]
    source_rows: tuple[int, ...] | None = None

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[UsageSample]:
        return iter(self.samples)


@dataclass(frozen=True)
class PowerBreakdown:
    """Instantaneous power split by source; total is the fixed-order sum."""

    cpu_w: float
    mem_w: float
    io_w: float
    net_w: float
    idle_w: float
    total_w: float

    def get(self, source: str) -> float:
        if source not in ENERGY_SOURCES:
            raise ValueError(f"unknown source {source!r}")
        return getattr(self, f"{source}_w")


@dataclass(frozen=True)
class EnergyEntry:
    """Energy over one half-open interval, with per-source breakdown."""

    start: int
    duration_s: float
    joules_total: float
    joules_by_component: dict[str, float]

    @property
    def end(self) -> float:
        return self.start + self.duration_s


@dataclass(frozen=True)
class EnergySeries:
    """Ordered, non-overlapping energy entries."""

    entries: tuple[EnergyEntry, ...]

    def __post_init__(self):
        previous_end = None
        for entry in self.entries:
            if previous_end is not None and entry.start < previous_end:
                raise ValueError(
                    f"energy entries unsorted or overlapping at start={entry.start}"
                )
            if entry.joules_total < 0 or any(
                j < 0 for j in entry.joules_by_component.values()
            ):
                raise ValueError("energy values must be >= 0")
            previous_end = entry.end

    def __len__(self) -> int:
        return len(self.entries)

    def total_joules(self) -> float:
        return sum(entry.joules_total for entry in self.entries)

    def window(self) -> tuple[float, float] | None:
        """(start of first entry, end of last entry), or None when empty."""
        if not self.entries:
            return None
        return self.entries[0].start, self.entries[-1].end


def validate_spec(spec: ServerSpec) -> ServerSpec:
    """Check every ServerSpec invariant; return the spec unchanged.

    Raises:
        SpecError: non-positive tdp/n_cpu/u_max, negative idle power,
            or an unknown usage-unit tag.
        AllocationError: allocation entry negative, cpu share zero, or
            the entries do not sum to 1 within 1e-9.
    """
    if spec.tdp_watts <= 0:
        raise SpecError(f"tdp_watts must be > 0, got {spec.tdp_watts}")
    if int(spec.n_cpu) != spec.n_cpu or spec.n_cpu < 1:
        raise SpecError(f"n_cpu must be an integer >= 1, got {spec.n_cpu}")
    for component in COMPONENTS:
        if spec.u_max.get(component) <= 0:
            raise SpecError(f"u_max.{component} must be > 0")
    if spec.idle_watts < 0:
        raise SpecError(f"idle_watts must be >= 0, got {spec.idle_watts}")

    for component in COMPONENTS:
        if spec.alpha.get(component) < 0:
            raise AllocationError(f"alpha.{component} must be >= 0")
    if spec.alpha.cpu <= 0:
        raise AllocationError("alpha.cpu must be > 0")
    total = spec.alpha.cpu + spec.alpha.mem + spec.alpha.io + spec.alpha.net
    if abs(total - 1.0) > ALPHA_SUM_TOL:
        raise AllocationError(f"alpha entries sum to {total!r}, expected 1")

    for component in ("mem", "io", "net"):
        tag = getattr(spec.u_max_units, component)
        if tag not in USAGE_UNITS:
            raise SpecError(f"u_max_units.{component} must be one of {USAGE_UNITS}")
    return spec


def _usage_ratio(spec: ServerSpec, sample: UsageSample, component: str, clamp: bool) -> float:
    usage = sample.usage(component)
    limit = spec.u_max.get(component)
    if usage > limit:
        if not clamp:
            raise UsageOutOfRange(
                f"u_{component}={usage} exceeds u_max.{component}={limit}"
            )
        usage = limit
    return usage / limit


def component_power(spec: ServerSpec, sample: UsageSample, clamp: bool = False) -> PowerBreakdown:
    """Instantaneous power for one usage sample.

    CPU power is (usage / max) of the full-load anchor tdp_watts * n_cpu;
    each other component gets the same linear ramp scaled by its share of
    the allocation vector relative to the cpu share. The idle baseline is
    charged unconditionally.

    Raises UsageOutOfRange when a usage exceeds its maximum and ``clamp``
    is False; with ``clamp`` the usage is cut to the maximum instead.
    """
    anchor = spec.tdp_watts * spec.n_cpu
    cpu_w = _usage_ratio(spec, sample, "cpu", clamp) * anchor
    mem_w = _usage_ratio(spec, sample, "mem", clamp) * (spec.alpha.mem / spec.alpha.cpu) * anchor
    io_w = _usage_ratio(spec, sample, "io", clamp) * (spec.alpha.io / spec.alpha.cpu) * anchor
    net_w = _usage_ratio(spec, sample, "net", clamp) * (spec.alpha.net / spec.alpha.cpu) * anchor
    idle_w = spec.idle_watts
    total_w = cpu_w + mem_w + io_w + net_w + idle_w
    return PowerBreakdown(
        cpu_w=cpu_w, mem_w=mem_w, io_w=io_w, net_w=net_w, idle_w=idle_w, total_w=total_w
    )


def marginal_power(spec: ServerSpec, component: str) -> float:
    """Constant marginal power per usage unit of ``component``.

    Because the ramps are linear this is exactly the derivative of
    component power with respect to usage: tdp*n_cpu/u_max for cpu, the
    allocation-scaled equivalent for the others.
    """
    anchor = spec.tdp_watts * spec.n_cpu
    if component == "cpu":
        return anchor / spec.u_max.cpu
    if component in COMPONENTS:
        return (spec.alpha.get(component) / spec.alpha.cpu) * anchor / spec.u_max.get(component)
    raise ValueError(f"unknown component {component!r}")


def energy_over_interval(spec: ServerSpec, sample: UsageSample, clamp: bool = False) -> EnergyEntry:
    """Energy for one sample, treating usage as constant over the interval."""
    power = component_power(spec, sample, clamp=clamp)
    joules = {
        source: power.get(source) * sample.duration_s for source in ENERGY_SOURCES
    }
    total = (
        joules["cpu"] + joules["mem"] + joules["io"] + joules["net"] + joules["idle"]
    )
    return EnergyEntry(
        start=sample.start,
        duration_s=sample.duration_s,
        joules_total=total,
        joules_by_component=joules,
    )


def trace_to_energy_series(
    spec: ServerSpec,
    trace: UsageTrace | Sequence[UsageSample],
    clamp: bool = False,
) -> EnergySeries:
    """Convert a whole trace to an energy series, one entry per sample.

    Raises:
        TraceOrderError: samples unsorted or overlapping.
        UsageOutOfRange: some usage exceeds its maximum (clamp off);
            the message names the offending sample index.
    """
    samples = trace.samples if isinstance(trace, UsageTrace) else tuple(trace)
    previous_end = None
    for index, sample in enumerate(samples):
        if previous_end is not None and sample.start < previous_end:
            raise TraceOrderError(
                f"sample {index} starts at {sample.start}, before previous end {previous_end}"
            )
        previous_end = sample.end

    entries = []
    for index, sample in enumerate(samples):
        try:
            entries.append(energy_over_interval(spec, sample, clamp=clamp))
        except UsageOutOfRange as exc:
            raise UsageOutOfRange(f"sample {index}: {exc}") from exc
    return EnergySeries(entries=tuple(entries))


def clamped_sample_indices(spec: ServerSpec, trace: UsageTrace | Sequence[UsageSample]) -> list[int]:
    """Indices of samples with any usage above its maximum (diagnostics)."""
    samples = trace.samples if isinstance(trace, UsageTrace) else tuple(trace)
    return [
        index
        for index, sample in enumerate(samples)
        if any(sample.usage(c) > spec.u_max.get(c) for c in COMPONENTS)
    ]
