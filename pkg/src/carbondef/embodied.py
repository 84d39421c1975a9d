"""Embodied-carbon attribution ledger.

Lifecycle emissions of a physical object (manufacturing, repair,
end-of-life) are attributed to consumers proportionally to how long and
how exclusively they used it during its lifespan. Sharing is expressed
as a step function of fractions in [0, 1]; a single full-lifespan step
of fraction 1 is plain unshared use. Whatever no consumer claims is the
object's idle residual: reported, never allocated to anyone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .errors import (
    DurationError,
    FractionError,
    LedgerReferenceError,
    OversubscriptionError,
    ProfileOutOfLifespan,
    UnknownObject,
)

OVERSUBSCRIPTION_TOL = 1e-9


@dataclass(frozen=True)
class EmbodiedObject:
    """A physical object with lifecycle emissions and a usable lifespan."""

    id: str
    m_kg: float
    r_kg: float
    eol_kg: float
    lifespan_start: int
    lifespan_s: float

    def __post_init__(self):
        if self.m_kg < 0 or self.r_kg < 0 or self.eol_kg < 0:
            raise ValueError("lifecycle emissions must be >= 0")
        if self.lifespan_s <= 0:
            raise ValueError(f"lifespan_s must be > 0, got {self.lifespan_s}")

    @property
    def lifespan_end(self) -> float:
        return self.lifespan_start + self.lifespan_s


@dataclass(frozen=True)
class ProfileStep:
    """Constant sharing fraction over one half-open interval."""

    start: int
    end: int
    fraction: float

    def __post_init__(self):
        if self.end <= self.start:
            raise ValueError(f"profile step end {self.end} <= start {self.start}")
        if not 0.0 <= self.fraction <= 1.0:
            raise FractionError(f"fraction must be within [0, 1], got {self.fraction}")

    @property
    def duration_s(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class SharingProfile:
    """Sorted, non-overlapping sharing steps."""

    steps: tuple[ProfileStep, ...]

    def __post_init__(self):
        previous_end = None
        for step in self.steps:
            if previous_end is not None and step.start < previous_end:
                raise ValueError(
                    f"profile steps unsorted or overlapping at start={step.start}"
                )
            previous_end = step.end

    def weighted_seconds(self) -> float:
        """Sum of fraction x duration over all steps."""
        return sum(step.fraction * step.duration_s for step in self.steps)

    def span(self) -> tuple[int, int] | None:
        if not self.steps:
            return None
        return self.steps[0].start, self.steps[-1].end


@dataclass(frozen=True)
class ConsumptionRecord:
    """One consumer's claim on one object over time."""

    consumer_id: str
    object_id: str
    profile: SharingProfile


def full_use_profile(obj: EmbodiedObject) -> SharingProfile:
    """Fraction-1 profile over the whole lifespan (the unshared case)."""
    return SharingProfile(
        steps=(ProfileStep(obj.lifespan_start, int(obj.lifespan_end), 1.0),)
    )


@dataclass(frozen=True)
class Ledger:
    """Objects plus consumption records; build with :meth:`build`.

    Built single-writer and then treated as immutable; queries are pure.
    """

    objects: dict[str, EmbodiedObject]
    records: tuple[ConsumptionRecord, ...] = field(default=())

    @classmethod
    def build(
        cls,
        objects: Iterable[EmbodiedObject],
        records: Iterable[ConsumptionRecord],
    ) -> Ledger:
        """Validate cross-references, lifespan containment, and sharing caps.

        Raises:
            ValueError: duplicate object id.
            LedgerReferenceError: record referencing an unknown object.
            ProfileOutOfLifespan: profile outside the object's lifespan.
            OversubscriptionError: instantaneous fractions on one object
                summing past 1 (within 1e-9).
        """
        by_id: dict[str, EmbodiedObject] = {}
        for obj in objects:
            if obj.id in by_id:
                raise ValueError(f"duplicate object id {obj.id!r}")
            by_id[obj.id] = obj

        record_tuple = tuple(records)
        for index, record in enumerate(record_tuple):
            obj = by_id.get(record.object_id)
            if obj is None:
                raise LedgerReferenceError(
                    f"record references unknown object {record.object_id!r}",
                    location=f"records[{index}]",
                )
            span = record.profile.span()
            if span is not None and (
                span[0] < obj.lifespan_start or span[1] > obj.lifespan_end
            ):
                raise ProfileOutOfLifespan(
                    f"records[{index}]: profile [{span[0]}, {span[1]}) outside "
                    f"lifespan [{obj.lifespan_start}, {obj.lifespan_end}) of {obj.id!r}"
                )

        for object_id in by_id:
            _check_oversubscription(object_id, record_tuple)
        return cls(objects=by_id, records=record_tuple)

    def records_for_object(self, object_id: str) -> tuple[ConsumptionRecord, ...]:
        return tuple(r for r in self.records if r.object_id == object_id)

    def records_for_consumer(self, consumer_id: str) -> tuple[ConsumptionRecord, ...]:
        return tuple(r for r in self.records if r.consumer_id == consumer_id)

    def consumer_ids(self) -> tuple[str, ...]:
        return tuple(sorted({r.consumer_id for r in self.records}))


def _check_oversubscription(object_id: str, records: tuple[ConsumptionRecord, ...]) -> None:
    """Sweep all step boundaries of one object; fractions may never sum past 1."""
    steps = [
        step
        for record in records
        if record.object_id == object_id
        for step in record.profile.steps
    ]
    boundaries = sorted({edge for step in steps for edge in (step.start, step.end)})
    for left, right in zip(boundaries, boundaries[1:]):
        total = sum(
            step.fraction for step in steps if step.start <= left and step.end >= right
        )
        if total > 1.0 + OVERSUBSCRIPTION_TOL:
            raise OversubscriptionError(object_id, left, total)


def lifecycle_total(obj: EmbodiedObject) -> float:
    """Manufacturing + repair + end-of-life emissions, kg CO2e."""
    return obj.m_kg + obj.r_kg + obj.eol_kg


def attribute_simple(obj: EmbodiedObject, consumed_s: float) -> float:
    """Time-proportional attribution for exclusive use."""
    if consumed_s < 0 or consumed_s > obj.lifespan_s:
        raise DurationError(
            f"consumed_s={consumed_s} outside [0, {obj.lifespan_s}] for {obj.id!r}"
        )
    return lifecycle_total(obj) * consumed_s / obj.lifespan_s


def attribute_shared(obj: EmbodiedObject, record: ConsumptionRecord) -> float:
    """Attribution weighted by the record's sharing fractions.

    A constant fraction-1 profile reproduces attribute_simple exactly.
    """
    span = record.profile.span()
    if span is not None and (span[0] < obj.lifespan_start or span[1] > obj.lifespan_end):
        raise ProfileOutOfLifespan(
            f"profile [{span[0]}, {span[1]}) outside lifespan "
            f"[{obj.lifespan_start}, {obj.lifespan_end}) of {obj.id!r}"
        )
    return lifecycle_total(obj) * record.profile.weighted_seconds() / obj.lifespan_s


@dataclass(frozen=True)
class ConsumerAttribution:
    """Per-consumer embodied total with per-object breakdown."""

    consumer_id: str
    total_kg: float
    by_object: dict[str, float]


def consumer_embodied(ledger: Ledger, consumer_id: str) -> ConsumerAttribution:
    """Sum attributions over all of one consumer's records.

    An unknown consumer yields zero, not an error.
    """
    by_object: dict[str, float] = {}
    total = 0.0
    for record in ledger.records_for_consumer(consumer_id):
        kg = attribute_shared(ledger.objects[record.object_id], record)
        by_object[record.object_id] = by_object.get(record.object_id, 0.0) + kg
        total += kg
    return ConsumerAttribution(consumer_id=consumer_id, total_kg=total, by_object=by_object)


def idle_residual(ledger: Ledger, object_id: str) -> float:
    """Lifecycle emissions no consumer claimed for this object."""
    obj = ledger.objects.get(object_id)
    if obj is None:
        raise UnknownObject(f"unknown object {object_id!r}")
    attributed = sum(
        attribute_shared(obj, record) for record in ledger.records_for_object(object_id)
    )
    return lifecycle_total(obj) - attributed
