"""Composition of operational and embodied emissions into totals and SCI.

Total carbon is operational plus embodied; the SCI score divides that by
a caller-supplied functional-unit count (API calls, users, jobs). The
software/overhead energy split is defined through PUE alone: software
energy is the pre-PUE total (idle included), overhead is what PUE adds.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NegativeInput, ZeroFunctionalUnits
from .grid import PueFactor, apply_pue


@dataclass(frozen=True)
class CarbonTotals:
    operational_kg: float
    embodied_kg: float
    total_kg: float
    functional_unit_name: str
    functional_unit_count: float
    sci_kg_per_unit: float


def total_carbon(operational_kg: float, embodied_kg: float) -> float:
    if operational_kg < 0 or embodied_kg < 0:
        raise NegativeInput(
            f"emissions must be >= 0, got ({operational_kg}, {embodied_kg})"
        )
    return operational_kg + embodied_kg


def sci(total_kg: float, functional_units: float) -> float:
    """Carbon per functional unit."""
    if functional_units <= 0:
        raise ZeroFunctionalUnits(
            f"functional_units must be > 0, got {functional_units}"
        )
    return total_kg / functional_units


def overhead_split(joules: float, pue: PueFactor) -> tuple[float, float]:
    """Split facility energy into (software, overhead) joules.

    Software energy is the measured pre-PUE total; overhead is the PUE
    surplus, computed so that software + overhead (in that order) equals
    the PUE-scaled total.
    """
    software = joules
    overhead = apply_pue(joules, pue) - joules
    return software, overhead


def compose_totals(
    operational_kg: float,
    embodied_kg: float,
    functional_unit_name: str,
    functional_unit_count: float,
) -> CarbonTotals:
    total = total_carbon(operational_kg, embodied_kg)
    return CarbonTotals(
        operational_kg=operational_kg,
        embodied_kg=embodied_kg,
        total_kg=total,
        functional_unit_name=functional_unit_name,
        functional_unit_count=functional_unit_count,
        sci_kg_per_unit=sci(total, functional_unit_count),
    )
