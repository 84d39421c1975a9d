import random

import pytest
from hypothesis import given, settings, strategies as st

from carbondef import (
    EnergySeries,
    IntensityEntry,
    IntensitySeries,
    PueFactor,
    align_segments,
    apply_pue,
    operational_emissions,
    oracle_emissions,
)
from carbondef.errors import CoverageError, OracleResolutionError
from carbondef.grid import JOULES_PER_KWH

from support import energy_entry, gen_series_pair, rel_close


def one_kwh_series(start=0, duration=3600.0):
    return EnergySeries(entries=(energy_entry(start, duration, JOULES_PER_KWH),))


def constant_intensity(value, start=0, end=3600, region="ZZ"):
    return IntensitySeries(region=region, entries=(IntensityEntry(start, end, value),))


split_intensity = IntensitySeries(
    region="ZZ",
    entries=(IntensityEntry(0, 1800, 0.4), IntensityEntry(1800, 3600, 0.2)),
)

series_pairs = st.integers(0, 10**9).map(lambda seed: gen_series_pair(random.Random(seed)))


class TestApplyPue:
    def test_identity(self):
        assert apply_pue(1000.0, PueFactor(1.0)) == 1000.0

    def test_scaling(self):
        assert apply_pue(1000.0, PueFactor(1.5)) == 1500.0

    def test_zero(self):
        assert apply_pue(0.0, PueFactor(2.0)) == 0.0

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            apply_pue(-1.0, PueFactor(1.0))

    def test_pue_below_one_rejected(self):
        with pytest.raises(ValueError):
            PueFactor(0.9)


class TestAlignSegments:
    def test_aligned_boundaries(self):
        energy = EnergySeries(entries=(energy_entry(0, 3600.0, 720000.0),))
        segments, uncovered = align_segments(energy, constant_intensity(0.4))
        assert len(segments) == 1 and not uncovered
        assert segments[0].joules_share == 720000.0
        assert segments[0].duration_s == 3600.0

    def test_uniform_split(self):
        energy = EnergySeries(entries=(energy_entry(0, 3600.0, 720000.0),))
        segments, uncovered = align_segments(energy, split_intensity)
        assert [s.joules_share for s in segments] == [360000.0, 360000.0]
        assert [s.intensity_kg_per_kwh for s in segments] == [0.4, 0.2]
        assert not uncovered

    def test_partial_coverage(self):
        # per-second oracle: seconds 50..99 carry 1 J each -> 50 J covered,
        # seconds 0..49 uncovered -> 50 J in diagnostics
        energy = EnergySeries(entries=(energy_entry(0, 100.0, 100.0),))
        intensity = constant_intensity(0.3, start=50, end=150)
        segments, uncovered = align_segments(energy, intensity)
        assert len(segments) == 1
        assert (segments[0].start, segments[0].duration_s) == (50, 50.0)
        assert segments[0].joules_share == 50.0
        assert len(uncovered) == 1
        assert (uncovered[0].start, uncovered[0].duration_s) == (0, 50.0)
        assert uncovered[0].joules_share == 50.0

    def test_interior_gap(self):
        energy = EnergySeries(entries=(energy_entry(0, 100.0, 100.0),))
        intensity = IntensitySeries(
            region="ZZ",
            entries=(IntensityEntry(0, 30, 0.5), IntensityEntry(70, 100, 0.5)),
        )
        segments, uncovered = align_segments(energy, intensity)
        assert [(s.start, s.duration_s) for s in segments] == [(0, 30.0), (70, 70.0 - 40.0)]
        assert [(u.start, u.duration_s) for u in uncovered] == [(30, 40.0)]

    def test_entry_spanning_two_intervals(self):
        energy = EnergySeries(
            entries=(energy_entry(0, 100.0, 100.0), energy_entry(100, 100.0, 200.0))
        )
        segments, uncovered = align_segments(energy, constant_intensity(0.1, 0, 200))
        assert not uncovered
        assert [s.joules_share for s in segments] == [100.0, 200.0]

    @settings(max_examples=200)
    @given(series_pairs)
    def test_conservation(self, pair):
        energy, intensity = pair
        segments, uncovered = align_segments(energy, intensity)
        covered = sum(s.joules_share for s in segments)
        missing = sum(u.joules_share for u in uncovered)
        total = energy.total_joules()
        assert total == 0.0 or rel_close(covered + missing, total, 1e-9)

    @settings(max_examples=200)
    @given(series_pairs)
    def test_segments_sorted_and_inside_energy(self, pair):
        energy, intensity = pair
        segments, _ = align_segments(energy, intensity)
        for a, b in zip(segments, segments[1:]):
            assert a.start + a.duration_s <= b.start + 1e-9
        bounds = [(e.start, e.end) for e in energy.entries]
        for segment in segments:
            assert any(
                lo - 1e-9 <= segment.start and segment.start + segment.duration_s <= hi + 1e-9
                for lo, hi in bounds
            )


class TestOperationalEmissions:
    def test_constant_intensity_trivial(self):
        report = operational_emissions(one_kwh_series(), constant_intensity(0.4), PueFactor(1.5))
        assert report.total_kg_co2e == pytest.approx(0.6, rel=1e-12)

    def test_split_intensity_matches_per_second_oracle(self):
        energy = one_kwh_series()
        expected = oracle_emissions(energy, split_intensity, PueFactor(1.5))
        report = operational_emissions(energy, split_intensity, PueFactor(1.5))
        assert rel_close(report.total_kg_co2e, expected, 1e-9)
        assert report.total_kg_co2e == pytest.approx(0.45, rel=1e-9)

    def test_zero_intensity(self):
        report = operational_emissions(one_kwh_series(), constant_intensity(0.0), PueFactor(1.0))
        assert report.total_kg_co2e == 0.0

    def test_empty_energy_zero_report_in_strict_mode(self):
        report = operational_emissions(
            EnergySeries(entries=()), constant_intensity(0.4), PueFactor(1.5), "strict"
        )
        assert report.total_kg_co2e == 0.0
        assert report.segments == () and report.uncovered == ()

    def test_strict_gap_raises_with_interval(self):
        energy = EnergySeries(entries=(energy_entry(0, 100.0, 100.0),))
        intensity = constant_intensity(0.3, start=50, end=150)
        with pytest.raises(CoverageError, match=r"\[0, 50"):
            operational_emissions(energy, intensity, PueFactor(1.0), "strict")

    def test_skip_mode_keeps_uncovered_in_diagnostics(self):
        energy = EnergySeries(entries=(energy_entry(0, 100.0, 100.0),))
        intensity = constant_intensity(0.3, start=50, end=150)
        report = operational_emissions(energy, intensity, PueFactor(1.0), "skip_uncovered")
        assert report.uncovered_joules() == 50.0
        assert report.covered_joules() == 50.0

    def test_total_equals_segment_sum(self):
        report = operational_emissions(one_kwh_series(), split_intensity, PueFactor(1.5))
        assert report.total_kg_co2e == sum(s.kg_co2e for s in report.segments)

    def test_unknown_policy_rejected(self):
        with pytest.raises(ValueError):
            operational_emissions(one_kwh_series(), split_intensity, PueFactor(1.0), "ignore")

    @settings(max_examples=150, deadline=None)
    @given(series_pairs)
    def test_oracle_equivalence(self, pair):
        energy, intensity = pair
        pue = PueFactor(1.4)
        report = operational_emissions(energy, intensity, pue, "skip_uncovered")
        expected = oracle_emissions(energy, intensity, pue)
        assert rel_close(report.total_kg_co2e, expected, 1e-9)

    @settings(max_examples=100)
    @given(series_pairs, st.floats(1.0, 3.0))
    def test_pue_linearity(self, pair, pue):
        energy, intensity = pair
        base = operational_emissions(energy, intensity, PueFactor(1.0), "skip_uncovered")
        scaled = operational_emissions(energy, intensity, PueFactor(pue), "skip_uncovered")
        assert rel_close(scaled.total_kg_co2e, pue * base.total_kg_co2e, 1e-12)

    @settings(max_examples=100)
    @given(
        st.integers(0, 10**9),
        # exact zero plus a physical range; subnormals void any relative claim
        st.one_of(st.just(0.0), st.floats(1e-6, 2.0)),
        st.floats(1.0, 2.5),
    )
    def test_constant_intensity_collapse(self, seed, value, pue):
        energy, _ = gen_series_pair(random.Random(seed), allow_gaps=False)
        window = energy.window()
        intensity = constant_intensity(value, int(window[0]) - 1, int(window[1]) + 1)
        report = operational_emissions(energy, intensity, PueFactor(pue), "strict")
        expected = pue * value * energy.total_joules() / JOULES_PER_KWH
        assert rel_close(report.total_kg_co2e, expected, 1e-12)

    @settings(max_examples=100)
    @given(series_pairs, st.floats(0.0, 0.8))
    def test_monotone_in_intensity(self, pair, bump):
        energy, intensity = pair
        raised = IntensitySeries(
            region=intensity.region,
            entries=tuple(
                IntensityEntry(e.start, e.end, e.intensity_kg_per_kwh + bump)
                for e in intensity.entries
            ),
        )
        low = operational_emissions(energy, intensity, PueFactor(1.2), "skip_uncovered")
        high = operational_emissions(energy, raised, PueFactor(1.2), "skip_uncovered")
        assert high.total_kg_co2e >= low.total_kg_co2e


class TestOracle:
    def test_aligned_case(self):
        value = oracle_emissions(one_kwh_series(), constant_intensity(0.4), PueFactor(1.5))
        assert value == pytest.approx(0.6, rel=1e-12)

    def test_split_case_is_the_derivation(self):
        value = oracle_emissions(one_kwh_series(), split_intensity, PueFactor(1.5))
        # 1.5 * (0.5 kWh * 0.4 + 0.5 kWh * 0.2)
        assert value == pytest.approx(0.45, rel=1e-12)

    def test_zero_energy(self):
        assert oracle_emissions(EnergySeries(entries=()), split_intensity, PueFactor(2.0)) == 0.0

    def test_subsecond_energy_boundary_rejected(self):
        energy = EnergySeries(entries=(energy_entry(0, 10.5, 100.0),))
        with pytest.raises(OracleResolutionError):
            oracle_emissions(energy, constant_intensity(0.4, 0, 60), PueFactor(1.0))

    def test_subsecond_intensity_boundary_rejected(self):
        energy = EnergySeries(entries=(energy_entry(0, 10.0, 100.0),))
        intensity = IntensitySeries(region="ZZ", entries=(IntensityEntry(0.5, 60, 0.4),))
        with pytest.raises(OracleResolutionError):
            oracle_emissions(energy, intensity, PueFactor(1.0))


class TestIntensitySeries:
    def test_overlap_rejected(self):
        with pytest.raises(ValueError):
            IntensitySeries(
                region="ZZ",
                entries=(IntensityEntry(0, 100, 0.4), IntensityEntry(50, 150, 0.2)),
            )

    def test_negative_intensity_rejected(self):
        with pytest.raises(ValueError):
            IntensityEntry(0, 100, -0.4)

    def test_empty_window_rejected(self):
        with pytest.raises(ValueError):
            IntensityEntry(100, 100, 0.4)

    def test_half_open_lookup(self):
        series = constant_intensity(0.4, 0, 100)
        assert series.value_at(0) == 0.4
        assert series.value_at(99.5) == 0.4
        assert series.value_at(100) is None  # boundary belongs to the next window
        assert series.value_at(-1) is None

    def test_gap_lookup(self):
        series = IntensitySeries(
            region="ZZ",
            entries=(IntensityEntry(0, 50, 0.4), IntensityEntry(100, 150, 0.2)),
        )
        assert series.value_at(75) is None
        assert series.value_at(100) == 0.2
