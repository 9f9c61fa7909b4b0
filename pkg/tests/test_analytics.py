import math

import numpy as np
import pytest

from rabisweep.analytics import (
    cascade_gaps,
    cascade_probabilities,
    default_n_max,
    fock_prep_window,
    lz_probability,
    multimode_gaps,
    poisson_overlap,
    sequential_crossing_probabilities,
)
from rabisweep.errors import (
    DegenerateCrossingError,
    GapTruncationError,
    InvalidParameterError,
)
from rabisweep.model import Mode, MultiModeParams

RNG = np.random.default_rng(11)


def up_probs(records):
    return {r.label.photons: r.probability for r in records if r.label.qubit == "up"}


def down0(records):
    return next(
        r.probability
        for r in records
        if r.label.qubit == "down" and r.label.photons in (0, (0,), (0, 0))
    )


class TestPoissonOverlap:
    def test_reference_values(self):
        assert poisson_overlap(1, 1.0, 1.0) == pytest.approx(0.36787944117144233, abs=1e-12)
        assert poisson_overlap(2, math.sqrt(2.0), 1.0) == pytest.approx(0.2706705664732254, abs=1e-12)

    def test_zero_coupling(self):
        assert poisson_overlap(0, 0.0, 1.0) == 1.0
        assert poisson_overlap(3, 0.0, 1.0) == 0.0

    def test_large_index_stays_finite(self):
        val = poisson_overlap(400, 3.0, 1.0)
        assert 0.0 <= val < 1e-200

    def test_normalization(self):
        total = sum(poisson_overlap(n, 2.0, 1.0) for n in range(80))
        assert total == pytest.approx(1.0, abs=1e-12)


class TestLzProbability:
    def test_limits(self):
        assert lz_probability(0.0, 1.0) == 1.0
        assert lz_probability(1.0, 1e-6) < 1e-200

    def test_half_transfer_point(self):
        v = math.pi / (2.0 * math.log(2.0))
        assert lz_probability(1.0, v) == pytest.approx(0.5, abs=1e-12)

    def test_monotonicity(self):
        vs = np.logspace(-2, 2, 40)
        ps = [lz_probability(0.7, v) for v in vs]
        assert all(b > a for a, b in zip(ps, ps[1:]))
        deltas = np.linspace(0.1, 3.0, 20)
        pd = [lz_probability(d, 1.0) for d in deltas]
        assert all(b < a for a, b in zip(pd, pd[1:]))

    def test_rejects_bad_rate(self):
        with pytest.raises(InvalidParameterError):
            lz_probability(1.0, 0.0)


class TestCascadeGaps:
    def test_zero_coupling(self):
        spec = cascade_gaps(0.9, 0.0, 1.0, n_max=5)
        assert spec.gaps[0] == pytest.approx(0.9)
        assert all(spec.gaps[n] == 0.0 for n in range(1, 6))

    def test_unit_ratio_values(self):
        spec = cascade_gaps(1.0, 1.0, 1.0, n_max=4)
        assert spec.gaps[0] == pytest.approx(math.exp(-2.0), rel=1e-12)
        assert spec.gaps[1] == pytest.approx(2.0 * math.exp(-2.0), rel=1e-12)

    @pytest.mark.parametrize("gow", [0.1, 1.0, 3.0])
    def test_sum_rule(self, gow):
        delta = 0.37
        spec = cascade_gaps(delta, gow, 1.0)
        total = sum(g * g for g in spec.gaps.values())
        assert abs(total - delta * delta) <= 1e-10 * delta * delta
        assert spec.sum_rule_tail <= 1e-10 * delta * delta

    def test_crossing_positions(self):
        spec = cascade_gaps(1.0, 0.5, 2.0, n_max=3)
        assert spec.crossing_positions == {0: 0.0, 1: 2.0, 2: 4.0, 3: 6.0}


class TestCascadeProbabilities:
    def test_normalization(self):
        for gow in (0.1, 1.0, 3.0):
            for x in (0.1, 1.0, 30.0):
                recs = cascade_probabilities(0.2, x * 0.04, gow, 1.0)
                assert abs(sum(r.probability for r in recs) - 1.0) <= 1e-9

    def test_survival_is_exact_two_level_form(self):
        delta, v = 0.3, 0.5
        recs = cascade_probabilities(delta, v, 2.0, 1.0)
        assert down0(recs) == pytest.approx(lz_probability(delta, v), rel=1e-12)

    def test_zero_coupling_collapses_to_two_level(self):
        delta, v = 0.8, 1.1
        recs = cascade_probabilities(delta, v, 0.0, 1.0, n_max=6)
        ups = up_probs(recs)
        assert ups[0] == pytest.approx(1.0 - lz_probability(delta, v), rel=1e-12)
        assert all(ups[n] == 0.0 for n in range(1, 7))

    def test_rate_rescaling_covariance(self):
        # P(k*delta, k^2*v) = P(delta, v): only v/delta^2 enters.
        delta, v, gow = 0.15, 0.3, 1.3
        base = cascade_probabilities(delta, v, gow, 1.0)
        for _ in range(3):
            k = float(RNG.uniform(0.2, 5.0))
            scaled = cascade_probabilities(k * delta, k * k * v, gow, 1.0)
            for a, b in zip(base, scaled):
                assert b.probability == pytest.approx(a.probability, rel=1e-9, abs=1e-300)

    def test_peak_ratio_law_small_coupling(self):
        # max over v of P(up,n)/P(up,n-1) approaches (2 g/w)^2 / n.
        grid = np.logspace(-1, 2, 76)
        tables = [up_probs(cascade_probabilities(1.0, v, 0.1, 1.0)) for v in grid]
        for n in range(1, 6):
            ratios = [t[n] / t[n - 1] for t in tables if t[n - 1] > 0]
            want = 0.04 / n
            assert abs(max(ratios) - want) <= 0.05 * want

    def test_strong_coupling_peak_value(self):
        # Independent oracle: dense grid + golden refinement of P(up,1) at
        # g/omega = 3, where only the first two crossings matter.
        gow, delta = 3.0, 1.0
        spec = cascade_gaps(delta, gow, 1.0, n_max=2)
        x1 = math.pi * spec.gaps[1] ** 2 / 2.0

        def p_up1(v):
            return up_probs(cascade_probabilities(delta, v, gow, 1.0))[1]

        vs = np.exp(np.linspace(math.log(x1 / 5e3), math.log(x1 * 5e3), 4001))
        peak_grid = max(p_up1(v) for v in vs)
        assert peak_grid == pytest.approx(0.880, abs=2e-3)

    def test_insufficient_retention_raises(self):
        with pytest.raises(GapTruncationError):
            cascade_probabilities(1.0, 50.0, 2.0, 1.0, n_max=2)

    def test_probabilities_in_range(self):
        for v in np.logspace(-2, 3, 12):
            for rec in cascade_probabilities(0.5, v, 1.5, 1.0):
                assert -1e-12 <= rec.probability <= 1.0 + 1e-12


class TestMultimodeGaps:
    def test_single_mode_equals_cascade_exactly(self):
        p = MultiModeParams(0.7, (Mode(1.3, 0.9, 16),))
        got = multimode_gaps(p, caps=(8,))
        want = cascade_gaps(0.7, 0.9, 1.3, n_max=8)
        for n in range(9):
            assert got.gaps[(n,)] == want.gaps[n]
            assert got.crossing_positions[(n,)] == want.crossing_positions[n]

    def test_decoupled_modes_have_single_gap(self):
        p = MultiModeParams(1.1, (Mode(1.0, 0.0, 4), Mode(2.0, 0.0, 4)))
        spec = multimode_gaps(p, caps=(2, 2))
        assert spec.gaps[(0, 0)] == pytest.approx(1.1)
        assert all(g == 0.0 for occ, g in spec.gaps.items() if occ != (0, 0))

    def test_identical_modes_are_degenerate(self):
        p = MultiModeParams(0.5, (Mode(1.0, 0.4, 6), Mode(1.0, 0.4, 6)))
        spec = multimode_gaps(p, caps=(2, 2))
        assert spec.gaps[(1, 0)] == pytest.approx(spec.gaps[(0, 1)], rel=1e-12)
        groups = spec.degenerate_groups()
        assert ((0, 1), (1, 0)) in groups or ((1, 0), (0, 1)) in groups
        with pytest.raises(DegenerateCrossingError):
            sequential_crossing_probabilities(spec, 0.1)

    def test_crossing_order_and_positions(self):
        p = MultiModeParams(0.3, (Mode(1.0, 0.5, 6), Mode(2.3, 0.9, 6)))
        spec = multimode_gaps(p, caps=(3, 2))
        order = spec.sorted_occupations()
        positions = [spec.crossing_positions[o] for o in order]
        assert positions == sorted(positions)
        assert spec.crossing_positions[(1, 2)] == pytest.approx(1.0 + 4.6)

    def test_sequential_marginal_matches_single_mode(self):
        # A decoupled second mode must not change the cascade.
        delta, v = 0.25, 0.05
        single = cascade_probabilities(delta, v, 0.6, 1.0, n_max=16)
        p = MultiModeParams(delta, (Mode(1.0, 0.6, 20), Mode(2.3, 0.0, 3)))
        spec = multimode_gaps(p, caps=(16, 2))
        both = sequential_crossing_probabilities(spec, v)
        marg: dict[int, float] = {}
        for rec in both:
            if rec.label.qubit == "up":
                n1 = rec.label.photons[0]
                marg[n1] = marg.get(n1, 0.0) + rec.probability
        for rec in single:
            if rec.label.qubit == "up":
                assert marg[rec.label.photons] == pytest.approx(rec.probability, abs=1e-12)


class TestFockPrepWindow:
    def test_strong_separation_nonempty(self):
        for n in range(1, 6):
            w = fock_prep_window(1.0, 3.0, 1.0, n)
            assert not w.empty

    def test_weak_coupling_empty(self):
        w = fock_prep_window(1.0, 0.1, 1.0, 1)
        assert w.empty
        assert w.predicted_peak == 0.0

    def test_peak_matches_closed_form(self):
        # Two-crossing optimum: x* = ln(1 + 1/R), R = (gap0/gap1)^2.
        w = fock_prep_window(1.0, 3.0, 1.0, 1)
        big_r = 1.0 / 36.0
        x_star = math.log(1.0 + 1.0 / big_r)
        expected = math.exp(-big_r * x_star) * (1.0 - math.exp(-x_star))
        assert w.predicted_peak == pytest.approx(expected, abs=1e-6)
        assert w.predicted_peak >= 0.85

    def test_margin_separation_needs_wide_gap_ratio(self):
        # Decade margins on both sides require (gap_n/gap_{n-1})^2 > 100;
        # a ratio below ~ sqrt(10) per level cannot separate.
        w = fock_prep_window(1.0, 3.0, 1.0, 6)  # (2g/w)^2/n = 6 < 10
        assert not w.empty
        assert not w.separated

    def test_rejects_target_zero(self):
        with pytest.raises(InvalidParameterError):
            fock_prep_window(1.0, 1.0, 1.0, 0)


class TestDefaultRetention:
    def test_covers_spectrum_peak(self):
        for gow in (0.1, 1.0, 3.0):
            assert default_n_max(gow, 1.0) >= int(4 * gow * gow) + 60
