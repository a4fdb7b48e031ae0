"""Tests for the budget strategy and the adaptive longitudinal client."""

import math

import numpy as np
import pytest

from ldpfreq import errors
from ldpfreq.longitudinal import L_GRR, L_OSUE, BudgetPair, LongitudinalParams, memoize
from ldpfreq.multidim import (
    ClientState,
    TimedReport,
    _grr_wins,
    allomfree_init,
    allomfree_report,
    choose_protocol,
    format_report_line,
    optimal_r,
    parse_report_line,
    smp_variance,
    spl_variance,
)
from ldpfreq.oracles import GRR, OUE, SUE, DomainSpec

E = math.e


class TestBudgetVariances:
    def test_smp_single_attribute_value(self):
        # 5 * e / (1e4 * (e-1)^2), frozen from a 50-digit evaluation
        got = smp_variance(GRR, 1.0, 5, 2, 10_000, r=1)
        assert got == pytest.approx(0.00046033679710389616, rel=1e-12)

    def test_spl_value(self):
        # e^0.2 / (1e4 * (e^0.2 - 1)^2)
        got = spl_variance(GRR, 1.0, 5, 2, 10_000)
        assert got == pytest.approx(0.0024916833069152959, rel=1e-12)

    @pytest.mark.parametrize("family", [GRR, SUE, OUE])
    @pytest.mark.parametrize("eps", [0.5, 1.0, 2.0, 4.0])
    @pytest.mark.parametrize("d", [2, 5, 10])
    def test_smp_at_r_equals_d_is_spl(self, family, eps, d):
        spl = spl_variance(family, eps, d, 4, 10_000)
        smp = smp_variance(family, eps, d, 4, 10_000, r=d)
        assert smp == pytest.approx(spl, rel=1e-12)

    @pytest.mark.parametrize("family", [GRR, SUE, OUE])
    @pytest.mark.parametrize("eps", [0.5, 1.0, 2.0, 4.0])
    @pytest.mark.parametrize("d", [2, 5, 10, 33])
    @pytest.mark.parametrize("k", [2, 32])
    def test_sampling_one_attribute_is_optimal(self, family, eps, d, k):
        assert optimal_r(family, eps, d, k, 10_000) == 1

    def test_single_attribute_trivial(self):
        assert optimal_r(GRR, 1.0, 1, 2, 100) == 1

    def test_variance_strictly_increases_with_r(self):
        for family in (GRR, SUE, OUE):
            for eps in (0.5, 1.0, 2.0, 4.0):
                for d in (2, 5, 10, 33):
                    prev = smp_variance(family, eps, d, 2, 10_000, r=1)
                    for r in range(2, d + 1):
                        cur = smp_variance(family, eps, d, 2, 10_000, r=r)
                        assert cur > prev
                        prev = cur

    def test_bad_r(self):
        with pytest.raises(ValueError):
            smp_variance(GRR, 1.0, 3, 2, 100, r=4)


class TestProtocolChoice:
    def test_small_domain_prefers_direct_encoding(self):
        # at (1.0, 0.5): 0.000392 <= 0.001567 per the closed forms
        assert choose_protocol(BudgetPair(1.0, 0.5), 2).family == L_GRR

    def test_large_domain_prefers_unary(self):
        # 0.268074 > 0.001567
        assert choose_protocol(BudgetPair(1.0, 0.5), 32).family == L_OSUE

    def test_boundary_at_this_budget(self):
        # the crossover sits between k=4 and k=5 at (1.0, 0.5)
        assert choose_protocol(BudgetPair(1.0, 0.5), 4).family == L_GRR
        assert choose_protocol(BudgetPair(1.0, 0.5), 5).family == L_OSUE

    def test_tie_goes_to_direct_encoding(self):
        assert _grr_wins(0.25, 0.25) is True
        assert _grr_wins(0.25001, 0.25) is False

    def test_selection_soundness_over_benchmark_domain_sizes(self):
        # every domain size appearing in the four benchmark datasets'
        # attribute vectors; the chosen family must be the variance argmin
        from ldpfreq.longitudinal import L_GRR as LG, L_OSUE as LO, solve_params
        from ldpfreq.longitudinal import approx_variance_longitudinal as avl

        sizes = sorted({2, 3, 4, 5, 6, 7, 8, 9, 11, 12, 14, 16, 17, 37, 41, 43, 47, 52})
        for eps_inf in (0.5, 1.0, 2.0, 4.0):
            for ratio in (0.3, 0.6):
                budget = BudgetPair(eps_inf, ratio * eps_inf)
                for k in sizes:
                    v_grr = avl(solve_params(LG, budget, k), 1)
                    v_osue = avl(solve_params(LO, budget, k), 1)
                    expected = LG if v_grr <= v_osue else LO
                    assert choose_protocol(budget, k).family == expected


class TestClient:
    DOMAIN = DomainSpec((("color", 2), ("size", 32), ("shape", 4)))

    def test_dimension_mismatch(self):
        with pytest.raises(errors.DimensionMismatch):
            allomfree_init([0, 1], self.DOMAIN, BudgetPair(1.0, 0.5), np.random.default_rng(0))

    def test_value_out_of_domain(self):
        with pytest.raises(errors.ValueOutOfDomain):
            allomfree_init([2, 0, 0], self.DOMAIN, BudgetPair(1.0, 0.5), np.random.default_rng(0))

    def test_chosen_family_matches_sampled_domain_size(self):
        budget = BudgetPair(1.0, 0.5)
        for seed in range(40):
            state = allomfree_init([1, 7, 3], self.DOMAIN, budget, np.random.default_rng(seed))
            expected = choose_protocol(budget, self.DOMAIN.size(state.sampled_attr)).family
            assert state.chosen_family == expected

    def test_reports_keep_attribute_and_family_fixed(self):
        state = allomfree_init([1, 7, 3], self.DOMAIN, BudgetPair(1.0, 0.5),
                               np.random.default_rng(4))
        attrs = {allomfree_report(state, t).attr for t in range(1, 25)}
        assert attrs == {state.sampled_attr}

    def test_report_round_index_validated(self):
        state = allomfree_init([1, 7, 3], self.DOMAIN, BudgetPair(1.0, 0.5),
                               np.random.default_rng(4))
        with pytest.raises(ValueError):
            allomfree_report(state, 0)

    def test_identity_second_round_echoes_memo(self):
        params = LongitudinalParams(L_GRR, 0.75, 0.25, 1.0, 0.0, k=2)
        rng = np.random.default_rng(2)
        memo = memoize(1, params, rng)
        state = ClientState(0, L_GRR, memo, rng)
        for t in range(1, 12):
            assert allomfree_report(state, t).payload == memo.memoized

    def test_report_payload_distribution(self):
        # round-2 channel frequencies within 3 standard errors over many rounds
        state = allomfree_init([1, 7, 3], self.DOMAIN, BudgetPair(1.0, 0.5),
                               np.random.default_rng(8))
        p = state.memo.params
        draws = 30_000
        if state.chosen_family == L_GRR:
            hits = sum(allomfree_report(state, t).payload == state.memo.memoized
                       for t in range(1, draws + 1))
            expect = p.p2
            se = math.sqrt(expect * (1 - expect) / draws)
            assert abs(hits / draws - expect) <= 3 * se
        else:
            expect = np.where(np.asarray(state.memo.memoized) == 1, p.p2, p.q2)
            ones = np.zeros(len(expect))
            for t in range(1, draws + 1):
                ones += allomfree_report(state, t).payload
            se = np.sqrt(expect * (1 - expect) / draws)
            assert np.all(np.abs(ones / draws - expect) <= 3 * se)

    def test_reports_depend_only_on_sampled_coordinate(self):
        # change every non-sampled coordinate: same stream => same reports
        budget = BudgetPair(1.0, 0.5)
        s1 = allomfree_init([1, 7, 3], self.DOMAIN, budget, np.random.default_rng(123))
        other = [1, 7, 3]
        for j in range(3):
            if j != s1.sampled_attr:
                other[j] = (other[j] + 1) % self.DOMAIN.size(j)
        s2 = allomfree_init(other, self.DOMAIN, budget, np.random.default_rng(123))
        assert s2.sampled_attr == s1.sampled_attr
        for t in range(1, 10):
            r1, r2 = allomfree_report(s1, t), allomfree_report(s2, t)
            assert np.array_equal(r1.payload, r2.payload)

    def test_sampling_uniformity_client_path(self):
        n, d = 20_000, 3
        counts = np.zeros(d)
        for i in range(n):
            state = allomfree_init([0, 0, 0], self.DOMAIN, BudgetPair(1.0, 0.5),
                                   np.random.default_rng(1000 + i))
            counts[state.sampled_attr] += 1
        bound = 3 * math.sqrt(n * (1 / d) * (1 - 1 / d))
        assert np.all(np.abs(counts - n / d) <= bound)

    def test_sampling_uniformity_vectorized_path(self):
        from ldpfreq.experiment import sample_attributes

        n, d = 1_000_000, 9
        counts = np.bincount(sample_attributes(n, d, np.random.default_rng(77)), minlength=d)
        bound = 3 * math.sqrt(n * (1 / d) * (1 - 1 / d))
        assert np.all(np.abs(counts - n / d) <= bound)


class TestWireFormat:
    def test_grr_line(self):
        line = format_report_line(17, TimedReport(3, 2, 5))
        assert line == "3,17,2,5"
        client, rep = parse_report_line(line, ue=False)
        assert (client, rep.t, rep.attr, rep.payload) == (17, 3, 2, 5)

    def test_ue_line(self):
        payload = np.array([0, 1, 0, 1, 0], dtype=np.uint8)
        line = format_report_line(8, TimedReport(1, 0, payload))
        assert line == "1,8,0,01010"
        client, rep = parse_report_line(line, ue=True)
        assert client == 8
        assert np.array_equal(rep.payload, payload)

    def test_ambiguous_payload_decided_by_tag(self):
        _, as_grr = parse_report_line("1,0,0,10", ue=False)
        _, as_ue = parse_report_line("1,0,0,10", ue=True)
        assert as_grr.payload == 10
        assert np.array_equal(as_ue.payload, [1, 0])
