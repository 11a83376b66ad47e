"""Finite-key distillation: entropy, concentration bounds, key lengths."""

import math
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from keyrates.channel import ChannelDetectorModel
from keyrates.finite_key import (
    DomainError,
    InsufficientBlock,
    ProtocolConfig,
    SecurityParams,
    TallySet,
    binary_entropy,
    chernoff_bound,
    expected_tallies,
    sps_expected_rate,
    sps_key_length,
)
from keyrates.finite_key.core import SPS_CHERNOFF_USES
from keyrates.finite_key.wcp import WCP_CONCENTRATION_USES
from keyrates.photon_source import SourceKind, SourceSpec

FIELD_CHANNEL = ChannelDetectorModel(14.6, 0.6, 0.712, 43.0, 3.42e-9, 0.0254)
FIELD_SEC = SecurityParams(
    eps_pe=11e-10 / 12,
    eps_pa=1e-10 / 24,
    eps_ec=1e-10 / 24,
    eps_cor=1e-15,
    f_ec=1.16,
)
FIELD_PROTO = ProtocolConfig(q_z_tx=0.9, q_z_rx=0.9, block_size=1e8)
FIELD_SOURCE = SourceSpec(SourceKind.SPS, 0.292, 0.00698)


class TestBinaryEntropy:
    def test_half_is_one_bit(self):
        assert binary_entropy(0.5) == 1.0

    def test_edges_are_zero(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0

    def test_misalignment_value(self):
        assert binary_entropy(0.0254) == pytest.approx(0.17077, abs=5e-6)

    @pytest.mark.parametrize("p", [-0.1, 1.1])
    def test_domain(self, p):
        with pytest.raises(DomainError):
            binary_entropy(p)


class TestChernoffBound:
    def test_eps_one_collapses(self):
        assert chernoff_bound(123.0, 1.0, "upper") == 123.0
        assert chernoff_bound(123.0, 1.0, "lower") == 123.0

    def test_zero_count_upper_is_two_beta(self):
        eps = 1e-6
        beta = math.log(1.0 / eps)
        assert chernoff_bound(0.0, eps, "upper") == pytest.approx(2.0 * beta, rel=1e-12)

    def test_bad_direction(self):
        with pytest.raises(ValueError):
            chernoff_bound(1.0, 0.5, "sideways")

    @given(
        st.floats(min_value=0.0, max_value=1e12),
        st.floats(min_value=1e-15, max_value=1.0),
    )
    def test_ordering(self, x, eps):
        lower = chernoff_bound(x, eps, "lower")
        upper = chernoff_bound(x, eps, "upper")
        assert 0.0 <= lower <= x <= upper


class TestSpsKeyLength:
    def test_perfect_source_reduces_to_constants(self):
        # p2 = 0 and zero observed errors leave only the privacy
        # amplification and correctness terms.
        sec = FIELD_SEC
        tallies = TallySet(
            n_pulses_sent=1e6,
            z_detections=4e5,
            x_detections=5e3,
            z_errors=0.0,
            x_errors=0.0,
        )
        source = SourceSpec(SourceKind.SPS, 0.9, 0.0)
        report = sps_key_length(tallies, source, FIELD_PROTO, sec)
        expected = (
            tallies.z_detections
            - 2.0 * math.log2(1.0 / (2.0 * sec.eps_pa))
            - math.log2(2.0 / sec.eps_cor)
        )
        assert report.key_length == expected
        assert report.multi_photon_cap == 0.0
        assert report.phase_error_bound == 0.0
        assert report.lambda_ec == 0.0

    def test_empty_block_clamps_to_zero(self):
        tallies = TallySet(1e6, 0.0, 0.0, 0.0, 0.0)
        report = sps_key_length(tallies, SourceSpec(SourceKind.SPS, 0.9, 0.0), FIELD_PROTO, FIELD_SEC)
        assert report.key_length == 0.0
        assert report.rate_per_pulse == 0.0

    def test_multi_photon_cap_exhausts_block(self):
        tallies = TallySet(1e12, 1e4, 1e2, 1e2, 1e0)
        source = SourceSpec(SourceKind.SPS, 0.5, 0.5)
        with pytest.raises(InsufficientBlock):
            sps_key_length(tallies, source, FIELD_PROTO, FIELD_SEC)

    def test_wcp_source_rejected(self):
        tallies = TallySet(1e6, 1e4, 1e2, 1e2, 1e0)
        with pytest.raises(ValueError):
            sps_key_length(tallies, SourceSpec(SourceKind.WCP, 0.5), FIELD_PROTO, FIELD_SEC)


class TestSpsExpectedRate:
    def test_field_configuration(self):
        report = sps_expected_rate(FIELD_SOURCE, FIELD_CHANNEL, FIELD_PROTO, FIELD_SEC)
        assert report.rate_per_pulse == pytest.approx(1.08e-3, rel=0.25)

    def test_laboratory_series_decreasing_and_in_band(self):
        targets = {0.17: 5.65e-2, 5.11: 1.69e-2, 10.15: 4.34e-3, 15.16: 1.08e-3}
        rates = []
        for loss_db, target in targets.items():
            channel = replace(FIELD_CHANNEL, channel_loss_db=loss_db)
            rate = sps_expected_rate(FIELD_SOURCE, channel, FIELD_PROTO, FIELD_SEC).rate_per_pulse
            assert rate == pytest.approx(target, rel=0.5)
            rates.append(rate)
        assert all(a > b for a, b in zip(rates, rates[1:]))

    def test_rate_decreases_with_g2(self):
        # Beyond the feasible corner the multi-photon cap floors the
        # rate at zero; treat that as zero in the ladder.
        rates = []
        for g2 in (0.0, 0.003, 0.01, 0.03, 0.1):
            source = SourceSpec(SourceKind.SPS, 0.292, g2)
            try:
                rate = sps_expected_rate(
                    source, FIELD_CHANNEL, FIELD_PROTO, FIELD_SEC
                ).rate_per_pulse
            except InsufficientBlock:
                rate = 0.0
            rates.append(rate)
        assert all(a >= b for a, b in zip(rates, rates[1:]))
        assert rates[0] > rates[-1]

    def test_rate_decreases_with_misalignment(self):
        rates = []
        for p_mis in (0.005, 0.0254, 0.04):
            channel = replace(FIELD_CHANNEL, misalignment_prob=p_mis)
            rates.append(
                sps_expected_rate(FIELD_SOURCE, channel, FIELD_PROTO, FIELD_SEC).rate_per_pulse
            )
        assert all(a > b for a, b in zip(rates, rates[1:]))
        assert rates[-1] > 0.0

    def test_rate_decreases_with_loss(self):
        rates = []
        for loss_db in (1.0, 5.0, 10.0, 15.0, 18.0):
            channel = replace(FIELD_CHANNEL, channel_loss_db=loss_db)
            rates.append(
                sps_expected_rate(FIELD_SOURCE, channel, FIELD_PROTO, FIELD_SEC).rate_per_pulse
            )
        assert all(a > b for a, b in zip(rates, rates[1:]))

    def test_block_size_convergence_from_below(self):
        asymptotic = sps_expected_rate(
            FIELD_SOURCE, FIELD_CHANNEL, FIELD_PROTO, FIELD_SEC, asymptotic=True
        ).rate_per_pulse
        rates = []
        for block in (1e6, 1e7, 1e8, 1e10, 1e12, 1e14):
            proto = replace(FIELD_PROTO, block_size=block)
            rates.append(
                sps_expected_rate(FIELD_SOURCE, FIELD_CHANNEL, proto, FIELD_SEC).rate_per_pulse
            )
        assert all(a < b for a, b in zip(rates, rates[1:]))
        assert all(rate < asymptotic for rate in rates)
        assert rates[-1] == pytest.approx(asymptotic, rel=1e-2)

    def test_pre_attenuation_thins_the_source(self):
        proto = replace(FIELD_PROTO, pre_attenuation=0.5)
        tallies, launched = expected_tallies(FIELD_SOURCE, FIELD_CHANNEL, proto)
        assert launched.mean_photon_number == pytest.approx(0.146, abs=1e-12)
        assert launched.g2 == pytest.approx(0.00698, rel=1e-9)
        assert tallies.z_detections == FIELD_PROTO.block_size


class TestEpsilonBudget:
    def test_declared_total(self):
        total = FIELD_SEC.total_failure_probability()
        assert total == pytest.approx(1e-10, rel=1e-9)

    def test_sps_split_consumes_exactly_eps_pe(self):
        per_use = FIELD_SEC.eps_pe / SPS_CHERNOFF_USES
        assert per_use * SPS_CHERNOFF_USES == pytest.approx(FIELD_SEC.eps_pe, rel=1e-15)

    def test_wcp_split_consumes_exactly_eps_pe(self):
        per_use = FIELD_SEC.eps_pe / WCP_CONCENTRATION_USES
        assert per_use * WCP_CONCENTRATION_USES == pytest.approx(
            FIELD_SEC.eps_pe, rel=1e-15
        )
        # Table partition: eleven draws at (1e-10)/12 each.
        assert per_use == pytest.approx(1e-10 / 12.0, rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=1e6, max_value=1e9), st.floats(min_value=0.0, max_value=0.05))
def test_rate_and_length_are_clamped(block, g2):
    source = SourceSpec(SourceKind.SPS, 0.292, g2)
    proto = replace(FIELD_PROTO, block_size=block)
    try:
        report = sps_expected_rate(source, FIELD_CHANNEL, proto, FIELD_SEC)
    except InsufficientBlock:
        return
    assert report.key_length >= 0.0
    assert 0.0 <= report.rate_per_pulse <= 1.0
