"""Head-to-head comparison of SPS and decoy-WCP finite-key rates.

Both technologies are tuned before being compared, mirroring how the
transmitter settings are chosen in practice: the SPS side optimises its
basis ratio and pre-attenuation, the WCP side its basis ratio,
intensities and intensity probabilities. The optimisers here are
deterministic nested scans with golden-section refinement, so sweeps,
crossover searches and boundary solves are reproducible bit for bit;
the stochastic genetic optimiser lives in :mod:`keyrates.optimizer`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from ..asymptotic import BoundaryCurve, EmptyCurve
from ..channel import ChannelDetectorModel
from ..photon_source import NonPhysicalSource, SourceKind, SourceSpec
from .core import (
    InsufficientBlock,
    ProtocolConfig,
    SecurityParams,
    sps_expected_rate,
)
from .wcp import (
    DecoyInfeasible,
    WcpIntensities,
    wcp_asymptotic_practical_rate,
    wcp_finite_key_rate,
)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

# Transmitter basis-ratio candidates shared by both technologies.
Q_TX_GRID = (0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99)

# Receiver basis split assumed for the finite-block coherent-light
# comparator: a conventional passive 50:50 basis choice. The 9:1 split
# of the single-photon receiver is specific to that hardware, so it is
# not imposed on the comparator; in the infinite-block comparison the
# receiver drops out of the statistics and the two technologies share
# the configured split.
WCP_RECEIVER_Z_RATIO = 0.5

WCP_MU_SIGNAL_GRID = (0.3, 0.45, 0.6, 0.8, 1.0)
WCP_MU_DECOY_GRID = (0.05, 0.1, 0.15, 0.2, 0.3)
WCP_P_SIGNAL_GRID = (0.6, 0.75, 0.9)
WCP_P_DECOY_SHARE_GRID = (0.3, 0.5, 0.8)

CROSSOVER_SCAN_MAX_DB = 30.0
CROSSOVER_SCAN_STEP_DB = 1.0
BOUNDARY_BISECTION_ITERATIONS = 40


class NoCrossover(RuntimeError):
    """Raised when the SPS rate never exceeds the WCP rate on the scan."""


@dataclass(frozen=True)
class CompareReport:
    loss_db: float
    r_sps: float
    r_wcp: float
    advantage_db: float
    crossover_loss_db: float


def advantage_db(r_sps: float, r_wcp: float) -> float:
    """Rate ratio in decibels; infinite when one side produces no key."""
    if r_sps > 0.0 and r_wcp > 0.0:
        return 10.0 * math.log10(r_sps / r_wcp)
    if r_sps == r_wcp:
        return 0.0
    return math.inf if r_sps > r_wcp else -math.inf


def _golden_max(f, lo: float, hi: float, iterations: int = 30) -> tuple[float, float]:
    """Deterministic golden-section maximiser for a unimodal objective."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iterations):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    best = 0.5 * (a + b)
    return best, f(best)


def optimized_sps_rate(
    source: SourceSpec,
    channel: ChannelDetectorModel,
    proto: ProtocolConfig,
    sec: SecurityParams,
    asymptotic: bool = False,
    optimize_q: bool = True,
) -> tuple[float, ProtocolConfig]:
    """Best SPS rate over basis ratio and pre-attenuation.

    Returns the rate and the protocol configuration that achieves it.
    Infeasible corners (multi-photon cap swallowing the block) score
    zero rather than raising.
    """

    def rate_at(q_tx: float, t: float) -> float:
        cfg = replace(proto, q_z_tx=q_tx, pre_attenuation=t)
        try:
            return sps_expected_rate(source, channel, cfg, sec, asymptotic=asymptotic).rate_per_pulse
        except (InsufficientBlock, NonPhysicalSource):
            return 0.0

    q_candidates = Q_TX_GRID if optimize_q else (proto.q_z_tx,)
    best_rate, best_q, best_t = -1.0, proto.q_z_tx, 1.0
    for q_tx in q_candidates:
        t, rate = _golden_max(lambda t: rate_at(q_tx, t), 1e-4, 1.0)
        if rate_at(q_tx, 1.0) >= rate:
            t, rate = 1.0, rate_at(q_tx, 1.0)
        if rate > best_rate:
            best_rate, best_q, best_t = rate, q_tx, t
    return max(best_rate, 0.0), replace(proto, q_z_tx=best_q, pre_attenuation=best_t)


def optimized_wcp_rate(
    channel: ChannelDetectorModel,
    proto: ProtocolConfig,
    sec: SecurityParams,
    asymptotic: bool = False,
    concentration: str = "hoeffding",
    optimize_q: bool = True,
) -> tuple[float, WcpIntensities, ProtocolConfig]:
    """Best decoy-WCP rate over basis ratio, intensities and probabilities.

    Coarse grid scan followed by coordinate-wise golden refinement.
    In asymptotic mode the decoy estimation is exact, so only the
    signal intensity and basis ratio matter. In finite mode the
    comparator runs on the conventional 50:50 receiver split
    (``WCP_RECEIVER_Z_RATIO``) rather than the single-photon
    receiver's 9:1 optics.
    """
    if not asymptotic:
        proto = replace(proto, q_z_rx=WCP_RECEIVER_Z_RATIO)
    q_candidates = Q_TX_GRID if optimize_q else (proto.q_z_tx,)

    if asymptotic:
        best = (-1.0, 1.0, proto.q_z_tx)
        for q_tx in q_candidates:
            cfg = replace(proto, q_z_tx=q_tx)
            mu, rate = _golden_max(
                lambda m: wcp_asymptotic_practical_rate(m, channel, cfg, sec), 1e-3, 1.0
            )
            if rate > best[0]:
                best = (rate, mu, q_tx)
        rate, mu, q_tx = best
        intensities = WcpIntensities(mu_signal=mu, mu_decoy=mu / 2.0, p_signal=1.0, p_decoy=0.0)
        return max(rate, 0.0), intensities, replace(proto, q_z_tx=q_tx)

    def rate_at(q_tx: float, mu_s: float, mu_d: float, p_s: float, share: float) -> float:
        if not 0.0 < mu_d < mu_s or not 0.0 < p_s < 1.0 or not 0.0 < share < 1.0:
            return 0.0
        p_d = (1.0 - p_s) * share
        cfg = replace(proto, q_z_tx=q_tx)
        try:
            ints = WcpIntensities(mu_s, mu_d, p_s, p_d)
            return wcp_finite_key_rate(ints, channel, cfg, sec, concentration).rate_per_pulse
        except (DecoyInfeasible, ValueError):
            return 0.0

    best_rate = -1.0
    best = (proto.q_z_tx, 0.5, 0.1, 0.8, 0.5)
    for q_tx in q_candidates:
        for mu_s in WCP_MU_SIGNAL_GRID:
            for mu_d in WCP_MU_DECOY_GRID:
                if mu_d >= mu_s:
                    continue
                for p_s in WCP_P_SIGNAL_GRID:
                    for share in WCP_P_DECOY_SHARE_GRID:
                        rate = rate_at(q_tx, mu_s, mu_d, p_s, share)
                        if rate > best_rate:
                            best_rate = rate
                            best = (q_tx, mu_s, mu_d, p_s, share)

    q_tx, mu_s, mu_d, p_s, share = best
    for _ in range(2):
        mu_s, _ = _golden_max(lambda v: rate_at(q_tx, v, min(mu_d, 0.9 * v), p_s, share), 0.05, 1.0, 20)
        mu_d, _ = _golden_max(lambda v: rate_at(q_tx, mu_s, v, p_s, share), 1e-3, 0.95 * mu_s, 20)
        p_s, _ = _golden_max(lambda v: rate_at(q_tx, mu_s, mu_d, v, share), 0.05, 0.98, 20)
        share, best_rate = _golden_max(lambda v: rate_at(q_tx, mu_s, mu_d, p_s, v), 0.02, 0.98, 20)
    p_d = (1.0 - p_s) * share
    intensities = WcpIntensities(mu_s, mu_d, p_s, p_d)
    return max(best_rate, 0.0), intensities, replace(proto, q_z_tx=q_tx)


def compare(
    source: SourceSpec,
    channel: ChannelDetectorModel,
    proto: ProtocolConfig,
    sec: SecurityParams,
    concentration: str = "hoeffding",
) -> CompareReport:
    """Optimised SPS-versus-WCP advantage and break-even channel loss.

    The advantage is evaluated at the configured channel loss; the
    crossover is located by scanning losses up to
    ``CROSSOVER_SCAN_MAX_DB`` and bisecting the sign change of the rate
    ratio. Raises ``NoCrossover`` when the SPS never leads on the scan.
    """

    def rates_at(loss_db: float) -> tuple[float, float]:
        ch = replace(channel, channel_loss_db=loss_db)
        r_sps, _ = optimized_sps_rate(source, ch, proto, sec)
        r_wcp, _, _ = optimized_wcp_rate(ch, proto, sec, concentration=concentration)
        return r_sps, r_wcp

    r_sps, r_wcp = rates_at(channel.channel_loss_db)

    losses = []
    step = CROSSOVER_SCAN_STEP_DB
    loss = 0.0
    while loss <= CROSSOVER_SCAN_MAX_DB:
        losses.append(loss)
        loss += step
    margins = []
    for loss in losses:
        s, w = rates_at(loss)
        margins.append(s - w)
    if max(margins) <= 0.0:
        raise NoCrossover(
            f"SPS never exceeds WCP for losses in [0, {CROSSOVER_SCAN_MAX_DB}] dB"
        )
    bracket = None
    for i in range(len(losses) - 1):
        if margins[i] > 0.0 >= margins[i + 1]:
            bracket = (losses[i], losses[i + 1])
    if bracket is None:
        raise NoCrossover("SPS advantage persists across the whole scanned range")
    lo, hi = bracket
    for _ in range(14):
        mid = 0.5 * (lo + hi)
        s, w = rates_at(mid)
        if s - w > 0.0:
            lo = mid
        else:
            hi = mid
    crossover = 0.5 * (lo + hi)

    return CompareReport(
        loss_db=channel.channel_loss_db,
        r_sps=r_sps,
        r_wcp=r_wcp,
        advantage_db=advantage_db(r_sps, r_wcp),
        crossover_loss_db=crossover,
    )


def sweep_rates(
    source: SourceSpec,
    channel: ChannelDetectorModel,
    proto: ProtocolConfig,
    sec: SecurityParams,
    losses: list[float],
    concentration: str = "hoeffding",
) -> list[tuple[float, float, float, float]]:
    """Optimised (loss, r_sps, r_wcp, advantage) rows for a loss sweep."""
    rows = []
    for loss in losses:
        ch = replace(channel, channel_loss_db=loss)
        r_sps, _ = optimized_sps_rate(source, ch, proto, sec)
        r_wcp, _, _ = optimized_wcp_rate(ch, proto, sec, concentration=concentration)
        rows.append((loss, r_sps, r_wcp, advantage_db(r_sps, r_wcp)))
    return rows


def finite_boundary(
    loss_db: float,
    grid: list[float],
    channel: ChannelDetectorModel,
    proto: ProtocolConfig,
    sec: SecurityParams,
    asymptotic: bool = False,
    concentration: str = "hoeffding",
) -> BoundaryCurve:
    """Break-even locus of the finite-key pipelines in the (<n>, g2) plane.

    For each grid mean photon number the largest g2 at which the tuned
    SPS still matches the tuned WCP comparator is found by bisection;
    the exact minimum viable mean (at g2 = 0) is prepended as the first
    curve point. ``asymptotic=True`` evaluates both pipelines in their
    infinite-block limit.
    """
    ch = replace(channel, channel_loss_db=loss_db)
    r_wcp, _, _ = optimized_wcp_rate(
        ch, proto, sec, asymptotic=asymptotic, concentration=concentration
    )

    def sps_rate(n_mean: float, g2: float) -> float:
        try:
            src = SourceSpec(SourceKind.SPS, n_mean, g2)
        except NonPhysicalSource:
            return 0.0
        rate, _ = optimized_sps_rate(src, ch, proto, sec, asymptotic=asymptotic)
        return rate

    points: list[tuple[float, float]] = []
    for n_mean in sorted(grid):
        if sps_rate(n_mean, 0.0) < r_wcp:
            continue
        lo, hi = 0.0, 1.0 / n_mean
        if sps_rate(n_mean, hi) >= r_wcp:
            points.append((n_mean, hi))
            continue
        for _ in range(BOUNDARY_BISECTION_ITERATIONS):
            mid = 0.5 * (lo + hi)
            if sps_rate(n_mean, mid) >= r_wcp:
                lo = mid
            else:
                hi = mid
        points.append((n_mean, lo))
    if not points:
        raise EmptyCurve(f"no grid point admits an SPS advantage at {loss_db} dB")

    # Bisect the g2 = 0 endpoint below the smallest advantaged grid point.
    hi_n = points[0][0]
    lo_n = 1e-4
    if sps_rate(lo_n, 0.0) < r_wcp:
        for _ in range(BOUNDARY_BISECTION_ITERATIONS):
            mid = 0.5 * (lo_n + hi_n)
            if sps_rate(mid, 0.0) >= r_wcp:
                hi_n = mid
            else:
                lo_n = mid
        points.insert(0, (hi_n, 0.0))
    return BoundaryCurve(loss_db=loss_db, points=tuple(points))
