"""Finite-key distillation for the three-state SPS protocol.

The secure key length of a block of Z-basis detections is

    L = N_z_floor * (1 - H(phi)) - lambda_EC
        - 2 log2(1 / (2 eps_PA)) - log2(2 / eps_cor)

clamped at zero. ``N_z_floor`` subtracts a high-confidence cap on the
number of multi-photon pulses from the observed Z detections, ``phi``
is the X-basis error rate inflated by worst-case assignment of
multi-photon detections and by statistical sampling deviations, and
``lambda_EC = f_EC * N_z * H(E_z)`` models error-correction leakage.

Statistical deviations use multiplicative-Chernoff-style inversions:
with ``beta = ln(1 / eps)``, an observed or expected count ``x`` is
bounded by ``x + beta + sqrt(2 beta x + beta^2)`` from above and by
``x - sqrt(2 beta x)`` from below. Multi-photon pulses are treated
pessimistically: every one of them is assumed to reach the receiver
and to leak fully, in both bases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..channel import ChannelDetectorModel, detection_stats, link_transmittance
from ..photon_source import SourceKind, SourceSpec, attenuate, moments

# Chernoff draws charged against eps_pe by the SPS pipeline: the Z and X
# multi-photon caps, the X error-count bound, and the basis-transfer
# deviation of the phase error.
SPS_CHERNOFF_USES = 4


class DomainError(ValueError):
    """Raised when a probability argument leaves its domain."""


class InsufficientBlock(ValueError):
    """Raised when the multi-photon cap exceeds the Z-basis detections."""


@dataclass(frozen=True)
class SecurityParams:
    """Failure-probability budget and error-correction efficiency.

    ``eps_pe`` is the total parameter-estimation budget, split equally
    across the concentration-bound draws of whichever pipeline consumes
    it. ``eps_pa``, ``eps_ec`` and ``eps_cor`` enter the key-length
    formula directly. ``f_ec >= 1`` scales the Shannon limit of the
    error-correction leakage.
    """

    eps_pe: float
    eps_pa: float
    eps_ec: float
    eps_cor: float
    f_ec: float

    def __post_init__(self) -> None:
        for name in ("eps_pe", "eps_pa", "eps_ec", "eps_cor"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValueError(f"{name} must be in (0, 1), got {value}")
        if self.f_ec < 1.0:
            raise ValueError(f"f_ec must be >= 1, got {self.f_ec}")

    def total_failure_probability(self) -> float:
        """Secrecy budget consumed by estimation plus PA and EC."""
        return self.eps_pe + self.eps_pa + self.eps_ec


@dataclass(frozen=True)
class ProtocolConfig:
    """Basis probabilities, block target and transmitter pre-attenuation.

    ``block_size`` counts Z-basis detections accumulated by the
    receiver; the number of pulses sent is inferred from the expected
    gain in analytic mode. ``q_z_rx`` defaults to the 9:1 passive basis
    choice of the receiver optics.
    """

    q_z_tx: float
    q_z_rx: float = 0.9
    block_size: float = 1e8
    pre_attenuation: float = 1.0

    def __post_init__(self) -> None:
        for name in ("q_z_tx", "q_z_rx"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValueError(f"{name} must be in (0, 1), got {value}")
        if self.block_size < 1:
            raise ValueError(f"block_size must be >= 1, got {self.block_size}")
        if not 0.0 < self.pre_attenuation <= 1.0:
            raise ValueError(
                f"pre_attenuation must be in (0, 1], got {self.pre_attenuation}"
            )


@dataclass(frozen=True)
class TallySet:
    """Counts of pulses sent, detections and errors per basis."""

    n_pulses_sent: float
    z_detections: float
    x_detections: float
    z_errors: float
    x_errors: float

    def __post_init__(self) -> None:
        if self.n_pulses_sent < 0:
            raise ValueError("n_pulses_sent must be >= 0")
        if not 0 <= self.z_errors <= self.z_detections:
            raise ValueError("need 0 <= z_errors <= z_detections")
        if not 0 <= self.x_errors <= self.x_detections:
            raise ValueError("need 0 <= x_errors <= x_detections")
        if self.z_detections + self.x_detections > self.n_pulses_sent:
            raise ValueError("detections exceed pulses sent")


@dataclass(frozen=True)
class KeyReport:
    """Key length, normalised rate and every intermediate bound."""

    key_length: float
    rate_per_pulse: float
    n_pulses_sent: float
    multi_photon_cap: float
    secure_detections: float
    phase_error_bound: float
    lambda_ec: float
    qber: float


def binary_entropy(p: float) -> float:
    """Binary Shannon entropy in bits, with H(0) = H(1) = 0."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"probability must be in [0, 1], got {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def chernoff_bound(x: float, eps: float, direction: str) -> float:
    """High-confidence bound on a count with observed or expected value x.

    With ``beta = ln(1 / eps)`` the upper bound is
    ``x + beta + sqrt(2 beta x + beta^2)`` and the lower bound is
    ``max(0, x - sqrt(2 beta x))``; both collapse to x as eps -> 1.
    """
    if x < 0:
        raise ValueError(f"count must be >= 0, got {x}")
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must be in (0, 1], got {eps}")
    beta = math.log(1.0 / eps)
    if direction == "upper":
        return x + beta + math.sqrt(2.0 * beta * x + beta * beta)
    if direction == "lower":
        return max(0.0, x - math.sqrt(2.0 * beta * x))
    raise ValueError(f"direction must be 'upper' or 'lower', got {direction!r}")


def _upper_count(x: float, eps: float) -> float:
    # Pipeline convention: an exactly-zero count or expectation stays
    # zero, so degenerate configurations reduce to the ideal formula.
    if x <= 0.0:
        return 0.0
    return chernoff_bound(x, eps, "upper")


def sps_key_length(
    tallies: TallySet,
    source: SourceSpec,
    proto: ProtocolConfig,
    sec: SecurityParams,
) -> KeyReport:
    """Secure key length of one SPS block.

    ``source`` describes the light actually launched, i.e. after any
    transmitter pre-attenuation. Raises ``InsufficientBlock`` when the
    multi-photon cap swallows the whole Z-basis block.
    """
    if source.kind is not SourceKind.SPS:
        raise ValueError("sps_key_length needs an SPS source")
    n_s = tallies.n_pulses_sent
    n_z = tallies.z_detections
    n_x = tallies.x_detections
    eps_1 = sec.eps_pe / SPS_CHERNOFF_USES

    p2 = source.g2 * source.mean_photon_number**2 / 2.0
    mp_cap_z = _upper_count(n_s * proto.q_z_tx * p2, eps_1)
    n_z_floor = n_z - mp_cap_z
    if n_z_floor <= 0.0 and mp_cap_z > 0.0:
        raise InsufficientBlock(
            f"multi-photon cap {mp_cap_z:.4g} >= Z detections {n_z:.4g}"
        )
    n_z_floor = max(n_z_floor, 0.0)

    qber_z = tallies.z_errors / n_z if n_z > 0 else 0.0
    lambda_ec = sec.f_ec * n_z * binary_entropy(qber_z)

    # Phase error: keep every observed X error, remove only the assumed
    # multi-photon share of the X sample, then charge the statistical
    # transfer onto the Z block.
    mp_cap_x = _upper_count(n_s * (1.0 - proto.q_z_tx) * p2, eps_1)
    n_x_floor = n_x - mp_cap_x
    if n_x_floor <= 0.0:
        phase_error = 0.5
    else:
        x_errors_up = _upper_count(tallies.x_errors, eps_1)
        phi_x = min(0.5, x_errors_up / n_x_floor)
        phase_error = min(0.5, _upper_count(n_z_floor * phi_x, eps_1) / n_z_floor)

    key_length = max(
        0.0,
        n_z_floor * (1.0 - binary_entropy(phase_error))
        - lambda_ec
        - 2.0 * math.log2(1.0 / (2.0 * sec.eps_pa))
        - math.log2(2.0 / sec.eps_cor),
    )
    return KeyReport(
        key_length=key_length,
        rate_per_pulse=key_length / n_s if n_s > 0 else 0.0,
        n_pulses_sent=n_s,
        multi_photon_cap=mp_cap_z,
        secure_detections=n_z_floor,
        phase_error_bound=phase_error,
        lambda_ec=lambda_ec,
        qber=qber_z,
    )


def expected_tallies(
    source: SourceSpec,
    channel: ChannelDetectorModel,
    proto: ProtocolConfig,
) -> tuple[TallySet, SourceSpec]:
    """Expected tallies for a block, plus the source after pre-attenuation.

    Sifting keeps the Z sample with probability ``q_z_tx * q_z_rx`` and
    the X sample with ``(1 - q_z_tx)(1 - q_z_rx)``; the pulse count is
    chosen so the Z sample hits the configured block size.
    """
    dist = attenuate(source.distribution(), proto.pre_attenuation)
    mean, g2 = moments(dist)
    launched = SourceSpec(source.kind, mean, g2)
    stats = detection_stats(dist, link_transmittance(channel), channel)
    if stats.q <= 0.0:
        raise InsufficientBlock("zero gain: no detections expected")
    n_s = proto.block_size / (proto.q_z_tx * proto.q_z_rx * stats.q)
    n_z = proto.block_size
    n_x = n_s * (1.0 - proto.q_z_tx) * (1.0 - proto.q_z_rx) * stats.q
    tallies = TallySet(
        n_pulses_sent=n_s,
        z_detections=n_z,
        x_detections=n_x,
        z_errors=stats.qber * n_z,
        x_errors=stats.qber * n_x,
    )
    return tallies, launched


def sps_expected_rate(
    source: SourceSpec,
    channel: ChannelDetectorModel,
    proto: ProtocolConfig,
    sec: SecurityParams,
    asymptotic: bool = False,
) -> KeyReport:
    """Deterministic finite-key rate of the analytic expectation pipeline.

    With ``asymptotic=True`` the statistical deviations vanish and the
    per-pulse rate converges to its infinite-block limit while keeping
    misalignment, dark counts and error-correction overheads.
    """
    tallies, launched = expected_tallies(source, channel, proto)
    if not asymptotic:
        return sps_key_length(tallies, launched, proto, sec)

    p2 = launched.g2 * launched.mean_photon_number**2 / 2.0
    n_s = tallies.n_pulses_sent
    n_z_floor = tallies.z_detections - n_s * proto.q_z_tx * p2
    if n_z_floor <= 0.0:
        raise InsufficientBlock("multi-photon share exceeds Z detections")
    qber = tallies.z_errors / tallies.z_detections
    n_x_floor = tallies.x_detections - n_s * (1.0 - proto.q_z_tx) * p2
    phase_error = 0.5 if n_x_floor <= 0 else min(0.5, tallies.x_errors / n_x_floor)
    lambda_ec = sec.f_ec * tallies.z_detections * binary_entropy(qber)
    key_length = max(
        0.0, n_z_floor * (1.0 - binary_entropy(phase_error)) - lambda_ec
    )
    return KeyReport(
        key_length=key_length,
        rate_per_pulse=key_length / n_s,
        n_pulses_sent=n_s,
        multi_photon_cap=tallies.z_detections - n_z_floor,
        secure_detections=n_z_floor,
        phase_error_bound=phase_error,
        lambda_ec=lambda_ec,
        qber=qber,
    )
