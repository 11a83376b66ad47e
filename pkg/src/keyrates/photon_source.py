"""Photon-number statistics of single-photon and weak-coherent sources.

The common currency of the toolkit is a truncated photon-number
distribution ``{p_0, ..., p_nmax}``. Single-photon sources (SPS) are
described by a mean photon number and a second-order correlation
``g2 = g^(2)(0)``, which fix ``{p0, p1, p2}`` through the first two
factorial moments. Weak coherent pulses (WCP) are Poissonian with the
tail above the cutoff absorbed into the last bin. Attenuation acts by
binomial thinning and leaves ``g2`` invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

NORMALIZATION_TOL = 1e-12
DEFAULT_WCP_CUTOFF = 20


class NonPhysicalSource(ValueError):
    """Raised when source parameters imply probabilities outside [0, 1]."""


class UndefinedG2(ValueError):
    """Raised when g2 is requested for a distribution with zero mean."""


@dataclass(frozen=True)
class PhotonNumberDistribution:
    """Probabilities of emitting n photons per pulse, n = 0 .. n_max.

    Immutable and safe to share between threads. Entries must be in
    [0, 1] and sum to one within ``NORMALIZATION_TOL``.
    """

    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.probs) < 3:
            raise NonPhysicalSource(
                f"distribution needs n_max >= 2, got n_max={len(self.probs) - 1}"
            )
        for n, p in enumerate(self.probs):
            if not (-NORMALIZATION_TOL <= p <= 1.0 + NORMALIZATION_TOL):
                raise NonPhysicalSource(f"p[{n}]={p!r} outside [0, 1]")
        total = math.fsum(self.probs)
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise NonPhysicalSource(f"probabilities sum to {total!r}, expected 1")

    @property
    def n_max(self) -> int:
        return len(self.probs) - 1

    def __getitem__(self, n: int) -> float:
        return self.probs[n]


class SourceKind(Enum):
    SPS = "sps"
    WCP = "wcp"


@dataclass(frozen=True)
class SourceSpec:
    """Source described by its kind, mean photon number and g2.

    For WCP sources the mean photon number is the Poisson intensity mu
    and ``g2`` is ignored (coherent light has g2 = 1 by construction).
    """

    kind: SourceKind
    mean_photon_number: float
    g2: float = 0.0

    def __post_init__(self) -> None:
        if self.mean_photon_number <= 0:
            raise NonPhysicalSource(
                f"mean photon number must be > 0, got {self.mean_photon_number}"
            )
        if self.g2 < 0:
            raise NonPhysicalSource(f"g2 must be >= 0, got {self.g2}")
        if self.kind is SourceKind.SPS and self.g2 * self.mean_photon_number > 1.0:
            raise NonPhysicalSource(
                f"g2*<n> = {self.g2 * self.mean_photon_number:.6g} > 1 implies p1 < 0"
            )

    @property
    def mu(self) -> float:
        """Poisson intensity alias, meaningful for WCP sources."""
        return self.mean_photon_number

    def distribution(self, n_max: int = DEFAULT_WCP_CUTOFF) -> PhotonNumberDistribution:
        if self.kind is SourceKind.SPS:
            return sps_distribution(self.mean_photon_number, self.g2)
        return wcp_distribution(self.mean_photon_number, n_max)


def sps_distribution(n_mean: float, g2: float) -> PhotonNumberDistribution:
    """Two-photon-truncated distribution matching a mean and g2.

    Solves the two-moment system ``p1 + 2 p2 = <n>`` and
    ``2 p2 = g2 <n>^2``, so ``p2 = g2 <n>^2 / 2`` and
    ``p1 = <n> - 2 p2``. The boundary ``g2 <n> = 1`` (p1 = 0) is
    accepted; anything beyond raises rather than clamps, so an
    inconsistent (<n>, g2) pair cannot propagate silently.
    """
    if n_mean <= 0:
        raise NonPhysicalSource(f"mean photon number must be > 0, got {n_mean}")
    if g2 < 0:
        raise NonPhysicalSource(f"g2 must be >= 0, got {g2}")
    if g2 * n_mean > 1.0 + NORMALIZATION_TOL:
        raise NonPhysicalSource(
            f"g2*<n> = {g2 * n_mean:.6g} > 1: no valid {{p0, p1, p2}} exists"
        )
    p2 = g2 * n_mean * n_mean / 2.0
    p1 = n_mean - 2.0 * p2
    p0 = 1.0 - p1 - p2
    if min(p0, p1, p2) < -NORMALIZATION_TOL or max(p0, p1, p2) > 1.0 + NORMALIZATION_TOL:
        raise NonPhysicalSource(
            f"(<n>={n_mean}, g2={g2}) gives probabilities outside [0, 1]: "
            f"({p0:.6g}, {p1:.6g}, {p2:.6g})"
        )
    return PhotonNumberDistribution((p0, max(p1, 0.0), p2))


def wcp_distribution(mu: float, n_max: int = DEFAULT_WCP_CUTOFF) -> PhotonNumberDistribution:
    """Poisson distribution with the tail absorbed into the last bin."""
    if mu < 0:
        raise NonPhysicalSource(f"mu must be >= 0, got {mu}")
    if n_max < 2:
        raise NonPhysicalSource(f"n_max must be >= 2, got {n_max}")
    probs = [0.0] * (n_max + 1)
    term = math.exp(-mu)
    for k in range(n_max):
        probs[k] = term
        term *= mu / (k + 1)
    probs[n_max] = max(0.0, 1.0 - math.fsum(probs[:n_max]))
    return PhotonNumberDistribution(tuple(probs))


def attenuate(dist: PhotonNumberDistribution, t: float) -> PhotonNumberDistribution:
    """Binomial thinning of a distribution by transmittance t.

    Each of n photons survives independently with probability t:
    ``out[k] = sum_n p_n C(n, k) t^k (1-t)^(n-k)``. The mean scales by
    t while g2 is unchanged. A tail bin produced by ``wcp_distribution``
    is thinned as if it held exactly ``n_max`` photons.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"transmittance must be in [0, 1], got {t}")
    if t == 1.0:
        return dist
    n_max = dist.n_max
    out = [0.0] * (n_max + 1)
    for n, p_n in enumerate(dist.probs):
        if p_n == 0.0:
            continue
        for k in range(n + 1):
            out[k] += p_n * math.comb(n, k) * t**k * (1.0 - t) ** (n - k)
    return PhotonNumberDistribution(tuple(out))


def moments(dist: PhotonNumberDistribution) -> tuple[float, float]:
    """Mean photon number and g2 of a distribution.

    ``g2 = sum_n n (n-1) p_n / mean^2``; raises ``UndefinedG2`` for a
    vacuum distribution.
    """
    mean = math.fsum(n * p for n, p in enumerate(dist.probs))
    if mean <= 0.0:
        raise UndefinedG2("g2 is undefined for a zero-mean distribution")
    second = math.fsum(n * (n - 1) * p for n, p in enumerate(dist.probs))
    return mean, second / (mean * mean)
