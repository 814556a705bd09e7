"""Largest singular values along curves and the sampling set Omega.

The scalar objective of the inner loop is

    Gamma(K) = max_{t in Omega} sigma_max(G(K, gamma(t))),

evaluated on a finite sample set.  Samples cluster around poles close to
the curve, where the maximum is attained; a coarse fallback grid keeps the
set nonempty when no pole is nearby.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .curves import Curve
from .errors import GammaSampleError, NumericalError
from .systems import (
    FrozenStateSpace,
    NEAR_SINGULAR_GUARD,
    ParametricStateSpace,
    PoleSet,
)

POLE_ANCHORED = "pole-anchored"
REFINEMENT = "refinement"
FALLBACK_GRID = "fallback-grid"

# Relative offsets (in units of the pole's curve distance) of the anchored
# samples around each near-curve pole's projection.
ANCHOR_OFFSETS = (0.1, 0.3, 1.0)

FALLBACK_POINTS = 20


def sigma_max(G) -> float:
    """Spectral norm: the largest singular value."""
    G = np.asarray(G)
    if not np.all(np.isfinite(G.real)) or not np.all(np.isfinite(G.imag)):
        raise NumericalError("sigma_max called with non-finite entries")
    return float(np.linalg.svd(G, compute_uv=False)[0])


@dataclass(frozen=True)
class Sample:
    """One curve parameter with provenance."""

    t: float
    tag: str = FALLBACK_GRID
    anchor: Optional[complex] = None


@dataclass(frozen=True)
class SampleSet:
    """Finite, sorted, duplicate-free set of curve parameters."""

    samples: tuple

    def __post_init__(self):
        if not self.samples:
            raise ValueError("sample set must be nonempty")
        object.__setattr__(
            self, "samples", tuple(sorted(self.samples, key=lambda s: s.t))
        )

    @property
    def ts(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def merged_with(self, other: "SampleSet") -> "SampleSet":
        return build_from_samples(list(self.samples) + list(other.samples))


def build_from_samples(samples) -> SampleSet:
    """Sort and deduplicate; pole-anchored provenance wins over fallback."""
    samples = sorted(samples, key=lambda s: (s.t, s.tag != POLE_ANCHORED))
    out = []
    for s in samples:
        if out and abs(s.t - out[-1].t) <= 1e-12 * (1.0 + abs(s.t)):
            continue
        out.append(s)
    return SampleSet(samples=tuple(out))


@dataclass(frozen=True)
class GammaValue:
    """Maximum of sigma_max(G(gamma(t))) over the sample set."""

    value: float
    argmax_t: float
    attained_near: Optional[complex] = None


def default_anchor_band(poles: PoleSet, curve: Curve) -> float:
    """Band within which poles get anchored samples.

    Five times the nearest pole's curve distance, capped at the pole-set
    diameter; the floor keeps the nearest pole itself inside the band.
    """
    dists = np.array([curve.distance(p) for p in poles.poles])
    d_near = float(np.min(dists))
    spread = poles.spread()
    if spread <= 0.0:
        return 5.0 * d_near
    return min(5.0 * d_near, max(spread, 1.01 * d_near))


def _fallback_ts(poles: PoleSet) -> np.ndarray:
    """Coarse log grid of |t| covering the pole imaginary-part range."""
    im = np.abs(np.imag(poles.values()))
    t_max = max(1.0, 1.2 * float(np.max(im))) if im.size else 1.0
    t_min = max(1e-2, 1e-3 * t_max)
    mags = np.logspace(np.log10(t_min), np.log10(t_max), FALLBACK_POINTS)
    return np.concatenate([[0.0], mags, -mags])


def build_sample_set(
    poles: PoleSet,
    curve: Curve,
    band: float,
    per_pole: int = 7,
) -> SampleSet:
    """Pole-anchored samples plus the fallback grid, deduplicated.

    Each pole within ``band`` of the curve (the nearest pole always)
    contributes ``per_pole`` samples: the projection of the pole onto the
    curve plus symmetric offsets proportional to the pole's distance.
    Samples that would collide with a pole are dropped.
    """
    if band <= 0:
        raise ValueError("band must be positive")
    if per_pole < 1 or per_pole % 2 == 0:
        raise ValueError("per_pole must be a positive odd count")
    n_off = (per_pole - 1) // 2
    offsets = list(ANCHOR_OFFSETS)
    while len(offsets) < n_off:  # widen geometrically if more were asked for
        offsets.append(offsets[-1] * 3.0)
    offsets = offsets[:n_off]

    pole_values = poles.values()
    dists = np.array([curve.distance(p) for p in pole_values])

    samples = []
    for p, d in zip(pole_values, dists):
        if d > band:
            continue
        if d <= 0.0:
            continue  # pole on the curve: nothing sensible to anchor
        t0 = curve.project(p)
        samples.append(Sample(t=t0, tag=POLE_ANCHORED, anchor=complex(p)))
        for off in offsets:
            for sign in (+1.0, -1.0):
                samples.append(
                    Sample(t=t0 + sign * off * d, tag=POLE_ANCHORED, anchor=complex(p))
                )

    for t in _fallback_ts(poles):
        samples.append(Sample(t=float(t), tag=FALLBACK_GRID))

    # Drop samples that sit essentially on a pole.
    kept = []
    for s in samples:
        pt = curve.point(s.t)
        if np.min(np.abs(pole_values - pt)) < 1e-8 * (1.0 + abs(pt)):
            continue
        kept.append(s)
    if not kept:
        kept = samples  # degenerate; let the evaluation guard speak
    return build_from_samples(kept)


def _gamma_frozen(frozen: FrozenStateSpace, curve: Curve, samples: SampleSet) -> GammaValue:
    eig = frozen.eigenvalues()
    fold = curve.conjugate_symmetric and frozen.is_real()
    cache = {}
    best = -np.inf
    best_t = samples.samples[0].t
    best_anchor = None
    for smp in samples:
        key = round(abs(smp.t), 12) if fold else round(smp.t, 12)
        if key in cache:
            val = cache[key]
        else:
            pt = curve.point(abs(smp.t) if fold else smp.t)
            d = np.abs(eig - pt)
            i = int(np.argmin(d))
            if d[i] < NEAR_SINGULAR_GUARD * (1.0 + abs(pt)):
                raise GammaSampleError(smp.t, pt, eig[i])
            val = sigma_max(frozen.response(pt))
            cache[key] = val
        if val > best:
            best = val
            best_t = smp.t
            best_anchor = smp.anchor
    return GammaValue(value=float(best), argmax_t=float(best_t), attained_near=best_anchor)


def gamma_of(sys: ParametricStateSpace, K, curve: Curve, samples: SampleSet) -> GammaValue:
    """Gamma(K) on the finite sample set, with the argmax recorded.

    Raises :class:`GammaSampleError` naming the sample and the nearest pole
    if a sample collides with a pole of G(K, .).
    """
    return _gamma_frozen(sys.at(K), curve, samples)
