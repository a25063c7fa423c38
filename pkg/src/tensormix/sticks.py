"""Stick-breaking measures and collapsed predictive probabilities.

A stick measure is a lazily instantiated sequence of weights

    w_h = f_h * prod_{l < h} (1 - f_l),    f_h ~ Beta(1, c) iid,

so the instantiated weights plus the leftover mass prod(1 - f_l) always sum
to one.  The collapsed predictive helpers integrate the sticks out against
their Beta posteriors given assignment counts; they are the workhorse of the
partially collapsed top-level update in the sampler.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._numeric import clip_open_unit, exclusive_cumsum, fractions_to_weights, tail_sums


class InvalidStickError(ValueError):
    """A stick fraction lies outside the open unit interval."""


class UninstantiatedIndexError(IndexError):
    """An index beyond the instantiated sticks was referenced; extend first."""


@dataclass(frozen=True)
class GammaPrior:
    """Gamma(shape, rate) prior for a concentration parameter."""

    shape: float = 1.0
    rate: float = 1.0

    def __post_init__(self):
        if self.shape <= 0 or self.rate <= 0:
            raise ValueError("Gamma prior requires positive shape and rate")

    def draw(self, rng):
        return float(rng.gamma(self.shape, 1.0 / self.rate))

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        return (self.shape - 1.0) * np.log(x) - self.rate * x

    @property
    def mean(self):
        return self.shape / self.rate


@dataclass
class ConcentrationParams:
    """Concentrations of the two stick-breaking levels and their hyperpriors.

    alpha governs the top-level sticks; beta holds one concentration per
    component, shared across all top-level clusters of that component.
    """

    alpha: float
    beta: np.ndarray
    alpha_prior: GammaPrior = field(default_factory=GammaPrior)
    beta_prior: GammaPrior = field(default_factory=GammaPrior)

    def __post_init__(self):
        self.beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        if self.alpha <= 0 or np.any(self.beta <= 0):
            raise ValueError("concentration parameters must be strictly positive")


class StickMeasure:
    """Instantiated prefix of an infinite stick-breaking measure.

    Parameters
    ----------
    fractions : array-like
        Stick fractions, each strictly inside (0, 1).
    concentration : float
        Beta(1, concentration) law used when the measure is extended.
    """

    __slots__ = ("fractions", "concentration", "_weights", "_leftover")

    def __init__(self, fractions, concentration):
        f = np.atleast_1d(np.asarray(fractions, dtype=float))
        if f.ndim != 1:
            raise InvalidStickError("fractions must be a one-dimensional sequence")
        if f.size and (np.any(f <= 0.0) or np.any(f >= 1.0)):
            raise InvalidStickError("stick fractions must lie strictly in (0, 1)")
        if not concentration > 0:
            raise InvalidStickError("concentration must be strictly positive")
        self.fractions = f
        self.concentration = float(concentration)
        self._refresh()

    def _refresh(self):
        self._weights, self._leftover = fractions_to_weights(self.fractions)

    def __len__(self):
        return self.fractions.size

    @property
    def weights(self):
        """Weights of the instantiated sticks, in order."""
        return self._weights

    @property
    def leftover(self):
        """Mass remaining beyond the instantiated sticks."""
        return float(self._leftover)

    def weight(self, level):
        """Weight of a single 1-based level."""
        if not 1 <= level <= len(self):
            raise UninstantiatedIndexError(
                "level %d is not instantiated (have %d sticks); extend the "
                "measure first" % (level, len(self))
            )
        return float(self._weights[level - 1])

    def extend_to_mass(self, target_mass, rng):
        """Append prior draws until the instantiated weights sum past target_mass.

        Returns the number of sticks appended.  A target of 1 or more can
        never be reached and is rejected.
        """
        if target_mass >= 1.0:
            raise ValueError("target mass must be strictly below 1")
        added = []
        leftover = self._leftover
        while 1.0 - leftover <= target_mass:
            f = clip_open_unit(rng.beta(1.0, self.concentration))
            added.append(f)
            leftover *= 1.0 - f
        if added:
            self.fractions = np.concatenate([self.fractions, added])
            self._refresh()
        return len(added)

    def append(self, fraction):
        """Append one explicit fraction (used by swap moves at the boundary)."""
        if not 0.0 < fraction < 1.0:
            raise InvalidStickError("stick fractions must lie strictly in (0, 1)")
        self.fractions = np.concatenate([self.fractions, [fraction]])
        self._refresh()

    def swap(self, i, k):
        """Exchange the fractions at 0-based positions i and k."""
        f = self.fractions
        f[i], f[k] = f[k], f[i]
        self._refresh()

    def truncate(self, length):
        """Drop sticks beyond the given count."""
        if length < len(self):
            self.fractions = self.fractions[:length].copy()
            self._refresh()

    def copy(self):
        return StickMeasure(self.fractions.copy(), self.concentration)


def stick_to_weights(measure):
    """Weights and leftover mass of a stick measure.

    Returns
    -------
    (weights, leftover) : (ndarray, float)
        ``weights.sum() + leftover == 1`` up to float rounding.
    """
    return measure.weights.copy(), measure.leftover


def extend_sticks(measure, target_mass, rng):
    """Pure variant of extension: returns a new measure whose instantiated
    weights sum past ``target_mass``; the input is left untouched."""
    out = measure.copy()
    out.extend_to_mass(target_mass, rng)
    return out


def _gem_log_predictive_unchecked(m, concentration, n_levels):
    """Hot-loop core of :func:`gem_log_predictive`; no argument validation.

    ``m`` must be a one-dimensional float ndarray of nonnegative counts.
    """
    total = m.sum()
    if n_levels > m.size:
        padded = np.zeros(n_levels)
        padded[: m.size] = m
        m = padded
    elif n_levels < m.size:
        m = m[:n_levels]
    cs = np.cumsum(m)
    s = total - cs  # count mass strictly beyond each level, full tail included
    denom = np.log1p(concentration + m + s)
    log_keep = np.log(concentration + s)
    log_keep -= denom
    out = np.empty(n_levels)
    out[0] = 0.0
    np.cumsum(log_keep[:-1], out=out[1:])
    out += np.log1p(m)
    out -= denom
    return out


def gem_log_predictive(counts, concentration, n_levels):
    """Log collapsed predictive over the first ``n_levels`` stick levels.

    Integrating the sticks against their Beta(1 + m_l, c + sum_{s>l} m_s)
    posteriors given level counts ``m`` yields, for 1-based level r,

        P(r) = (1 + m_r) / (1 + c + m_r + S_r)
               * prod_{l<r} (c + S_l) / (1 + c + m_l + S_l),

    with S_l the count mass strictly beyond level l.  Levels past the end of
    ``counts`` carry zero counts; the formula covers them analytically.

    Returns an ndarray of length ``n_levels`` with entry r-1 holding log P(r).
    """
    m = np.asarray(counts, dtype=float)
    if m.ndim != 1:
        raise ValueError("counts must be one-dimensional")
    if np.any(m < 0):
        raise ValueError("counts must be nonnegative")
    if not concentration > 0:
        raise ValueError("concentration must be strictly positive")
    if n_levels < 1:
        raise ValueError("need at least one level")
    return _gem_log_predictive_unchecked(m, concentration, n_levels)


def gem_predictive_prob(counts, concentration, level):
    """Collapsed predictive probability of a single 1-based stick level.

    Parameters
    ----------
    counts : array-like
        Per-level assignment counts; levels beyond the array are zeros.
    concentration : float
        Stick-breaking concentration.
    level : int
        1-based level whose predictive probability is wanted.
    """
    if level < 1:
        raise ValueError("levels are 1-based; got %d" % level)
    return float(np.exp(gem_log_predictive(counts, concentration, level)[level - 1]))


def gem_predictive_tail(counts, concentration, n_levels):
    """Mass the collapsed predictive leaves beyond the first ``n_levels`` levels.

    Satisfies sum_r P(r) + tail == 1 exactly (telescoping), which pins down
    the normalization of :func:`gem_predictive_prob`.
    """
    m = np.asarray(counts, dtype=float)
    if n_levels < 0:
        raise ValueError("n_levels must be nonnegative")
    total = m.sum()
    if n_levels > m.size:
        m = np.concatenate([m, np.zeros(n_levels - m.size)])
    m = m[:n_levels]
    s = total - np.cumsum(m)  # full-tail count mass beyond each level
    log_keep = np.log(concentration + s) - np.log1p(concentration + m + s)
    return float(np.exp(np.sum(log_keep)))
