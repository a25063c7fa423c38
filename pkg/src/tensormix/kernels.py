"""Observation kernels with conjugate prior and posterior draws.

Three families cover the supported component kinds:

* ``GaussianDiagKernel`` — real vectors, independent coordinates, with a
  normal-inverse-gamma prior per coordinate.
* ``CategoricalKernel`` — single categorical draws with a Dirichlet prior.
* ``Ar1Kernel`` — fixed-length series modeled as a first-order autoregression
  with Gaussian innovations; the intercept and lag coefficient carry a joint
  normal prior given the innovation variance (inverse-gamma), and coefficient
  draws are kept inside (-1, 1) by rejection.

Every family knows how to draw an atom from the prior, score observations
under an atom, draw an atom from its conditional given cluster data, sample
synthetic observations, and round-trip atoms through plain dicts for the
draw-stream format.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np

LOG_2PI = float(np.log(2.0 * np.pi))


class DomainMismatchError(ValueError):
    """An observation does not match the family's domain."""


@dataclass(frozen=True)
class GaussianAtom:
    mean: np.ndarray
    var: np.ndarray


@dataclass(frozen=True)
class CategoricalAtom:
    probs: np.ndarray


@dataclass(frozen=True)
class Ar1Atom:
    coef: float
    intercept: float
    innov_var: float

    @property
    def level(self):
        """Long-run mean implied by the intercept and lag coefficient."""
        return self.intercept / (1.0 - self.coef)


class KernelFamily(abc.ABC):
    """Shared interface of the per-component likelihood families."""

    tag: str

    @abc.abstractmethod
    def prior_draw(self, rng):
        """One atom from the prior."""

    @abc.abstractmethod
    def posterior_draw(self, data, rng):
        """One atom from its conditional given the stacked cluster data.

        With zero rows of data this is exactly a prior draw.
        """

    @abc.abstractmethod
    def log_density(self, atom, y):
        """Log density of a single observation under an atom."""

    @abc.abstractmethod
    def log_density_matrix(self, atoms, ys):
        """(n, K) matrix of log densities for n observations x K atoms."""

    @abc.abstractmethod
    def sample(self, atom, rng):
        """One synthetic observation drawn from the atom's law."""

    @abc.abstractmethod
    def atom_to_dict(self, atom):
        ...

    @abc.abstractmethod
    def atom_from_dict(self, d):
        ...

    @abc.abstractmethod
    def to_dict(self):
        """Family tag plus hyperparameters, JSON-ready."""

    @abc.abstractmethod
    def atom_mean(self, atom):
        """Mean of one observation under the atom's law.

        Categorical atoms return the level probabilities; numeric atoms
        return the mean vector, which point predictions average.
        """

    def validate(self, ys):
        """Check a stacked observation array; raise DomainMismatchError."""


class GaussianDiagKernel(KernelFamily):
    """Diagonal-covariance Gaussian on real vectors.

    Each coordinate k carries an independent normal-inverse-gamma prior:
    var_k ~ InvGamma(var_shape, var_scale_k) and
    mean_k | var_k ~ Normal(prior_mean_k, var_k / prior_count).

    Parameters
    ----------
    dim : int
        Observation dimension.
    prior_mean : float or array
        Prior location per coordinate.
    prior_count : float
        Pseudo-count scaling the prior precision of the mean.
    var_shape, var_scale : float or array
        Inverse-gamma parameters of the coordinate variances.
    """

    tag = "gaussian"

    def __init__(self, dim, prior_mean=0.0, prior_count=1.0, var_shape=2.0, var_scale=1.0):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = int(dim)
        self.prior_mean = np.broadcast_to(np.asarray(prior_mean, dtype=float), (dim,)).copy()
        self.prior_count = float(prior_count)
        self.var_shape = float(var_shape)
        self.var_scale = np.broadcast_to(np.asarray(var_scale, dtype=float), (dim,)).copy()
        if self.prior_count <= 0 or self.var_shape <= 0 or np.any(self.var_scale <= 0):
            raise ValueError("prior_count, var_shape and var_scale must be positive")

    @classmethod
    def from_data(cls, values):
        """Empirical-Bayes prior: location at the data mean, variance prior
        centered on the per-coordinate data variance."""
        values = np.asarray(values, dtype=float)
        mean = np.nanmean(values, axis=0)
        var = np.nanvar(values, axis=0)
        var = np.where(var > 0, var, 1.0)
        # var_shape 2 puts the inverse-gamma mean exactly at var_scale
        return cls(values.shape[1], prior_mean=mean, prior_count=1.0,
                   var_shape=2.0, var_scale=var)

    def validate(self, ys):
        ys = np.asarray(ys)
        if ys.ndim != 2 or ys.shape[1] != self.dim:
            raise DomainMismatchError(
                "expected real vectors of dimension %d, got shape %r" % (self.dim, ys.shape)
            )

    def prior_draw(self, rng):
        var = self.var_scale / rng.gamma(self.var_shape, 1.0, size=self.dim)
        mean = self.prior_mean + np.sqrt(var / self.prior_count) * rng.standard_normal(self.dim)
        return GaussianAtom(mean=mean, var=var)

    def posterior_draw(self, data, rng):
        data = np.asarray(data, dtype=float).reshape(-1, self.dim)
        n = data.shape[0]
        if n == 0:
            return self.prior_draw(rng)
        ybar = data.mean(axis=0)
        ss = ((data - ybar) ** 2).sum(axis=0)
        count = self.prior_count + n
        loc = (self.prior_count * self.prior_mean + n * ybar) / count
        shape = self.var_shape + 0.5 * n
        scale = (self.var_scale + 0.5 * ss
                 + 0.5 * self.prior_count * n * (ybar - self.prior_mean) ** 2 / count)
        var = scale / rng.gamma(shape, 1.0, size=self.dim)
        mean = loc + np.sqrt(var / count) * rng.standard_normal(self.dim)
        return GaussianAtom(mean=mean, var=var)

    def log_density(self, atom, y):
        y = np.asarray(y, dtype=float)
        z = (y - atom.mean) ** 2 / atom.var
        return float(-0.5 * (z + np.log(atom.var) + LOG_2PI).sum())

    def log_density_matrix(self, atoms, ys):
        ys = np.asarray(ys, dtype=float)
        means = np.stack([a.mean for a in atoms])          # (K, d)
        varis = np.stack([a.var for a in atoms])           # (K, d)
        z = (ys[:, None, :] - means[None, :, :]) ** 2 / varis[None, :, :]
        return -0.5 * (z + np.log(varis)[None, :, :] + LOG_2PI).sum(axis=2)

    def sample(self, atom, rng):
        return atom.mean + np.sqrt(atom.var) * rng.standard_normal(self.dim)

    def atom_mean(self, atom):
        return np.asarray(atom.mean, dtype=float)

    def atom_to_dict(self, atom):
        return {"mean": atom.mean.tolist(), "var": atom.var.tolist()}

    def atom_from_dict(self, d):
        return GaussianAtom(mean=np.asarray(d["mean"], dtype=float),
                            var=np.asarray(d["var"], dtype=float))

    def to_dict(self):
        return {
            "family": self.tag,
            "dim": self.dim,
            "prior_mean": self.prior_mean.tolist(),
            "prior_count": self.prior_count,
            "var_shape": self.var_shape,
            "var_scale": self.var_scale.tolist(),
        }


class CategoricalKernel(KernelFamily):
    """Categorical draws over a fixed number of levels, Dirichlet prior."""

    tag = "categorical"

    def __init__(self, n_levels, concentration=1.0):
        if n_levels < 2:
            raise ValueError("a categorical component needs at least two levels")
        self.n_levels = int(n_levels)
        self.concentration = np.broadcast_to(
            np.asarray(concentration, dtype=float), (self.n_levels,)
        ).copy()
        if np.any(self.concentration <= 0):
            raise ValueError("Dirichlet concentration must be positive")

    def validate(self, ys):
        ys = np.asarray(ys)
        if ys.ndim != 1:
            raise DomainMismatchError("expected a flat array of level codes")
        if ys.size and (ys.min() < 0 or ys.max() >= self.n_levels):
            raise DomainMismatchError(
                "level codes must lie in [0, %d)" % self.n_levels
            )

    def prior_draw(self, rng):
        return CategoricalAtom(probs=rng.dirichlet(self.concentration))

    def posterior_draw(self, data, rng):
        data = np.asarray(data, dtype=int).reshape(-1)
        counts = np.bincount(data, minlength=self.n_levels) if data.size else 0.0
        return CategoricalAtom(probs=rng.dirichlet(self.concentration + counts))

    def log_density(self, atom, y):
        return float(np.log(atom.probs[int(y)]))

    def log_density_matrix(self, atoms, ys):
        ys = np.asarray(ys, dtype=int)
        logp = np.log(np.stack([a.probs for a in atoms]))  # (K, L)
        return logp[:, ys].T

    def sample(self, atom, rng):
        return int(rng.choice(self.n_levels, p=atom.probs))

    def atom_mean(self, atom):
        return np.asarray(atom.probs, dtype=float)

    def atom_to_dict(self, atom):
        return {"probs": atom.probs.tolist()}

    def atom_from_dict(self, d):
        return CategoricalAtom(probs=np.asarray(d["probs"], dtype=float))

    def to_dict(self):
        return {
            "family": self.tag,
            "n_levels": self.n_levels,
            "concentration": self.concentration.tolist(),
        }


class Ar1Kernel(KernelFamily):
    """First-order autoregression on fixed-length series.

    The series likelihood conditions each point on its predecessor with the
    leading point anchored at zero history:

        y_t ~ Normal(intercept + coef * y_{t-1}, innov_var),   y_0 := 0.

    (intercept, coef) given innov_var carry a joint normal prior with mean
    ``coef_mean`` and precision ``innov_var * coef_precision``; innov_var is
    inverse-gamma.  Draws are rejected until |coef| < 1, which is exactly the
    posterior under the prior truncated to the stationary region.
    """

    tag = "ar1"

    def __init__(self, length, coef_mean=(0.0, 0.0), coef_precision=(0.25, 1.0),
                 var_shape=2.0, var_scale=1.0, max_rejects=1000):
        if length < 2:
            raise ValueError("series must have at least two points")
        self.length = int(length)
        self.coef_mean = np.asarray(coef_mean, dtype=float).reshape(2)
        self.coef_precision = np.asarray(coef_precision, dtype=float).reshape(2)
        self.var_shape = float(var_shape)
        self.var_scale = float(var_scale)
        self.max_rejects = int(max_rejects)
        if np.any(self.coef_precision <= 0) or self.var_shape <= 0 or self.var_scale <= 0:
            raise ValueError("precisions and inverse-gamma parameters must be positive")

    @classmethod
    def from_data(cls, values):
        """Empirical-Bayes prior: innovation variance centered on half the
        mean squared first difference, intercept centered at zero after the
        grand mean is absorbed into its prior spread."""
        values = np.asarray(values, dtype=float)
        diffs = np.diff(values, axis=1)
        innov = 0.5 * np.nanmean(diffs ** 2)
        innov = innov if innov > 0 else 1.0
        spread = np.nanvar(values)
        spread = spread if spread > 0 else 1.0
        # precision entries are relative to innov_var; aim the prior variance
        # of the intercept at the data spread and of the coefficient at 0.5
        prec = (innov / spread, 2.0 * innov)
        return cls(values.shape[1], coef_mean=(np.nanmean(values) * 0.2, 0.5),
                   coef_precision=prec, var_shape=2.0, var_scale=innov)

    def validate(self, ys):
        ys = np.asarray(ys)
        if ys.ndim != 2 or ys.shape[1] != self.length:
            raise DomainMismatchError(
                "expected series of length %d, got shape %r" % (self.length, ys.shape)
            )

    def _design(self, data):
        lagged = np.concatenate([np.zeros((data.shape[0], 1)), data[:, :-1]], axis=1)
        x = np.stack([np.ones(data.size), lagged.reshape(-1)], axis=1)
        return x, data.reshape(-1)

    def _nig_draw(self, prec, mean_prec_times_mean, shape, scale, rng):
        cov = np.linalg.inv(prec)
        loc = cov @ mean_prec_times_mean
        for _ in range(self.max_rejects):
            innov_var = scale / rng.gamma(shape, 1.0)
            chol = np.linalg.cholesky(innov_var * cov)
            pair = loc + chol @ rng.standard_normal(2)
            if abs(pair[1]) < 1.0:
                return Ar1Atom(coef=float(pair[1]), intercept=float(pair[0]),
                               innov_var=float(innov_var))
        raise RuntimeError("AR(1) draw failed to land in the stationary region")

    def prior_draw(self, rng):
        prec0 = np.diag(self.coef_precision)
        return self._nig_draw(prec0, prec0 @ self.coef_mean,
                              self.var_shape, self.var_scale, rng)

    def posterior_draw(self, data, rng):
        data = np.asarray(data, dtype=float).reshape(-1, self.length)
        if data.shape[0] == 0:
            return self.prior_draw(rng)
        x, z = self._design(data)
        prec0 = np.diag(self.coef_precision)
        prec = prec0 + x.T @ x
        b = prec0 @ self.coef_mean + x.T @ z
        loc = np.linalg.solve(prec, b)
        shape = self.var_shape + 0.5 * z.size
        scale = self.var_scale + 0.5 * (
            z @ z + self.coef_mean @ prec0 @ self.coef_mean - loc @ prec @ loc
        )
        return self._nig_draw(prec, b, shape, max(scale, 1e-12), rng)

    def _residuals(self, atom, data):
        lagged = np.concatenate([np.zeros((data.shape[0], 1)), data[:, :-1]], axis=1)
        return data - atom.intercept - atom.coef * lagged

    def log_density(self, atom, y):
        y = np.asarray(y, dtype=float).reshape(1, -1)
        r = self._residuals(atom, y)
        return float(-0.5 * ((r ** 2).sum() / atom.innov_var
                             + y.size * (np.log(atom.innov_var) + LOG_2PI)))

    def log_density_matrix(self, atoms, ys):
        ys = np.asarray(ys, dtype=float)
        lagged = np.concatenate([np.zeros((ys.shape[0], 1)), ys[:, :-1]], axis=1)
        coef = np.array([a.coef for a in atoms])
        icpt = np.array([a.intercept for a in atoms])
        ivar = np.array([a.innov_var for a in atoms])
        resid = ys[:, None, :] - icpt[None, :, None] - coef[None, :, None] * lagged[:, None, :]
        quad = (resid ** 2).sum(axis=2) / ivar[None, :]
        return -0.5 * (quad + ys.shape[1] * (np.log(ivar)[None, :] + LOG_2PI))

    def sample(self, atom, rng):
        eps = np.sqrt(atom.innov_var) * rng.standard_normal(self.length)
        y = np.empty(self.length)
        prev = 0.0
        for t in range(self.length):
            prev = atom.intercept + atom.coef * prev + eps[t]
            y[t] = prev
        return y

    def atom_mean(self, atom):
        mean = np.empty(self.length)
        prev = 0.0
        for t in range(self.length):
            prev = atom.intercept + atom.coef * prev
            mean[t] = prev
        return mean

    def atom_to_dict(self, atom):
        return {"coef": atom.coef, "intercept": atom.intercept, "innov_var": atom.innov_var}

    def atom_from_dict(self, d):
        return Ar1Atom(coef=float(d["coef"]), intercept=float(d["intercept"]),
                       innov_var=float(d["innov_var"]))

    def to_dict(self):
        return {
            "family": self.tag,
            "length": self.length,
            "coef_mean": self.coef_mean.tolist(),
            "coef_precision": self.coef_precision.tolist(),
            "var_shape": self.var_shape,
            "var_scale": self.var_scale,
        }


def family_from_dict(d):
    """Rebuild a kernel family from its ``to_dict`` payload."""
    tag = d["family"]
    if tag == GaussianDiagKernel.tag:
        return GaussianDiagKernel(d["dim"], prior_mean=d["prior_mean"],
                                  prior_count=d["prior_count"],
                                  var_shape=d["var_shape"], var_scale=d["var_scale"])
    if tag == CategoricalKernel.tag:
        return CategoricalKernel(d["n_levels"], concentration=d["concentration"])
    if tag == Ar1Kernel.tag:
        return Ar1Kernel(d["length"], coef_mean=d["coef_mean"],
                         coef_precision=d["coef_precision"],
                         var_shape=d["var_shape"], var_scale=d["var_scale"])
    raise ValueError("unknown kernel family %r" % tag)
