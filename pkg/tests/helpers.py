"""Shared test utilities: exact forward samplers and Monte Carlo helpers.

The forward samplers draw a complete labeled model state by walking the
stick-breaking construction directly, which gives tests an independent
ground truth to compare the Gibbs machinery against.
"""

from __future__ import annotations

import numpy as np

from tensormix.data import ComponentSchema, MixedDataset
from tensormix.kernels import CategoricalKernel
from tensormix.sticks import ConcentrationParams, GammaPrior


def clip_fraction(f):
    """Keep a stick fraction inside the open unit interval."""
    return min(max(float(f), 1e-12), 1.0 - 1e-12)


def stick_walk(concentration, rng, fractions):
    """One stick-breaking label draw, instantiating fractions lazily.

    ``fractions`` is a mutable list that accumulates the Beta(1, c) draws, so
    repeated calls share the same underlying measure.
    """
    h = 0
    while True:
        if h == len(fractions):
            fractions.append(clip_fraction(rng.beta(1.0, concentration)))
        if rng.random() < fractions[h]:
            return h
        h += 1


def walk_labels(concentration, n, rng):
    """n labels from one shared stick measure; returns (labels, fractions)."""
    fracs = []
    labels = np.array([stick_walk(concentration, rng, fracs) for _ in range(n)],
                      dtype=np.int64)
    return labels, np.asarray(fracs)


def forward_two_level(n, n_components, n_levels, rng, prior=None,
                      alpha=None, beta=None):
    """Complete forward draw of the two-level mixture with categorical kernels.

    Returns a dict with every state piece plus the generated observations,
    shaped exactly the way ``TensorMixtureSampler.set_parts`` expects.
    """
    if prior is None:
        prior = GammaPrior(1.0, 1.0)
    if alpha is None:
        alpha = prior.draw(rng)
    if beta is None:
        beta = np.array([prior.draw(rng) for _ in range(n_components)])
    beta = np.asarray(beta, dtype=float)
    c0, lam_f = walk_labels(alpha, n, rng)
    height = int(c0.max()) + 1
    fam = CategoricalKernel(n_levels, concentration=1.0)
    c = np.zeros((n, n_components), dtype=np.int64)
    psi_f, atoms = [], []
    for j in range(n_components):
        rowf = [[] for _ in range(height)]
        for i in range(n):
            c[i, j] = stick_walk(beta[j], rng, rowf[c0[i]])
        width = int(c[:, j].max()) + 1
        mat = np.empty((len(lam_f), width))
        for h in range(len(lam_f)):
            have = rowf[h] if h < height else []
            for l in range(width):
                mat[h, l] = have[l] if l < len(have) else clip_fraction(
                    rng.beta(1.0, beta[j])
                )
        psi_f.append(mat)
        atoms.append([fam.prior_draw(rng) for _ in range(width)])
    y = np.empty((n, n_components), dtype=np.int64)
    for j in range(n_components):
        for i in range(n):
            y[i, j] = fam.sample(atoms[j][c[i, j]], rng)
    return {
        "alpha": float(alpha), "beta": beta, "c0": c0, "c": c,
        "lam_fractions": lam_f, "psi_f": psi_f, "atoms": atoms, "y": y,
        "family": fam,
    }


def forward_single_level(n, n_levels, rng, prior=None, alpha=None):
    """Forward draw of the single-index mixture with a categorical kernel."""
    if prior is None:
        prior = GammaPrior(1.0, 1.0)
    if alpha is None:
        alpha = prior.draw(rng)
    labels, fracs = walk_labels(alpha, n, rng)
    fam = CategoricalKernel(n_levels, concentration=1.0)
    atoms = [fam.prior_draw(rng) for _ in range(int(labels.max()) + 1)]
    y = np.array([fam.sample(atoms[labels[i]], rng) for i in range(n)],
                 dtype=np.int64)
    return {
        "alpha": float(alpha), "c": labels, "lam_fractions": fracs,
        "atoms": atoms, "y": y, "family": fam,
    }


def categorical_dataset(y, n_levels, names=None):
    """Wrap an (n, p) level-code matrix as a MixedDataset."""
    y = np.asarray(y)
    if y.ndim == 1:
        y = y[:, None]
    p = y.shape[1]
    if names is None:
        names = ["comp%d" % j for j in range(p)]
    levels = tuple("l%d" % k for k in range(n_levels))
    comps = [ComponentSchema(names[j], "categorical", levels=levels)
             for j in range(p)]
    return MixedDataset(comps, {names[j]: y[:, j].copy() for j in range(p)})


def concentration_params(alpha, beta, prior=None):
    if prior is None:
        prior = GammaPrior(1.0, 1.0)
    return ConcentrationParams(alpha=alpha, beta=np.atleast_1d(beta),
                               alpha_prior=prior, beta_prior=prior)


def batch_means_se(x, n_batches=50):
    """Batch-means standard error of the mean of a (possibly) correlated chain."""
    x = np.asarray(x, dtype=float)
    usable = (x.shape[0] // n_batches) * n_batches
    batches = x[:usable].reshape(n_batches, -1).mean(axis=1)
    return float(batches.std(ddof=1) / np.sqrt(n_batches))


def geweke_z(chain_values, forward_values, n_batches=50):
    """z-score between a chain mean (batch-means SE) and an iid forward mean."""
    chain_values = np.asarray(chain_values, dtype=float)
    forward_values = np.asarray(forward_values, dtype=float)
    se_chain = batch_means_se(chain_values, n_batches)
    se_fwd = forward_values.std(ddof=1) / np.sqrt(forward_values.size)
    return float((chain_values.mean() - forward_values.mean())
                 / np.sqrt(se_chain ** 2 + se_fwd ** 2))
