"""Slice-sampled Dirichlet-process mixture baseline.

One shared cluster index drives every component: observation i belongs to
cluster c[i] drawn from a single stick-breaking measure, and each component
j contributes an atom attached to that cluster.  The sweep mirrors the
factorized sampler's top level (concentration refresh, stick refresh, the
two label-switching moves, slices, assignments, atom redraws, garbage
collection), with the atoms traveling alongside the labels in both moves so
the observation likelihood never enters the acceptance ratios.
"""

from __future__ import annotations

import numpy as np

from ._numeric import clip_open_unit, tail_sums
from .sticks import ConcentrationParams, GammaPrior, StickMeasure
from .sampler import (
    SamplerInvariantError,
    _last_occupied,
    _relabel,
    draw_stick_concentration,
)


class DpmSampler:
    """Gibbs sampler for the joint Dirichlet-process mixture.

    Parameters match :class:`~tensormix.sampler.TensorMixtureSampler` where
    they apply; ``params.beta`` is ignored (the model has no second level).
    """

    def __init__(self, dataset, families=None, params=None, rng=None,
                 init="single", init_clusters=4, chain=0):
        from .data import kernels_for_dataset

        if rng is None:
            rng = np.random.default_rng()
        self.rng = rng
        self.chain = int(chain)
        self.n = dataset.n
        if self.n < 1:
            raise ValueError("need at least one observation")
        self.component_names = list(dataset.component_names)
        self.p = len(self.component_names)
        self.families = list(families) if families is not None else kernels_for_dataset(dataset)
        if len(self.families) != self.p:
            raise ValueError("need one kernel family per component")
        self.observations = [dataset.values[name] for name in self.component_names]
        self.observed = np.stack(
            [dataset.observed[name] for name in self.component_names], axis=1
        )
        if params is None:
            prior = GammaPrior(1.0, 1.0)
            params = ConcentrationParams(
                alpha=prior.draw(self.rng),
                beta=np.ones(max(self.p, 1)),
                alpha_prior=prior,
                beta_prior=prior,
            )
        self.alpha = float(params.alpha)
        self.alpha_prior = params.alpha_prior
        self.sweep_index = 0
        if init == "single":
            self.c = np.zeros(self.n, dtype=np.int64)
        elif init == "random":
            self.c = rng.integers(init_clusters, size=self.n)
        else:
            raise ValueError("init must be 'single' or 'random'")
        length = int(self.c.max()) + 2
        self.lam = StickMeasure(
            clip_open_unit(rng.beta(1.0, self.alpha, size=length)), self.alpha
        )
        self.m = np.bincount(self.c, minlength=length).astype(np.int64)
        self.atoms = [[None] * length for _ in range(self.p)]
        self._redraw_atoms()
        w = self.lam.weights[self.c]
        self.u = w * rng.random(self.n)

    # ------------------------------------------------------------- accessors

    @property
    def k_star(self):
        return _last_occupied(self.m) + 1

    def recount(self):
        return np.bincount(self.c, minlength=len(self.lam)).astype(np.int64)

    def check_invariants(self):
        if not np.array_equal(self.recount(), self.m):
            raise SamplerInvariantError("cluster counts out of sync")
        if len(self.m) != len(self.lam):
            raise SamplerInvariantError("count table length differs from stick count")
        for j in range(self.p):
            if len(self.atoms[j]) != len(self.lam):
                raise SamplerInvariantError("atom list misaligned for component %d" % j)
        w = self.lam.weights
        if np.any(self.u >= w[self.c]) or np.any(self.u < 0):
            raise SamplerInvariantError("slice outside (0, assigned weight)")

    def data_log_likelihood(self):
        total = 0.0
        for j in range(self.p):
            ll = self.families[j].log_density_matrix(self.atoms[j], self.observations[j])
            rows = np.flatnonzero(self.observed[:, j])
            total += float(ll[rows, self.c[rows]].sum())
        return total

    # ------------------------------------------------------------- the sweep

    def sweep(self):
        self._update_alpha()
        self._update_lambda()
        self._swap_pair()
        self._swap_adjacent()
        self._update_u()
        self._update_c()
        self._update_theta()
        self._collect_garbage()
        self.sweep_index += 1

    def _update_alpha(self):
        self.alpha = draw_stick_concentration(
            self.alpha_prior, [self.m], self.alpha, self.rng
        )

    def _update_lambda(self):
        k = self.k_star
        m = self.m[:k]
        fresh = self.rng.beta(1.0 + m, self.alpha + tail_sums(m))
        self.lam = StickMeasure(clip_open_unit(fresh), self.alpha)
        self._resize(k)

    def _resize(self, length):
        have = len(self.m)
        if have > length:
            self.m = self.m[:length].copy()
            for j in range(self.p):
                del self.atoms[j][length:]
        elif have < length:
            self.m = np.concatenate(
                [self.m, np.zeros(length - have, dtype=np.int64)]
            )
            for j in range(self.p):
                self.atoms[j].extend(
                    self.families[j].prior_draw(self.rng)
                    for _ in range(length - have)
                )

    def _swap_pair(self):
        occupied = np.flatnonzero(self.m)
        if occupied.size < 2:
            return
        h1, h2 = self.rng.choice(occupied, size=2, replace=False)
        w = self.lam.weights
        log_a = (self.m[h2] - self.m[h1]) * (np.log(w[h1]) - np.log(w[h2]))
        if np.log(self.rng.random()) < log_a:
            self._apply_pair(int(h1), int(h2))

    def _apply_pair(self, h1, h2):
        _relabel(self.c, h1, h2)
        self.m[[h1, h2]] = self.m[[h2, h1]]
        for j in range(self.p):
            self.atoms[j][h1], self.atoms[j][h2] = self.atoms[j][h2], self.atoms[j][h1]

    def _swap_adjacent(self):
        k = self.k_star
        h = int(self.rng.integers(k))
        if h + 1 >= len(self.lam):
            self.lam.append(float(clip_open_unit(self.rng.beta(1.0, self.alpha))))
            self._resize(len(self.lam))
        frac = self.lam.fractions
        occ = self.m > 0
        occ[[h, h + 1]] = occ[[h + 1, h]]
        k_new = _last_occupied(occ) + 1
        log_a = (self.m[h] * np.log1p(-frac[h + 1])
                 - self.m[h + 1] * np.log1p(-frac[h])
                 + np.log(k) - np.log(k_new))
        if np.log(self.rng.random()) < log_a:
            self._apply_adjacent(h)

    def _apply_adjacent(self, h):
        self.lam.swap(h, h + 1)
        self._apply_pair(h, h + 1)

    def _update_u(self):
        w = self.lam.weights[self.c]
        if np.any(w <= 0.0):
            raise SamplerInvariantError("an assigned cluster has zero weight")
        self.u = w * self.rng.random(self.n)

    def _update_c(self):
        rng = self.rng
        grown = self.lam.extend_to_mass(1.0 - float(self.u.min()), rng)
        if grown:
            self._resize(len(self.lam))
        width = len(self.lam)
        total = np.zeros((self.n, width))
        for j in range(self.p):
            ll = self.families[j].log_density_matrix(self.atoms[j], self.observations[j])
            ll[~self.observed[:, j], :] = 0.0
            total += ll
        feasible = self.lam.weights[None, :] > self.u[:, None]
        if not feasible.any(axis=1).all():
            raise SamplerInvariantError("empty slice support")
        scores = np.where(feasible, total + rng.gumbel(size=total.shape), -np.inf)
        self.c = scores.argmax(axis=1)
        self.m = np.bincount(self.c, minlength=width).astype(np.int64)

    def _update_theta(self):
        for j in range(self.p):
            self.atoms[j] = [self._atom_draw(j, h) for h in range(len(self.lam))]

    def _atom_draw(self, j, h):
        members = (self.c == h) & self.observed[:, j]
        return self.families[j].posterior_draw(self.observations[j][members], self.rng)

    def _redraw_atoms(self):
        self._update_theta()

    def _collect_garbage(self):
        keep = max(self.k_star + 1, 1)
        if keep < len(self.lam):
            self.lam.truncate(keep)
            self._resize(keep)

    # records and checkpoints ----------------------------------------------

    def draw_record(self):
        """Snapshot matching the factorized sampler's record layout.

        The per-component assignment columns all replicate the shared index,
        and the stick rows are empty: downstream consumers treat a missing
        second level as the single-index model.
        """
        return {
            "kind": "draw",
            "sweep": self.sweep_index,
            "chain": self.chain,
            "alpha": self.alpha,
            "beta": [],
            "lambda": self.lam.weights.tolist(),
            "psi": [],
            "atoms": [
                [self.families[j].atom_to_dict(a) for a in self.atoms[j]]
                for j in range(self.p)
            ],
            "c0": self.c.tolist(),
            "c": np.repeat(self.c[:, None], self.p, axis=1).tolist(),
        }

    def state_dict(self):
        return {
            "model": "dpm",
            "sweep_index": self.sweep_index,
            "chain": self.chain,
            "alpha": self.alpha,
            "c": self.c.copy(),
            "u": self.u.copy(),
            "lam_fractions": self.lam.fractions.copy(),
            "atoms": [
                [self.families[j].atom_to_dict(a) for a in self.atoms[j]]
                for j in range(self.p)
            ],
        }

    def load_state(self, state):
        self.sweep_index = int(state["sweep_index"])
        self.chain = int(state.get("chain", self.chain))
        self.alpha = float(state["alpha"])
        self.c = np.asarray(state["c"], dtype=np.int64).copy()
        self.u = np.asarray(state["u"], dtype=float).copy()
        self.lam = StickMeasure(np.asarray(state["lam_fractions"], dtype=float), self.alpha)
        self.atoms = [
            [self.families[j].atom_from_dict(d) for d in state["atoms"][j]]
            for j in range(self.p)
        ]
        self.m = np.bincount(self.c, minlength=len(self.lam)).astype(np.int64)
        self.check_invariants()

    def set_parts(self, c, alpha, lam_fractions, atoms):
        """Install an explicit model state; slices drawn fresh."""
        self.alpha = float(alpha)
        self.c = np.asarray(c, dtype=np.int64).copy()
        self.lam = StickMeasure(np.asarray(lam_fractions, dtype=float), self.alpha)
        self.atoms = [list(a) for a in atoms]
        self.m = np.bincount(self.c, minlength=len(self.lam)).astype(np.int64)
        self.u = self.lam.weights[self.c] * self.rng.random(self.n)
        self.check_invariants()
