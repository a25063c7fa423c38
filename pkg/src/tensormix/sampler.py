"""Blocked Gibbs sweep for the two-level factorized mixture.

The model assigns each observation a top-level cluster c0 drawn from
stick-breaking weights, and per-component clusters c[i, j] drawn from the
top cluster's own stick-breaking row; component j's observation then comes
from the kernel atom indexed by c[i, j], with atoms shared across top-level
clusters.  Uniform slice variables under each assigned weight keep every
update finite without truncating the model:

    u0[i] ~ U(0, lambda[c0[i]]),    u[i, j] ~ U(0, psi_j[c0[i], c[i, j]]).

A sweep refreshes, in order: the top concentration, the top sticks, two
label-switching moves, the top slices, the top assignments (with the lower
sticks and slices integrated out), then per component the lower
concentration, stick rows, label moves, slices and assignments, and finally
the kernel atoms.  Stale blocks are never conditioned on between their
marginalization and their redraw, which keeps the partially collapsed order
exact.  Trailing unoccupied levels are garbage-collected after every sweep.

Everything conditions on the labeled state (which stick index each cluster
occupies), not merely on the partition; the concentration refreshes below
use the matching labeled-state conditionals.
"""

from __future__ import annotations

import numpy as np

from ._numeric import clip_open_unit, tail_sums
from .sticks import (ConcentrationParams, GammaPrior, StickMeasure,
                     _gem_log_predictive_unchecked)

PIN_FRACTION = 1.0 - 1e-12  # top stick used when the top level is pinned


class SamplerInvariantError(RuntimeError):
    """An internal consistency condition failed; the state is corrupt."""


def draw_stick_concentration(prior, count_rows, concentration, rng):
    """One Gibbs refresh of a stick-breaking concentration.

    Given labeled assignment counts, the concentration's conditional is

        p(c | counts) ~ p(c) * prod_rows c^K_r prod_{h<=K_r}
                        Gamma(c + S_rh) / Gamma(c + S_rh + m_rh + 1),

    with K_r the last occupied level of the row and S_rh the count mass
    beyond level h.  One Beta(c + S_rh, m_rh + 1) auxiliary per level turns
    this into a single Gamma draw.  Rows all share the same concentration;
    pass a single row for the top level.

    The auxiliaries enter only through their logs, which a small first shape
    can push far below the double-precision floor, so each log-Beta value is
    drawn exactly in log space through the product identity

        Beta(a, m + 1)  =d  prod_{t=0..m} Beta(a + t, 1),

    whose factors have logs -Exp(1) / (a + t).

    Parameters
    ----------
    prior : GammaPrior
    count_rows : iterable of 1-d count arrays
    concentration : float
        Current value (enters the auxiliaries' conditional law).
    rng : numpy Generator
    """
    shape = prior.shape
    rate = prior.rate
    for row in count_rows:
        m = np.asarray(row, dtype=np.int64)
        occupied = np.flatnonzero(m)
        if occupied.size == 0:
            continue
        k = int(occupied[-1]) + 1
        m = m[:k]
        s = tail_sums(m)
        lengths = m + 1
        total = int(lengths.sum())
        offsets = np.arange(total) - np.repeat(np.cumsum(lengths) - lengths, lengths)
        denom = np.repeat(concentration + s, lengths) + offsets
        shape += k
        rate += float((rng.exponential(size=total) / denom).sum())
    return float(rng.gamma(shape, 1.0 / rate))


def _relabel(vec, a, b):
    sel_a = vec == a
    sel_b = vec == b
    vec[sel_a] = b
    vec[sel_b] = a


def _swap_rows(mat, a, b):
    mat[[a, b]] = mat[[b, a]]


def _swap_cols(mat, a, b):
    mat[:, [a, b]] = mat[:, [b, a]]


def _last_occupied(counts):
    nz = np.flatnonzero(counts)
    return int(nz[-1]) if nz.size else -1


def _pick_weighted(log_weights, rng):
    """Index draw proportional to exp(log_weights)."""
    w = np.exp(log_weights - log_weights.max())
    cdf = np.cumsum(w)
    idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(idx, w.size - 1)


class TensorMixtureSampler:
    """Gibbs sampler for the factorized mixture on a mixed dataset.

    Parameters
    ----------
    dataset : MixedDataset
    families : list of KernelFamily, optional
        One per component; defaults to data-scaled families.
    params : ConcentrationParams, optional
        Initial concentrations and their hyperpriors; by default both
        concentrations start at prior draws under Gamma(1, 1).
    rng : numpy Generator
    init : {"single", "random"}
        Start everything in one cluster, or in ``init_clusters`` random
        blocks at both levels.
    single_top : bool
        Pin the top level to one cluster with unit weight.  The model then
        collapses to an ordinary Dirichlet-process mixture per component,
        which the cross-checking tests exploit.
    """

    def __init__(self, dataset, families=None, params=None, rng=None,
                 init="single", init_clusters=4, single_top=False, chain=0):
        from .data import kernels_for_dataset

        if rng is None:
            rng = np.random.default_rng()
        self.rng = rng
        self.chain = int(chain)
        self.single_top = bool(single_top)
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
                beta=np.array([prior.draw(self.rng) for _ in range(self.p)]),
                alpha_prior=prior,
                beta_prior=prior,
            )
        if params.beta.size != self.p:
            raise ValueError("params.beta must hold one entry per component")
        self.alpha = float(params.alpha)
        self.beta = params.beta.astype(float).copy()
        self.alpha_prior = params.alpha_prior
        self.beta_prior = params.beta_prior
        self.sweep_index = 0
        self._init_assignments(init, init_clusters)
        self._init_sticks_and_atoms()

    # ------------------------------------------------------------------ setup

    def _init_assignments(self, init, init_clusters):
        n, p, rng = self.n, self.p, self.rng
        if init == "single" or self.single_top:
            self.c0 = np.zeros(n, dtype=np.int64)
        elif init == "random":
            self.c0 = rng.integers(init_clusters, size=n)
        else:
            raise ValueError("init must be 'single' or 'random'")
        if init == "single":
            self.c = np.zeros((n, p), dtype=np.int64)
        else:
            self.c = rng.integers(init_clusters, size=(n, p))

    def _init_sticks_and_atoms(self):
        rng = self.rng
        if self.single_top:
            self.lam = StickMeasure([PIN_FRACTION], self.alpha)
        else:
            top = int(self.c0.max()) + 2
            self.lam = StickMeasure(
                clip_open_unit(rng.beta(1.0, self.alpha, size=top)), self.alpha
            )
        length = len(self.lam)
        self.m0 = np.bincount(self.c0, minlength=length).astype(np.int64)
        self.mj = []
        self.psi_f = []
        self.psi_w = []
        self.psi_rest = []
        self.atoms = []
        for j in range(self.p):
            width = int(self.c[:, j].max()) + 2
            counts = np.zeros((length, width), dtype=np.int64)
            np.add.at(counts, (self.c0, self.c[:, j]), 1)
            self.mj.append(counts)
            self.psi_f.append(
                clip_open_unit(rng.beta(1.0, self.beta[j], size=(length, width)))
            )
            self.psi_w.append(None)
            self.psi_rest.append(None)
            self._psi_refresh(j)
            self.atoms.append([None] * width)
        self._redraw_atoms_all()
        self._draw_slices()

    def _redraw_atoms_all(self):
        for j in range(self.p):
            width = self.psi_f[j].shape[1]
            self.atoms[j] = [
                self._atom_draw(j, h) for h in range(width)
            ]

    def _atom_draw(self, j, h):
        members = (self.c[:, j] == h) & self.observed[:, j]
        return self.families[j].posterior_draw(self.observations[j][members], self.rng)

    def _draw_slices(self):
        rng = self.rng
        w = self.lam.weights[self.c0]
        self.u0 = w * rng.random(self.n)
        self.u = np.empty((self.n, self.p))
        for j in range(self.p):
            vals = self.psi_w[j][self.c0, self.c[:, j]]
            self.u[:, j] = vals * rng.random(self.n)

    def _psi_refresh(self, j):
        # Clipping at the single choke point keeps every stored fraction in
        # the open unit interval even when a Beta draw rounds to 0 or 1.
        f = clip_open_unit(self.psi_f[j])
        self.psi_f[j] = f
        log_keep = np.log1p(-f)
        prefix = np.cumsum(log_keep, axis=1) - log_keep
        self.psi_w[j] = f * np.exp(prefix)
        self.psi_rest[j] = np.exp(log_keep.sum(axis=1))

    # ------------------------------------------------------------- accessors

    @property
    def k_top(self):
        """Number of levels up to the last occupied top cluster."""
        return _last_occupied(self.m0) + 1

    def k_lower(self, j):
        return _last_occupied(self.mj[j].sum(axis=0)) + 1

    def occupied_top(self):
        return np.flatnonzero(self.m0)

    def recount(self):
        """Counts recomputed from scratch (oracle for the maintained tables)."""
        m0 = np.bincount(self.c0, minlength=len(self.lam)).astype(np.int64)
        mj = []
        for j in range(self.p):
            counts = np.zeros_like(self.mj[j])
            np.add.at(counts, (self.c0, self.c[:, j]), 1)
            mj.append(counts)
        return m0, mj

    def check_invariants(self):
        """Raise SamplerInvariantError on any broken internal invariant."""
        m0, mj = self.recount()
        if len(self.m0) != len(self.lam):
            raise SamplerInvariantError("count table height differs from stick count")
        if not np.array_equal(m0, self.m0):
            raise SamplerInvariantError("top-level counts out of sync")
        w = self.lam.weights
        if np.any(self.u0 >= w[self.c0]) or np.any(self.u0 < 0):
            raise SamplerInvariantError("top slice outside (0, assigned weight)")
        for j in range(self.p):
            if not np.array_equal(mj[j], self.mj[j]):
                raise SamplerInvariantError("lower counts out of sync for component %d" % j)
            if self.mj[j].shape != self.psi_f[j].shape:
                raise SamplerInvariantError("count/stick shape mismatch for component %d" % j)
            if len(self.atoms[j]) != self.psi_f[j].shape[1]:
                raise SamplerInvariantError("atom list width mismatch for component %d" % j)
            vals = self.psi_w[j][self.c0, self.c[:, j]]
            if np.any(self.u[:, j] >= vals) or np.any(self.u[:, j] < 0):
                raise SamplerInvariantError("lower slice outside its weight for component %d" % j)
        if int(self.m0.sum()) != self.n:
            raise SamplerInvariantError("top counts do not total n")

    def data_log_likelihood(self):
        """Sum of observed-cell log densities under the current atoms."""
        total = 0.0
        for j in range(self.p):
            ll = self.families[j].log_density_matrix(self.atoms[j], self.observations[j])
            rows = np.flatnonzero(self.observed[:, j])
            total += float(ll[rows, self.c[rows, j]].sum())
        return total

    # ------------------------------------------------------------- the sweep

    def sweep(self):
        self._update_alpha()
        self._update_lambda()
        self._swap_top_pair()
        self._swap_top_adjacent()
        self._update_u0()
        self._update_c0()
        for j in range(self.p):
            self._update_beta(j)
        for j in range(self.p):
            self._update_psi(j)
        for j in range(self.p):
            self._swap_lower_pair(j)
            self._swap_lower_adjacent(j)
        self._update_u1()
        for j in range(self.p):
            self._update_cj(j)
        for j in range(self.p):
            self._update_theta(j)
        self._collect_garbage()
        self.sweep_index += 1

    # top level ---------------------------------------------------------

    def _update_alpha(self):
        if self.single_top:
            return
        self.alpha = draw_stick_concentration(
            self.alpha_prior, [self.m0], self.alpha, self.rng
        )

    def _update_lambda(self):
        if self.single_top:
            return
        k = self.k_top
        m = self.m0[:k]
        fresh = self.rng.beta(1.0 + m, self.alpha + tail_sums(m))
        self.lam = StickMeasure(clip_open_unit(fresh), self.alpha)
        self._resize_top(k)

    def _resize_top(self, length):
        self.m0 = self.m0[:length].copy() if len(self.m0) >= length else np.concatenate(
            [self.m0, np.zeros(length - len(self.m0), dtype=np.int64)]
        )
        for j in range(self.p):
            have = self.mj[j].shape[0]
            if have > length:
                self.mj[j] = self.mj[j][:length].copy()
            elif have < length:
                pad = np.zeros((length - have, self.mj[j].shape[1]), dtype=np.int64)
                self.mj[j] = np.vstack([self.mj[j], pad])

    def _top_pair_log_ratio(self, h1, h2):
        """Log acceptance ratio of exchanging top labels h1 and h2."""
        w = self.lam.weights
        return (self.m0[h2] - self.m0[h1]) * (np.log(w[h1]) - np.log(w[h2]))

    def _swap_top_pair(self):
        occupied = self.occupied_top()
        if occupied.size < 2:
            return
        h1, h2 = self.rng.choice(occupied, size=2, replace=False)
        log_a = self._top_pair_log_ratio(h1, h2)
        if np.log(self.rng.random()) < log_a:
            self._apply_top_pair(int(h1), int(h2))

    def _apply_top_pair(self, h1, h2):
        _relabel(self.c0, h1, h2)
        self.m0[[h1, h2]] = self.m0[[h2, h1]]
        for j in range(self.p):
            _swap_rows(self.mj[j], h1, h2)

    def _top_adjacent_log_ratio(self, h):
        """Log acceptance ratio of exchanging top levels h and h+1.

        Uses pre-exchange symbols: the stick-density ratio times the
        proposal-count correction k_old/k_new for the uniform choice of h
        among the levels up to the last occupied one.
        """
        frac = self.lam.fractions
        occ = self.m0 > 0
        occ = occ.copy()
        occ[[h, h + 1]] = occ[[h + 1, h]]
        k_new = _last_occupied(occ) + 1
        return (self.m0[h] * np.log1p(-frac[h + 1])
                - self.m0[h + 1] * np.log1p(-frac[h])
                + np.log(self.k_top) - np.log(k_new))

    def _swap_top_adjacent(self):
        if self.single_top:
            return
        h = int(self.rng.integers(self.k_top))
        if h + 1 >= len(self.lam):
            self.lam.append(float(clip_open_unit(self.rng.beta(1.0, self.alpha))))
            self._resize_top(len(self.lam))
        log_a = self._top_adjacent_log_ratio(h)
        if np.log(self.rng.random()) < log_a:
            self._apply_top_adjacent(h)

    def _apply_top_adjacent(self, h):
        self.lam.swap(h, h + 1)
        self._apply_top_pair(h, h + 1)

    def _update_u0(self):
        w = self.lam.weights[self.c0]
        if np.any(w <= 0.0):
            raise SamplerInvariantError("an assigned top cluster has zero weight")
        self.u0 = w * self.rng.random(self.n)

    def _update_c0(self):
        """Reassign top clusters with lower sticks and slices integrated out.

        Candidate weights multiply, over components, the collapsed predictive
        probability of the observation's current lower label under the
        candidate row's counts (holding everyone else fixed).  Counts are
        refreshed after every observation because the conditional is on
        the other observations' current assignments.
        """
        if self.single_top:
            return
        rng = self.rng
        grown = self.lam.extend_to_mass(1.0 - float(self.u0.min()), rng)
        if grown:
            self._resize_top(len(self.lam))
        length = len(self.lam)
        w = self.lam.weights
        tables, cached = [], []
        for j in range(self.p):
            width = self.mj[j].shape[1]
            tab = np.empty((length, width))
            for k in range(length):
                tab[k] = _gem_log_predictive_unchecked(
                    self.mj[j][k], self.beta[j], width
                )
            tables.append(tab)
            cached.append(np.empty(width))
        c0, m0, u0, c, mj, beta = self.c0, self.m0, self.u0, self.c, self.mj, self.beta
        p = self.p
        for i in range(self.n):
            current = c0[i]
            feasible = np.flatnonzero(u0[i] < w)
            if feasible.size == 0:
                raise SamplerInvariantError("empty top-level slice support")
            if feasible.size == 1:
                # the slice admits only the current label (it is always
                # feasible), so the conditional is a point mass: no change
                continue
            labels = c[i]
            m0[current] -= 1
            for j in range(p):
                mj[j][current, labels[j]] -= 1
                cached[j][:] = tables[j][current]
                tables[j][current] = _gem_log_predictive_unchecked(
                    mj[j][current], beta[j], tables[j].shape[1]
                )
            log_w = tables[0][feasible, labels[0]].copy()
            for j in range(1, p):
                log_w += tables[j][feasible, labels[j]]
            target = int(feasible[_pick_weighted(log_w, rng)])
            c0[i] = target
            m0[target] += 1
            if target == current:
                for j in range(p):
                    mj[j][current, labels[j]] += 1
                    tables[j][current] = cached[j]
            else:
                for j in range(p):
                    mj[j][target, labels[j]] += 1
                    tables[j][target] = _gem_log_predictive_unchecked(
                        mj[j][target], beta[j], tables[j].shape[1]
                    )

    # lower level ---------------------------------------------------------

    def _update_beta(self, j):
        rows = [self.mj[j][r] for r in self.occupied_top()]
        self.beta[j] = draw_stick_concentration(
            self.beta_prior, rows, self.beta[j], self.rng
        )

    def _update_psi(self, j):
        counts = self.mj[j]
        fresh = self.rng.beta(1.0 + counts, self.beta[j] + tail_sums(counts, axis=1))
        self.psi_f[j] = clip_open_unit(fresh)
        self._psi_refresh(j)

    def _lower_pair_log_ratio(self, j, h1, h2):
        """Log acceptance ratio of exchanging lower labels h1 and h2."""
        rows = self.occupied_top()
        logw = np.log(self.psi_w[j][rows])
        counts = self.mj[j][rows]
        return float(
            ((counts[:, h2] - counts[:, h1]) * (logw[:, h1] - logw[:, h2])).sum()
        )

    def _swap_lower_pair(self, j):
        occupied = np.flatnonzero(self.mj[j].sum(axis=0))
        if occupied.size < 2:
            return
        h1, h2 = self.rng.choice(occupied, size=2, replace=False)
        log_a = self._lower_pair_log_ratio(j, h1, h2)
        if np.log(self.rng.random()) < log_a:
            self._apply_lower_pair(j, int(h1), int(h2))

    def _apply_lower_pair(self, j, h1, h2):
        _relabel(self.c[:, j], h1, h2)
        _swap_cols(self.mj[j], h1, h2)
        self.atoms[j][h1], self.atoms[j][h2] = self.atoms[j][h2], self.atoms[j][h1]

    def _lower_adjacent_log_ratio(self, j, h):
        """Log acceptance ratio of exchanging lower levels h and h+1."""
        frac = self.psi_f[j]
        rows = self.occupied_top()
        counts = self.mj[j]
        col_occ = counts.sum(axis=0) > 0
        col_occ[[h, h + 1]] = col_occ[[h + 1, h]]
        k_new = _last_occupied(col_occ) + 1
        return float(
            (counts[rows, h] * np.log1p(-frac[rows, h + 1])
             - counts[rows, h + 1] * np.log1p(-frac[rows, h])).sum()
            + np.log(self.k_lower(j)) - np.log(k_new)
        )

    def _swap_lower_adjacent(self, j):
        h = int(self.rng.integers(self.k_lower(j)))
        if h + 1 >= self.psi_f[j].shape[1]:
            self._extend_lower(j)
        log_a = self._lower_adjacent_log_ratio(j, h)
        if np.log(self.rng.random()) < log_a:
            self._apply_lower_adjacent(j, h)

    def _apply_lower_adjacent(self, j, h):
        _swap_cols(self.psi_f[j], h, h + 1)
        self._psi_refresh(j)
        self._apply_lower_pair(j, h, h + 1)

    def _extend_lower(self, j):
        """Append one stick level (and a fresh prior atom) to every row."""
        height = self.psi_f[j].shape[0]
        col = clip_open_unit(self.rng.beta(1.0, self.beta[j], size=height))
        self.psi_f[j] = np.hstack([self.psi_f[j], col[:, None]])
        self.psi_w[j] = np.hstack([self.psi_w[j], (col * self.psi_rest[j])[:, None]])
        self.psi_rest[j] = self.psi_rest[j] * (1.0 - col)
        self.mj[j] = np.hstack(
            [self.mj[j], np.zeros((height, 1), dtype=np.int64)]
        )
        self.atoms[j].append(self.families[j].prior_draw(self.rng))

    def _update_u1(self):
        rng = self.rng
        for j in range(self.p):
            vals = self.psi_w[j][self.c0, self.c[:, j]]
            if np.any(vals <= 0.0):
                raise SamplerInvariantError("an assigned lower cluster has zero weight")
            self.u[:, j] = vals * rng.random(self.n)

    def _update_cj(self, j):
        u = self.u[:, j]
        u_min = float(u.min())
        while np.any(self.psi_rest[j] >= u_min):
            self._extend_lower(j)
        width = self.psi_f[j].shape[1]
        loglik = self.families[j].log_density_matrix(
            self.atoms[j], self.observations[j]
        )
        loglik[~self.observed[:, j], :] = 0.0
        feasible = self.psi_w[j][self.c0, :] > u[:, None]
        if not feasible.any(axis=1).all():
            raise SamplerInvariantError("empty lower slice support")
        scores = np.where(
            feasible, loglik + self.rng.gumbel(size=(self.n, width)), -np.inf
        )
        self.c[:, j] = scores.argmax(axis=1)
        counts = np.zeros((len(self.m0), width), dtype=np.int64)
        np.add.at(counts, (self.c0, self.c[:, j]), 1)
        self.mj[j] = counts

    def _update_theta(self, j):
        width = self.psi_f[j].shape[1]
        self.atoms[j] = [self._atom_draw(j, h) for h in range(width)]

    # bookkeeping ----------------------------------------------------------

    def _collect_garbage(self):
        keep_top = max(self.k_top + 1, 1)
        if keep_top < len(self.lam):
            self.lam.truncate(keep_top)
            self._resize_top(keep_top)
            for j in range(self.p):
                self.psi_f[j] = self.psi_f[j][:keep_top].copy()
                self._psi_refresh(j)
        for j in range(self.p):
            keep = max(self.k_lower(j) + 1, 1)
            if keep < self.psi_f[j].shape[1]:
                self.psi_f[j] = self.psi_f[j][:, :keep].copy()
                self._psi_refresh(j)
                self.mj[j] = self.mj[j][:, :keep].copy()
                del self.atoms[j][keep:]

    # records and checkpoints ----------------------------------------------

    def draw_record(self):
        """JSON-ready snapshot of the retained state."""
        return {
            "kind": "draw",
            "sweep": self.sweep_index,
            "chain": self.chain,
            "alpha": self.alpha,
            "beta": self.beta.tolist(),
            "lambda": self.lam.weights.tolist(),
            "psi": [self.psi_w[j].tolist() for j in range(self.p)],
            "atoms": [
                [self.families[j].atom_to_dict(a) for a in self.atoms[j]]
                for j in range(self.p)
            ],
            "c0": self.c0.tolist(),
            "c": self.c.tolist(),
        }

    def state_dict(self):
        """Everything needed to resume the chain exactly (minus the RNG)."""
        return {
            "model": "itf",
            "sweep_index": self.sweep_index,
            "chain": self.chain,
            "alpha": self.alpha,
            "beta": self.beta.copy(),
            "c0": self.c0.copy(),
            "c": self.c.copy(),
            "u0": self.u0.copy(),
            "u": self.u.copy(),
            "lam_fractions": self.lam.fractions.copy(),
            "psi_f": [f.copy() for f in self.psi_f],
            "atoms": [
                [self.families[j].atom_to_dict(a) for a in self.atoms[j]]
                for j in range(self.p)
            ],
            "single_top": self.single_top,
        }

    def load_state(self, state):
        self.sweep_index = int(state["sweep_index"])
        self.chain = int(state.get("chain", self.chain))
        self.alpha = float(state["alpha"])
        self.beta = np.asarray(state["beta"], dtype=float).copy()
        self.c0 = np.asarray(state["c0"], dtype=np.int64).copy()
        self.c = np.asarray(state["c"], dtype=np.int64).copy()
        self.u0 = np.asarray(state["u0"], dtype=float).copy()
        self.u = np.asarray(state["u"], dtype=float).copy()
        self.single_top = bool(state.get("single_top", False))
        self.lam = StickMeasure(np.asarray(state["lam_fractions"], dtype=float), self.alpha)
        self.psi_f = [np.asarray(f, dtype=float).copy() for f in state["psi_f"]]
        self.psi_w = [None] * self.p
        self.psi_rest = [None] * self.p
        for j in range(self.p):
            self._psi_refresh(j)
        self.atoms = [
            [self.families[j].atom_from_dict(d) for d in state["atoms"][j]]
            for j in range(self.p)
        ]
        self.m0 = np.bincount(self.c0, minlength=len(self.lam)).astype(np.int64)
        self.mj = []
        for j in range(self.p):
            counts = np.zeros(self.psi_f[j].shape, dtype=np.int64)
            np.add.at(counts, (self.c0, self.c[:, j]), 1)
            self.mj.append(counts)
        self.check_invariants()

    def set_parts(self, c0, c, alpha, beta, lam_fractions, psi_f, atoms):
        """Install an explicit model state (used to start a chain from a
        forward draw); slices are drawn fresh from their conditionals."""
        self.alpha = float(alpha)
        self.beta = np.asarray(beta, dtype=float).copy()
        self.c0 = np.asarray(c0, dtype=np.int64).copy()
        self.c = np.asarray(c, dtype=np.int64).copy()
        self.lam = StickMeasure(np.asarray(lam_fractions, dtype=float), self.alpha)
        self.psi_f = [np.asarray(f, dtype=float).copy() for f in psi_f]
        for j in range(self.p):
            self._psi_refresh(j)
        self.atoms = [list(a) for a in atoms]
        self.m0 = np.bincount(self.c0, minlength=len(self.lam)).astype(np.int64)
        self.mj = []
        for j in range(self.p):
            counts = np.zeros(self.psi_f[j].shape, dtype=np.int64)
            np.add.at(counts, (self.c0, self.c[:, j]), 1)
            self.mj.append(counts)
        self._draw_slices()
        self.check_invariants()


def run_chain(sampler, iterations, burnin, thin, on_draw,
              checkpoint_every=None, on_checkpoint=None, start=0):
    """Drive a sampler for a fixed number of sweeps.

    ``on_draw`` receives the retained records (post burn-in, thinned);
    ``on_checkpoint`` (if given) is called with the completed sweep count at
    every ``checkpoint_every`` boundary, letting the caller persist state.
    """
    if iterations <= 0:
        raise ValueError("iterations must be positive")
    if not 0 <= burnin < iterations:
        raise ValueError("burn-in must be shorter than the run")
    if thin < 1:
        raise ValueError("thinning interval must be at least 1")
    for t in range(start, iterations):
        sampler.sweep()
        if t >= burnin and (t - burnin) % thin == 0:
            on_draw(sampler.draw_record())
        if (checkpoint_every and on_checkpoint is not None
                and (t + 1) % checkpoint_every == 0 and (t + 1) < iterations):
            on_checkpoint(t + 1)
