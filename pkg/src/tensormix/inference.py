"""Posterior summaries computed from a stream of retained draws.

Every quantity below is a Monte Carlo average over sweeps.  Each sweep's
stored state is a finite stick prefix; before evaluation the sticks are
extended with fresh prior draws (using that sweep's own concentrations)
until the unrepresented mass at every level falls below a tolerance, and
the remainder is dropped.  Fresh levels get prior atoms, so the extension
is a draw from the model's conditional law, not an approximation choice
beyond the dropped tail.
"""

from __future__ import annotations

import numpy as np

from ._numeric import clip_open_unit
from .kernels import family_from_dict
from .sticks import GammaPrior

DEFAULT_EPSILON = 1e-4


class DrawFormatError(ValueError):
    """A draw record is inconsistent with its stream header."""


class SweepDraw:
    """One retained sweep, parsed into arrays."""

    __slots__ = ("alpha", "beta", "lam", "psi", "atoms", "c0", "c")

    def __init__(self, record, families):
        self.alpha = float(record["alpha"])
        self.beta = np.asarray(record["beta"], dtype=float)
        self.lam = np.asarray(record["lambda"], dtype=float)
        psi = record.get("psi") or []
        self.psi = [np.asarray(rows, dtype=float) for rows in psi]
        self.atoms = [
            [families[j].atom_from_dict(d) for d in record["atoms"][j]]
            for j in range(len(families))
        ]
        self.c0 = np.asarray(record["c0"], dtype=np.int32)
        self.c = np.asarray(record["c"], dtype=np.int32)


class PosteriorDraws:
    """A fitted chain: header metadata plus parsed sweeps."""

    def __init__(self, header, records):
        self.header = header
        self.model = header["model"]
        self.component_names = [c["name"] for c in header["components"]]
        self.schemas = {c["name"]: c for c in header["components"]}
        self.families = [family_from_dict(d) for d in header["kernels"]]
        self.alpha_prior = GammaPrior(**header["alpha_prior"])
        self.beta_prior = GammaPrior(**header["beta_prior"])
        self.draws = [SweepDraw(r, self.families) for r in records]
        if not self.draws:
            raise DrawFormatError("the stream holds no retained draws")

    @classmethod
    def from_stream(cls, path):
        from .drawstream import load_stream

        header, records = load_stream(path)
        return cls(header, records)

    @classmethod
    def from_streams(cls, paths):
        """Pool several chains fitted with identical configs."""
        from .drawstream import load_stream

        headers = []
        pooled = []
        for path in paths:
            header, records = load_stream(path)
            headers.append(header)
            pooled.extend(records)
        base = dict(headers[0])
        for h in headers[1:]:
            if h["config_hash"] != base["config_hash"] and (
                {k: h[k] for k in ("model", "components", "kernels")}
                != {k: base[k] for k in ("model", "components", "kernels")}
            ):
                raise DrawFormatError("streams come from incompatible fits")
        return cls(base, pooled)

    def component_index(self, name):
        try:
            return self.component_names.index(name)
        except ValueError:
            raise KeyError("no component named %r" % (name,)) from None

    def subsample(self, max_draws):
        """Deterministic stride subsample, preserving order."""
        if max_draws is None or len(self.draws) <= max_draws:
            return self.draws
        idx = np.linspace(0, len(self.draws) - 1, max_draws).round().astype(int)
        return [self.draws[i] for i in np.unique(idx)]


# --------------------------------------------------------------- extension

def _fractions_from_weights(weights):
    """Invert the stick-breaking map (weights are a strict prefix)."""
    w = np.asarray(weights, dtype=float)
    before = np.concatenate([[0.0], np.cumsum(w)[:-1]])
    return clip_open_unit(w / np.maximum(1.0 - before, 1e-300))


def _weights_from_fractions(f):
    log_keep = np.log1p(-f)
    prefix = np.cumsum(log_keep, axis=-1) - log_keep
    return f * np.exp(prefix)


def _extend_weights(weights, concentration, eps, rng):
    """Append prior sticks until the leftover mass drops below eps."""
    w = list(np.asarray(weights, dtype=float))
    leftover = max(1.0 - sum(w), 0.0)
    while leftover > eps:
        f = float(clip_open_unit(rng.beta(1.0, concentration)))
        w.append(leftover * f)
        leftover *= 1.0 - f
    return np.asarray(w)


class _ExtendedDraw:
    """A sweep's state after tail extension, ready for dense evaluation."""

    __slots__ = ("w", "psi", "atoms", "alpha", "beta")

    def __init__(self, draw, families, eps, rng):
        self.alpha = draw.alpha
        self.beta = draw.beta
        self.w = _extend_weights(draw.lam, draw.alpha, eps, rng)
        top = self.w.size
        self.psi = []
        self.atoms = []
        if not draw.psi:  # single-index model: atoms sit on the top levels
            for j, fam in enumerate(families):
                atoms = list(draw.atoms[j])
                atoms.extend(fam.prior_draw(rng) for _ in range(top - len(atoms)))
                self.atoms.append(atoms)
            return
        for j, fam in enumerate(families):
            beta_j = draw.beta[j]
            frac = _fractions_from_weights_rows(draw.psi[j])
            if top > frac.shape[0]:
                fresh = clip_open_unit(
                    rng.beta(1.0, beta_j, size=(top - frac.shape[0], frac.shape[1]))
                )
                frac = np.vstack([frac, fresh])
            atoms = list(draw.atoms[j])
            atoms.extend(
                fam.prior_draw(rng) for _ in range(frac.shape[1] - len(atoms))
            )
            rest = np.exp(np.log1p(-frac).sum(axis=1))
            while rest.max() > eps:
                col = clip_open_unit(rng.beta(1.0, beta_j, size=top))
                frac = np.hstack([frac, col[:, None]])
                rest = rest * (1.0 - col)
                atoms.append(fam.prior_draw(rng))
            self.psi.append(_weights_from_fractions(frac))
            self.atoms.append(atoms)

    @property
    def single_index(self):
        return not self.psi


def _fractions_from_weights_rows(rows):
    w = np.asarray(rows, dtype=float)
    before = np.concatenate(
        [np.zeros((w.shape[0], 1)), np.cumsum(w, axis=1)[:, :-1]], axis=1
    )
    return clip_open_unit(w / np.maximum(1.0 - before, 1e-300))


# ----------------------------------------------------------- density pieces

def _density_matrix(family, values, observed, atoms):
    """exp(log density) per observation x atom; hidden rows become ones,
    which marginalizes the component out of any product over components."""
    ll = family.log_density_matrix(atoms, values)
    ll[~observed, :] = 0.0
    return np.exp(ll)


def _component_level_masses(ext, j, family, values, observed):
    """(top levels, n) matrix of per-level masses for one component."""
    dens = _density_matrix(family, values, observed, ext.atoms[j])
    if ext.single_index:
        return dens.T[: ext.w.size]
    return ext.psi[j] @ dens.T


def _gate_matrix(ext, dataset, names, families, skip=None):
    """(top levels, n) unnormalized gates: top weight times the product of
    per-component masses over every component except ``skip``."""
    n = dataset.n
    gates = np.repeat(ext.w[:, None], n, axis=1)
    for j, name in enumerate(names):
        if name == skip:
            continue
        gates *= _component_level_masses(
            ext, j, families[j], dataset.values[name], dataset.observed[name]
        )
    return gates


# ------------------------------------------------------------- public API

def predictive_density(draws, dataset, epsilon=DEFAULT_EPSILON, rng=None,
                       max_draws=None):
    """Posterior predictive density of each dataset row.

    Hidden cells are marginalized out, so rows with partial observations get
    the density of what is actually observed.  Returns an (n,) array.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    names = draws.component_names
    total = np.zeros(dataset.n)
    used = draws.subsample(max_draws)
    for draw in used:
        ext = _ExtendedDraw(draw, draws.families, epsilon, rng)
        gates = _gate_matrix(ext, dataset, names, draws.families)
        total += gates.sum(axis=0)
    return total / len(used)


def conditional_predict(draws, dataset, target, rows=None,
                        epsilon=DEFAULT_EPSILON, rng=None, max_draws=None):
    """Predict one component from each row's other observed components.

    Returns (rows, matrix): level probabilities for a categorical target,
    posterior mean vectors for a numeric one.  The target component itself
    never conditions the prediction, whether observed or not.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    names = draws.component_names
    t = draws.component_index(target)
    family = draws.families[t]
    if rows is None:
        rows = np.arange(dataset.n)
    rows = np.asarray(rows, dtype=int)
    sub = dataset.take(rows)
    out = None
    used = draws.subsample(max_draws)
    for draw in used:
        ext = _ExtendedDraw(draw, draws.families, epsilon, rng)
        gates = _gate_matrix(ext, sub, names, draws.families, skip=target)
        if ext.single_index:
            coefs = gates
        else:
            coefs = ext.psi[t].T @ gates          # (atoms, rows)
        coefs /= np.maximum(coefs.sum(axis=0, keepdims=True), 1e-300)
        means = np.stack([family.atom_mean(a) for a in ext.atoms[t]])
        piece = coefs.T @ means[: coefs.shape[0]]
        out = piece if out is None else out + piece
    return rows, out / len(used)


def point_predictions(draws, dataset, target, rows, **kw):
    """Map row -> prediction in the form the scoring helpers expect.

    Categorical targets yield the level label of the highest mean predictive
    probability; numeric targets yield the posterior mean vector.
    """
    rows, mat = conditional_predict(draws, dataset, target, rows=rows, **kw)
    schema = draws.schemas[target]
    result = {}
    for i, row in enumerate(rows):
        if schema["kind"] == "categorical":
            result[int(row)] = schema["levels"][int(np.argmax(mat[i]))]
        else:
            result[int(row)] = mat[i]
    return result


# ------------------------------------------------------------- dependence

def _normalized_tables(draw, j1, j2):
    lam = draw.lam / draw.lam.sum()
    p1 = draw.psi[j1] / draw.psi[j1].sum(axis=1, keepdims=True)
    p2 = draw.psi[j2] / draw.psi[j2].sum(axis=1, keepdims=True)
    return lam, p1, p2


def _table_divergence(joint):
    """KL divergence of a joint table from the product of its margins."""
    joint = joint / joint.sum()
    r = joint.sum(axis=1)
    c = joint.sum(axis=0)
    outer = np.outer(r, c)
    mask = joint > 0
    return float((joint[mask] * (np.log(joint[mask]) - np.log(outer[mask]))).sum())


def dependence_statistic(draws, name1, name2, max_draws=None):
    """Per-draw divergence between two components' cluster labels.

    For the factorized model each draw yields the exact joint law of the
    pair's cluster indices (sum over top levels of the top weight times the
    two stick rows); the statistic is its divergence from independence, so
    it is zero exactly when the tensor has rank one.  The single-index
    baseline ties every component to one label, making the joint diagonal;
    its statistic is the entropy of the shared weights, which is positive
    whenever more than one cluster is occupied: the baseline structurally
    cannot represent independence.
    """
    j1 = draws.component_index(name1)
    j2 = draws.component_index(name2)
    vals = []
    for draw in draws.subsample(max_draws):
        if not draw.psi:
            lam = draw.lam / draw.lam.sum()
            vals.append(float(-(lam * np.log(lam)).sum()))
            continue
        lam, p1, p2 = _normalized_tables(draw, j1, j2)
        joint = p1.T @ (lam[:, None] * p2)
        vals.append(_table_divergence(joint))
    return np.asarray(vals)


def dependence_test(draws, name1, name2, permutations=200, rng=None,
                    max_draws=None):
    """Permutation decision for one pair of components.

    The null replicates shuffle which top-level cluster each stick row of
    the second component belongs to, which preserves both margins while
    breaking the coupling.  For the single-index baseline the shuffle is a
    no-op, so the baseline's report is structural rather than tested.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    j1 = draws.component_index(name1)
    j2 = draws.component_index(name2)
    used = draws.subsample(max_draws)
    if draws.model == "dpm" or not used[0].psi:
        stat = float(np.mean(dependence_statistic(draws, name1, name2,
                                                  max_draws=max_draws)))
        return {
            "component1": name1, "component2": name2,
            "statistic": stat, "null95": None, "pvalue": None,
            "dependent": True, "structural": True,
        }
    tables = []
    obs = 0.0
    for draw in used:
        lam, p1, p2 = _normalized_tables(draw, j1, j2)
        tables.append((lam, p1, p2))
        obs += _table_divergence(p1.T @ (lam[:, None] * p2))
    obs /= len(tables)
    null = np.empty(permutations)
    for b in range(permutations):
        acc = 0.0
        for lam, p1, p2 in tables:
            perm = rng.permutation(lam.size)
            acc += _table_divergence(p1.T @ (lam[:, None] * p2[perm]))
        null[b] = acc / len(tables)
    cutoff = float(np.quantile(null, 0.95))
    pvalue = float((1.0 + (null >= obs).sum()) / (permutations + 1.0))
    return {
        "component1": name1, "component2": name2,
        "statistic": float(obs), "null95": cutoff, "pvalue": pvalue,
        "dependent": bool(obs > cutoff), "structural": False,
    }


def dependence_report(draws, pairs=None, permutations=200, rng=None,
                      max_draws=None):
    """Run the pair decision over ``pairs`` (default: all pairs)."""
    names = draws.component_names
    if pairs is None:
        pairs = [(a, b) for i, a in enumerate(names) for b in names[i + 1:]]
    if rng is None:
        rng = np.random.default_rng(0)
    return [
        dependence_test(draws, a, b, permutations=permutations, rng=rng,
                        max_draws=max_draws)
        for a, b in pairs
    ]


# ------------------------------------------------------------- diagnostics

def cluster_count_trace(draws, component=None):
    """Occupied cluster count per retained sweep (top level by default)."""
    if component is None:
        return np.array([np.unique(d.c0).size for d in draws.draws])
    j = draws.component_index(component)
    return np.array([np.unique(d.c[:, j]).size for d in draws.draws])


def concentration_trace(draws):
    alpha = np.array([d.alpha for d in draws.draws])
    if draws.model == "dpm":
        return alpha, None
    beta = np.stack([d.beta for d in draws.draws])
    return alpha, beta


def coclustering(draws, component=None, max_draws=None):
    """(n, n) posterior frequency of two rows sharing a cluster."""
    used = draws.subsample(max_draws)
    acc = None
    for d in used:
        labels = d.c0 if component is None else d.c[:, draws.component_index(component)]
        same = labels[:, None] == labels[None, :]
        acc = same.astype(float) if acc is None else acc + same
    return acc / len(used)
