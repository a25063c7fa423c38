"""Mixed-type dataset container, disk format, holdout masking and scoring.

A dataset on disk is a directory holding ``schema.json`` plus one CSV file per
component.  Real components store one column per coordinate, series one column
per time point, categoricals a single column of level labels.  A cell (one
observation of one component) is held out by leaving every field of its CSV
row empty; the loader records the mask and poisons the hidden values (NaN for
numeric kinds, -1 for categoricals) so nothing downstream can read them by
accident.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

VALID_KINDS = ("real", "categorical", "series")


class DatasetFormatError(ValueError):
    """A schema or CSV file violates the dataset format."""


@dataclass(frozen=True)
class ComponentSchema:
    """Declared kind and shape of one data component."""

    name: str
    kind: str
    dim: int = 0                       # real: number of coordinates
    length: int = 0                    # series: number of time points
    levels: tuple = field(default=())  # categorical: ordered level labels

    def __post_init__(self):
        if self.kind not in VALID_KINDS:
            raise DatasetFormatError(
                "component %r has unknown kind %r (expected one of %s)"
                % (self.name, self.kind, ", ".join(VALID_KINDS))
            )
        if self.kind == "real" and self.dim < 1:
            raise DatasetFormatError("real component %r needs dim >= 1" % self.name)
        if self.kind == "series" and self.length < 2:
            raise DatasetFormatError("series component %r needs length >= 2" % self.name)
        if self.kind == "categorical" and len(self.levels) < 2:
            raise DatasetFormatError(
                "categorical component %r needs at least two levels" % self.name
            )

    @property
    def width(self):
        if self.kind == "real":
            return self.dim
        if self.kind == "series":
            return self.length
        return 1

    def column_names(self):
        if self.kind == "real":
            return ["x%d" % (k + 1) for k in range(self.dim)]
        if self.kind == "series":
            return ["t%d" % (t + 1) for t in range(self.length)]
        return ["value"]

    def to_dict(self):
        d = {"name": self.name, "kind": self.kind}
        if self.kind == "real":
            d["dim"] = self.dim
        elif self.kind == "series":
            d["length"] = self.length
        else:
            d["levels"] = list(self.levels)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(
            name=d["name"],
            kind=d.get("kind", ""),
            dim=int(d.get("dim", 0)),
            length=int(d.get("length", 0)),
            levels=tuple(d.get("levels", ())),
        )


class MixedDataset:
    """In-memory mixed-type dataset.

    ``values[name]`` holds a (n, width) float array for numeric kinds and a
    (n,) int array of level codes for categoricals.  ``observed[name]`` is a
    boolean (n,) mask; hidden cells carry poisoned values (NaN / -1).
    """

    def __init__(self, components, values, observed=None, name="dataset"):
        self.components = list(components)
        names = [c.name for c in self.components]
        if len(set(names)) != len(names):
            raise DatasetFormatError("component names must be unique")
        self.values = {}
        self.observed = {}
        self.name = name
        n = None
        for comp in self.components:
            v = np.asarray(values[comp.name])
            if comp.kind == "categorical":
                v = v.astype(int).reshape(-1)
            else:
                v = v.astype(float).reshape(-1, comp.width)
            if n is None:
                n = v.shape[0]
            elif v.shape[0] != n:
                raise DatasetFormatError(
                    "component %r has %d rows, expected %d" % (comp.name, v.shape[0], n)
                )
            obs = (np.ones(n, dtype=bool) if observed is None
                   else np.asarray(observed[comp.name], dtype=bool).reshape(-1).copy())
            if obs.shape[0] != n:
                raise DatasetFormatError("mask of %r has wrong length" % comp.name)
            if comp.kind == "categorical":
                codes_ok = (v[obs] >= 0) & (v[obs] < len(comp.levels))
                if not np.all(codes_ok):
                    bad = int(np.flatnonzero(obs)[np.argmin(codes_ok)])
                    raise DatasetFormatError(
                        "component %r row %d holds an out-of-range level code"
                        % (comp.name, bad)
                    )
            else:
                finite = np.isfinite(v[obs])
                if not np.all(finite):
                    bad = int(np.flatnonzero(obs)[np.argmin(finite.all(axis=1))])
                    raise DatasetFormatError(
                        "component %r row %d holds a non-finite observed value"
                        % (comp.name, bad)
                    )
            self.values[comp.name] = v
            self.observed[comp.name] = obs
        self.n = 0 if n is None else int(n)

    @property
    def component_names(self):
        return [c.name for c in self.components]

    def schema(self, name):
        for c in self.components:
            if c.name == name:
                return c
        raise KeyError("no component named %r" % name)

    def copy(self):
        return MixedDataset(
            self.components,
            {k: v.copy() for k, v in self.values.items()},
            {k: v.copy() for k, v in self.observed.items()},
            name=self.name,
        )

    def take(self, rows):
        """Dataset restricted to the given row indices (order kept)."""
        rows = np.asarray(rows, dtype=int)
        return MixedDataset(
            self.components,
            {k: v[rows] for k, v in self.values.items()},
            {k: v[rows] for k, v in self.observed.items()},
            name=self.name,
        )


def _format_number(x):
    # repr round-trips float64 exactly and keeps files byte-stable across runs
    return repr(float(x))


def save_dataset(dataset, path):
    """Write a dataset directory: schema.json plus one CSV per component."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    schema = {
        "name": dataset.name,
        "n": dataset.n,
        "components": [c.to_dict() for c in dataset.components],
    }
    (path / "schema.json").write_text(json.dumps(schema, indent=2) + "\n")
    for comp in dataset.components:
        v = dataset.values[comp.name]
        obs = dataset.observed[comp.name]
        with open(path / (comp.name + ".csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(comp.column_names())
            for i in range(dataset.n):
                if not obs[i]:
                    writer.writerow([""] * comp.width)
                elif comp.kind == "categorical":
                    writer.writerow([comp.levels[int(v[i])]])
                else:
                    writer.writerow([_format_number(x) for x in v[i]])


def load_dataset(path):
    """Read a dataset directory written by :func:`save_dataset`.

    Parse failures name the offending file, row and column.
    """
    path = Path(path)
    schema_path = path / "schema.json"
    if not schema_path.exists():
        raise DatasetFormatError("no schema.json under %s" % path)
    try:
        schema = json.loads(schema_path.read_text())
    except json.JSONDecodeError as err:
        raise DatasetFormatError("schema.json is not valid JSON: %s" % err) from err
    components = [ComponentSchema.from_dict(d) for d in schema.get("components", [])]
    if not components:
        raise DatasetFormatError("schema.json declares no components")
    n = int(schema.get("n", -1))
    values, observed = {}, {}
    for comp in components:
        fname = path / (comp.name + ".csv")
        if not fname.exists():
            raise DatasetFormatError("missing data file %s" % fname)
        rows = []
        mask = []
        with open(fname, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise DatasetFormatError("%s: empty file" % fname)
            if len(header) != comp.width:
                raise DatasetFormatError(
                    "%s: header has %d columns, schema wants %d"
                    % (fname, len(header), comp.width)
                )
            for r, row in enumerate(reader, start=2):
                if len(row) != comp.width:
                    raise DatasetFormatError(
                        "%s: row %d has %d fields, expected %d"
                        % (fname, r, len(row), comp.width)
                    )
                blank = all(f.strip() == "" for f in row)
                mask.append(not blank)
                if blank:
                    rows.append([math.nan] * comp.width if comp.kind != "categorical" else [-1])
                    continue
                if comp.kind == "categorical":
                    label = row[0].strip()
                    if label not in comp.levels:
                        raise DatasetFormatError(
                            "%s: row %d column 1: unknown level %r" % (fname, r, label)
                        )
                    rows.append([comp.levels.index(label)])
                else:
                    parsed = []
                    for cidx, fld in enumerate(row, start=1):
                        try:
                            parsed.append(float(fld))
                        except ValueError as err:
                            raise DatasetFormatError(
                                "%s: row %d column %d: %r is not a number"
                                % (fname, r, cidx, fld)
                            ) from err
                    rows.append(parsed)
        arr = np.asarray(rows)
        if comp.kind == "categorical":
            arr = arr.reshape(-1).astype(int)
        values[comp.name] = arr
        observed[comp.name] = np.asarray(mask, dtype=bool)
    ds = MixedDataset(components, values, observed, name=schema.get("name", "dataset"))
    if n >= 0 and ds.n != n:
        raise DatasetFormatError("schema declares n=%d but files hold %d rows" % (n, ds.n))
    return ds


def apply_holdout(dataset, counts, rng):
    """Mask randomly chosen observed cells and return the hidden truth.

    Parameters
    ----------
    dataset : MixedDataset
    counts : mapping of component name -> number of cells to hide
    rng : numpy Generator

    Returns
    -------
    (masked, answers)
        ``masked`` is a new dataset with the chosen cells hidden and their
        stored values poisoned; ``answers`` maps component name to a dict of
        row index -> true value (level label for categoricals, list of floats
        otherwise).
    """
    masked = dataset.copy()
    answers = {}
    for name, k in counts.items():
        comp = masked.schema(name)
        obs_rows = np.flatnonzero(masked.observed[name])
        if k < 0 or k > obs_rows.size:
            raise ValueError(
                "cannot hold out %d cells of %r: only %d observed" % (k, name, obs_rows.size)
            )
        chosen = rng.choice(obs_rows, size=k, replace=False)
        chosen.sort()
        truth = {}
        for i in chosen:
            i = int(i)
            if comp.kind == "categorical":
                truth[i] = comp.levels[int(masked.values[name][i])]
                masked.values[name][i] = -1
            else:
                truth[i] = [float(x) for x in masked.values[name][i]]
                masked.values[name][i] = math.nan
            masked.observed[name][i] = False
        answers[name] = truth
    return masked, answers


def save_answers(answers, path):
    payload = {name: {str(i): v for i, v in d.items()} for name, d in answers.items()}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_answers(path):
    payload = json.loads(Path(path).read_text())
    return {name: {int(i): v for i, v in d.items()} for name, d in payload.items()}


def score_predictions(answers, predictions, kind):
    """Loss of point predictions against held-out truth.

    Categorical kind scores the percentage of misclassified cells (0..100).
    Numeric kinds score the relative squared error

        sum_i ||pred_i - true_i||^2 / sum_i ||true_i - mean(true)||^2,

    so predicting the mean of the held-out truths scores exactly 1.
    """
    if set(answers) != set(predictions):
        missing = set(answers).symmetric_difference(predictions)
        raise ValueError("answer/prediction rows do not match: %s" % sorted(missing))
    if not answers:
        raise ValueError("nothing to score")
    if kind == "categorical":
        wrong = sum(1 for i in answers if str(predictions[i]) != str(answers[i]))
        return 100.0 * wrong / len(answers)
    truth = np.asarray([answers[i] for i in sorted(answers)], dtype=float)
    pred = np.asarray([predictions[i] for i in sorted(answers)], dtype=float)
    if pred.shape != truth.shape:
        raise ValueError(
            "prediction shape %r does not match truth shape %r" % (pred.shape, truth.shape)
        )
    center = truth.mean(axis=0)
    denom = ((truth - center) ** 2).sum()
    num = ((pred - truth) ** 2).sum()
    if denom == 0.0:
        return 0.0 if num == 0.0 else float("inf")
    return float(num / denom)


def kernels_for_dataset(dataset):
    """Default kernel family per component, data-scaled where that helps."""
    from .kernels import Ar1Kernel, CategoricalKernel, GaussianDiagKernel

    out = []
    for comp in dataset.components:
        v = dataset.values[comp.name]
        obs = dataset.observed[comp.name]
        if comp.kind == "real":
            out.append(GaussianDiagKernel.from_data(v[obs]) if obs.any()
                       else GaussianDiagKernel(comp.dim))
        elif comp.kind == "series":
            out.append(Ar1Kernel.from_data(v[obs]) if obs.any()
                       else Ar1Kernel(comp.length))
        else:
            out.append(CategoricalKernel(len(comp.levels)))
    return out
