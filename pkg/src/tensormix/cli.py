"""Command line interface.

Subcommands
-----------
simulate   draw a synthetic benchmark dataset into a directory
fit        run a posterior sampler over a dataset, streaming draws to a file
predict    conditional predictions (or joint densities) from saved draws
depend     pairwise dependence tests from saved draws
benchmark  end-to-end paired holdout comparison of the two models

Every command is deterministic given its inputs and ``--seed``.  Reports are
written as delimited text; unless disabled, matplotlib figures are rendered
next to them.
"""

from __future__ import annotations

import csv
import io
import json
import os

import click
import numpy as np

from . import figures as figs
from .data import (apply_holdout, kernels_for_dataset, load_dataset,
                   save_answers, save_dataset, score_predictions)
from .drawstream import (canonical_json, config_digest, dataset_digest,
                         resume_fit, run_fit)
from .inference import (PosteriorDraws, cluster_count_trace, coclustering,
                        concentration_trace, conditional_predict,
                        dependence_report, point_predictions,
                        predictive_density)
from .kernels import family_from_dict
from .simulate import (TESTED_PAIRS, ScenarioConfig, generate, load_truth,
                       save_truth)
from .sticks import ConcentrationParams, GammaPrior


def _read_config(ctx, param, value):
    """--config JSON file: keys become defaults, explicit flags override."""
    if value is None:
        return None
    with open(value) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise click.BadParameter("config file must hold a JSON object")
    ctx.default_map = {**(ctx.default_map or {}), **cfg}
    return value


def _config_option():
    return click.option("--config", type=click.Path(exists=True, dir_okay=False),
                        callback=_read_config, is_eager=True,
                        expose_value=False,
                        help="JSON file with default values for the flags")


def _write_rows(path, fieldnames, rows):
    """Write dict rows as CSV to path, or echo to stdout when path is None."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fieldnames)
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    text = buf.getvalue()
    if path is None:
        click.echo(text, nl=False)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return path


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return "%.6g" % value
    return value


@click.group()
@click.version_option(package_name="tensormix", prog_name="tensormix")
def main():
    """Mixed-type mixture models with per-component cluster indices."""


# --------------------------------------------------------------- simulate

@main.command()
@_config_option()
@click.option("--scenario", type=click.IntRange(1, 2), required=True,
              help="1: one global clustering; 2: two independent blocks")
@click.option("--n", type=click.IntRange(min=2), default=1000,
              show_default=True, help="number of rows")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--clusters", type=int, default=0,
              help="cluster count of the main block (0: scenario default)")
@click.option("--coupling", type=float, default=0.82, show_default=True,
              help="scenario 2: P(R / C1 labels copy the T label)")
@click.option("--pair-match", type=float, default=0.0,
              help="strength of the C2/C3 tables (0: scenario default, "
                   "0.74 for scenario 1 and 0.92 for scenario 2)")
@click.option("--out", "out_dir", type=click.Path(file_okay=False),
              required=True, help="output dataset directory")
def simulate(scenario, n, seed, clusters, coupling, pair_match, out_dir):
    """Draw a synthetic dataset and write it with its generator record."""
    config = ScenarioConfig(scenario=scenario, n=n, clusters=clusters,
                            coupling=coupling, pair_match=pair_match)
    rng = np.random.default_rng(seed)
    dataset, labels, truth = generate(config, rng)
    save_dataset(dataset, out_dir)
    save_truth(os.path.join(out_dir, "generator.json"), config, labels, truth)
    click.echo("wrote scenario %d dataset (n=%d) to %s"
               % (scenario, n, out_dir))


# -------------------------------------------------------------------- fit

def _chain_path(base, chain, n_chains):
    if n_chains == 1:
        return base
    root, ext = os.path.splitext(base)
    return "%s.chain%d%s" % (root, chain, ext or ".ndjson")


@main.command()
@_config_option()
@click.option("--data", "data_dir", type=click.Path(exists=True,
              file_okay=False), required=True, help="dataset directory")
@click.option("--model", type=click.Choice(["itf", "dpm"]), default="itf",
              show_default=True)
@click.option("--iterations", type=click.IntRange(min=1), default=1000,
              show_default=True, help="total sweeps (must be positive)")
@click.option("--burnin", type=click.IntRange(min=0), default=0,
              show_default=True)
@click.option("--thin", type=click.IntRange(min=1), default=1,
              show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--chains", type=click.IntRange(min=1), default=1,
              show_default=True, help="independent chains (tagged by id)")
@click.option("--init", type=click.Choice(["single", "random"]),
              default="single", show_default=True)
@click.option("--init-clusters", type=click.IntRange(min=1), default=4,
              show_default=True)
@click.option("--alpha-shape", type=float, default=1.0, show_default=True,
              help="Gamma shape of the top concentration hyperprior")
@click.option("--alpha-rate", type=float, default=1.0, show_default=True)
@click.option("--beta-shape", type=float, default=1.0, show_default=True,
              help="Gamma shape of the lower concentration hyperprior")
@click.option("--beta-rate", type=float, default=1.0, show_default=True)
@click.option("--kernels", "kernels_path", type=click.Path(exists=True,
              dir_okay=False), default=None,
              help="JSON object: component name -> kernel configuration")
@click.option("--out", "out_path", type=click.Path(dir_okay=False),
              required=True, help="draw stream file (NDJSON)")
@click.option("--checkpoint-every", type=click.IntRange(min=1), default=None,
              help="write a resumable checkpoint every this many sweeps")
@click.option("--resume", "resume_path", type=click.Path(exists=True,
              dir_okay=False), default=None,
              help="checkpoint file to resume from (other flags ignored)")
def fit(data_dir, model, iterations, burnin, thin, seed, chains, init,
        init_clusters, alpha_shape, alpha_rate, beta_shape, beta_rate,
        kernels_path, out_path, checkpoint_every, resume_path):
    """Fit a model and stream posterior draws to a file."""
    dataset = load_dataset(data_dir)
    if resume_path is not None:
        header = resume_fit(dataset, resume_path)
        click.echo("resumed %s to completion: %s"
                   % (resume_path, header["model"]))
        return
    families = kernels_for_dataset(dataset)
    if kernels_path is not None:
        with open(kernels_path) as fh:
            spec = json.load(fh)
        names = dataset.component_names
        for name, kd in spec.items():
            if name not in names:
                raise click.BadParameter("unknown component %r" % name)
            families[names.index(name)] = family_from_dict(kd)
    alpha_prior = GammaPrior(alpha_shape, alpha_rate)
    beta_prior = GammaPrior(beta_shape, beta_rate)
    files = []
    for chain in range(chains):
        rng = np.random.default_rng((seed, chain, 7))
        params = ConcentrationParams(
            alpha=alpha_prior.draw(rng),
            beta=[beta_prior.draw(rng) for _ in dataset.components],
            alpha_prior=alpha_prior, beta_prior=beta_prior)
        path = _chain_path(out_path, chain, chains)
        run_fit(dataset, model=model, out_path=path, iterations=iterations,
                burnin=burnin, thin=thin, seed=seed, chain=chain,
                families=families, params=params, init=init,
                init_clusters=init_clusters,
                checkpoint_every=checkpoint_every)
        files.append(path)
    core = {
        "command": "fit", "model": model, "iterations": iterations,
        "burnin": burnin, "thin": thin, "seed": seed, "chains": chains,
        "init": init, "init_clusters": init_clusters,
        "alpha_prior": {"shape": alpha_shape, "rate": alpha_rate},
        "beta_prior": {"shape": beta_shape, "rate": beta_rate},
        "kernels": [f.to_dict() for f in families],
        "data_hash": dataset_digest(dataset),
    }
    manifest = dict(core)
    manifest["config_hash"] = config_digest(core)
    manifest["files"] = [os.path.basename(p) for p in files]
    with open(out_path + ".manifest.json", "w") as fh:
        fh.write(canonical_json(manifest))
    click.echo("wrote %d draw stream%s (%s); manifest %s"
               % (len(files), "s" if len(files) > 1 else "",
                  ", ".join(files), out_path + ".manifest.json"))


# ---------------------------------------------------------------- predict

@main.command()
@_config_option()
@click.option("--draws", "draw_paths", type=click.Path(exists=True,
              dir_okay=False), multiple=True, required=True,
              help="draw stream file(s); repeat for several chains")
@click.option("--data", "data_dir", type=click.Path(exists=True,
              file_okay=False), required=True)
@click.option("--target", default=None,
              help="component to predict (omit with --density)")
@click.option("--rows", "rows_mode", type=click.Choice(["hidden", "all"]),
              default="hidden", show_default=True,
              help="predict rows where the target is masked, or all rows")
@click.option("--density", is_flag=True,
              help="report the joint predictive density of every row instead")
@click.option("--epsilon", type=float, default=1e-4, show_default=True,
              help="leftover stick mass bound for the truncation")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--max-draws", type=int, default=None,
              help="subsample the retained draws to at most this many")
@click.option("--out", "out_path", type=click.Path(dir_okay=False),
              default=None, help="output CSV (default: stdout)")
@click.option("--figures/--no-figures", default=True, show_default=True)
def predict(draw_paths, data_dir, target, rows_mode, density, epsilon, seed,
            max_draws, out_path, figures):
    """Predict a held-out component (or joint densities) from saved draws."""
    draws = PosteriorDraws.from_streams(draw_paths)
    dataset = load_dataset(data_dir)
    rng = np.random.default_rng(seed)
    if density:
        dens = predictive_density(draws, dataset, epsilon=epsilon, rng=rng,
                                  max_draws=max_draws)
        rows = [{"row": i, "density": _fmt(float(d))}
                for i, d in enumerate(dens)]
        _write_rows(out_path, ["row", "density"], rows)
        return
    if target is None:
        raise click.UsageError("--target is required unless --density is set")
    names = dataset.component_names
    if target not in names:
        raise click.UsageError("unknown component %r" % target)
    t = names.index(target)
    schema = dataset.components[t]
    if rows_mode == "hidden":
        rows = np.flatnonzero(~dataset.observed[target]).tolist()
        if not rows:
            raise click.UsageError("no hidden cells for %r; use --rows all"
                                   % target)
    else:
        rows = list(range(dataset.n))
    rows, matrix = conditional_predict(draws, dataset, target, rows=rows,
                                       epsilon=epsilon, rng=rng,
                                       max_draws=max_draws)
    if schema.kind == "categorical":
        fields = ["row"] + ["prob_%s" % lev for lev in schema.levels] + ["point"]
        out_rows = []
        for i, row in enumerate(rows):
            rec = {"row": row, "point": schema.levels[int(np.argmax(matrix[i]))]}
            for lev, p in zip(schema.levels, matrix[i]):
                rec["prob_%s" % lev] = _fmt(float(p))
            out_rows.append(rec)
    else:
        width = matrix.shape[1]
        cols = ["mean_%d" % k for k in range(width)]
        fields = ["row"] + cols
        out_rows = [dict({"row": row},
                         **{c: _fmt(float(v)) for c, v in zip(cols, matrix[i])})
                    for i, row in enumerate(rows)]
    _write_rows(out_path, fields, out_rows)
    if figures and out_path is not None:
        fig_path = os.path.splitext(out_path)[0] + ".png"
        figs.prediction_figure(rows, matrix, schema.kind, fig_path,
                               levels=schema.levels)
        click.echo("figure: %s" % fig_path)


# ----------------------------------------------------------------- depend

def _parse_pairs(text, names):
    pairs = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        parts = item.split(":")
        if len(parts) != 2:
            raise click.BadParameter("pair %r is not NAME:NAME" % item)
        a, b = parts[0].strip(), parts[1].strip()
        for name in (a, b):
            if name not in names:
                raise click.BadParameter("unknown component %r" % name)
        pairs.append((a, b))
    if not pairs:
        raise click.BadParameter("no pairs given")
    return pairs


DEPEND_FIELDS = ["component1", "component2", "statistic", "null95", "pvalue",
                 "dependent", "structural"]


def _depend_rows(report):
    rows = []
    for r in report:
        rows.append({
            "component1": r["component1"], "component2": r["component2"],
            "statistic": _fmt(r["statistic"]), "null95": _fmt(r["null95"]),
            "pvalue": _fmt(r["pvalue"]),
            "dependent": "yes" if r["dependent"] else "no",
            "structural": "yes" if r["structural"] else "no",
        })
    return rows


@main.command()
@_config_option()
@click.option("--draws", "draw_paths", type=click.Path(exists=True,
              dir_okay=False), multiple=True, required=True)
@click.option("--pairs", "pairs_text", default=None,
              help="comma list like C1:T,C2:R (default: all pairs)")
@click.option("--permutations", type=click.IntRange(min=19), default=200,
              show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--max-draws", type=int, default=None)
@click.option("--out", "out_path", type=click.Path(dir_okay=False),
              default=None, help="output CSV (default: stdout)")
@click.option("--figures/--no-figures", default=True, show_default=True)
def depend(draw_paths, pairs_text, permutations, seed, max_draws, out_path,
           figures):
    """Test pairwise dependence between components from saved draws."""
    draws = PosteriorDraws.from_streams(draw_paths)
    names = draws.component_names
    pairs = (_parse_pairs(pairs_text, names) if pairs_text is not None
             else None)
    rng = np.random.default_rng(seed)
    report = dependence_report(draws, pairs=pairs, permutations=permutations,
                               rng=rng, max_draws=max_draws)
    _write_rows(out_path, DEPEND_FIELDS, _depend_rows(report))
    if figures and out_path is not None:
        fig_path = os.path.splitext(out_path)[0] + ".png"
        figs.dependence_figure(report, fig_path)
        click.echo("figure: %s" % fig_path)


# -------------------------------------------------------------- benchmark

def _parse_holdout(text, dataset):
    counts = {}
    names = dataset.component_names
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        name, _, num = item.partition("=")
        name = name.strip()
        if name not in names:
            raise click.BadParameter("unknown component %r" % name)
        counts[name] = int(num)
    if not counts:
        raise click.BadParameter("empty holdout specification")
    return counts


def _chance_level(schema):
    if schema.kind != "categorical":
        return None
    return 100.0 * (len(schema.levels) - 1) / len(schema.levels)


@main.command()
@_config_option()
@click.option("--data", "data_dir", type=click.Path(exists=True,
              file_okay=False), required=True,
              help="fully observed dataset directory (e.g. from simulate)")
@click.option("--outdir", type=click.Path(file_okay=False), required=True)
@click.option("--holdout", default="T=50,C2=100,C3=100", show_default=True,
              help="comma list NAME=COUNT of cells to mask per component")
@click.option("--iterations", type=click.IntRange(min=1), default=10000,
              show_default=True)
@click.option("--burnin", type=click.IntRange(min=0), default=1000,
              show_default=True)
@click.option("--thin", type=click.IntRange(min=1), default=10,
              show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--epsilon", type=float, default=1e-4, show_default=True)
@click.option("--permutations", type=click.IntRange(min=19), default=200,
              show_default=True)
@click.option("--max-draws", type=int, default=None)
@click.option("--init", type=click.Choice(["single", "random"]),
              default="single", show_default=True)
@click.option("--init-clusters", type=click.IntRange(min=1), default=1,
              show_default=True)
@click.option("--figures/--no-figures", default=True, show_default=True)
def benchmark(data_dir, outdir, holdout, iterations, burnin, thin, seed,
              epsilon, permutations, max_draws, init, init_clusters, figures):
    """Paired holdout comparison of both models plus dependence reports."""
    dataset = load_dataset(data_dir)
    counts = _parse_holdout(holdout, dataset)
    os.makedirs(outdir, exist_ok=True)
    rng = np.random.default_rng(seed)
    masked, answers = apply_holdout(dataset, counts, rng)
    masked_dir = os.path.join(outdir, "masked")
    save_dataset(masked, masked_dir)
    save_answers(answers, os.path.join(outdir, "answers.json"))

    truth_path = os.path.join(data_dir, "generator.json")
    truth = load_truth(truth_path) if os.path.exists(truth_path) else None
    truth_map = {}
    if truth:
        for row in truth["dependence_truth"]:
            truth_map[(row["component1"], row["component2"])] = row["dependent"]

    names = dataset.component_names
    pairs = [p for p in TESTED_PAIRS if p[0] in names and p[1] in names]
    bench_rows, reports, summary = [], {}, {"models": {}}
    for model in ("itf", "dpm"):
        stream = os.path.join(outdir, "fit-%s.ndjson" % model)
        run_fit(masked, model=model, out_path=stream, iterations=iterations,
                burnin=burnin, thin=thin, seed=seed, init=init,
                init_clusters=init_clusters)
        draws = PosteriorDraws.from_stream(stream)
        losses = {}
        for comp in sorted(counts):
            schema = dataset.schema(comp)
            preds = point_predictions(
                draws, masked, comp, rows=sorted(answers[comp]),
                epsilon=epsilon, rng=np.random.default_rng((seed, 1)),
                max_draws=max_draws)
            loss = score_predictions(answers[comp], preds, schema.kind)
            chance = _chance_level(schema)
            losses[comp] = {"loss": loss, "chance": chance,
                            "held_cells": len(answers[comp])}
            bench_rows.append({
                "component": comp, "model": model, "loss": loss,
                "chance": chance, "held_cells": len(answers[comp]),
            })
        report = dependence_report(
            draws, pairs=pairs, permutations=permutations,
            rng=np.random.default_rng((seed, 2)), max_draws=max_draws)
        for r in report:
            key = (r["component1"], r["component2"])
            r["truth"] = truth_map.get(key)
        reports[model] = report
        summary["models"][model] = {
            "losses": losses,
            "dependence": [dict(r) for r in report],
        }
        if figures:
            alpha, beta = concentration_trace(draws)
            kcounts = cluster_count_trace(draws)
            figs.trace_figure(np.arange(alpha.size), alpha, kcounts,
                              os.path.join(outdir, "traces-%s.png" % model),
                              beta=beta)
            cc = coclustering(draws, max_draws=60)
            order = None
            if truth and "T" in truth["labels"]:
                order = np.argsort(np.asarray(truth["labels"]["T"]),
                                   kind="stable")
            figs.coclustering_figure(
                cc, os.path.join(outdir, "coclustering-%s.png" % model),
                order=order)

    fields = ["component", "model", "loss", "chance", "held_cells"]
    _write_rows(os.path.join(outdir, "benchmark.csv"), fields,
                [dict(r, loss=_fmt(r["loss"]), chance=_fmt(r["chance"]))
                 for r in bench_rows])
    for model, report in reports.items():
        rows = _depend_rows(report)
        for row, r in zip(rows, report):
            row["truth"] = ("" if r.get("truth") is None
                            else ("yes" if r["truth"] else "no"))
        _write_rows(os.path.join(outdir, "dependence-%s.csv" % model),
                    DEPEND_FIELDS + ["truth"], rows)
    with open(os.path.join(outdir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=1, default=float)
    core = {"command": "benchmark", "holdout": counts,
            "iterations": iterations, "burnin": burnin, "thin": thin,
            "seed": seed, "epsilon": epsilon, "permutations": permutations,
            "init": init, "init_clusters": init_clusters,
            "data_hash": dataset_digest(dataset)}
    core["config_hash"] = config_digest(core)
    with open(os.path.join(outdir, "manifest.json"), "w") as fh:
        fh.write(canonical_json(core))
    if figures:
        figs.benchmark_figure(bench_rows, os.path.join(outdir, "benchmark.png"))
        for model, report in reports.items():
            figs.dependence_figure(
                report, os.path.join(outdir, "dependence-%s.png" % model))
    click.echo("benchmark written to %s" % outdir)


if __name__ == "__main__":
    main()
