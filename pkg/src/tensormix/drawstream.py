"""Posterior draw streams on disk, checkpoints, and fit orchestration.

A fitted chain is persisted as newline-delimited JSON: one header object
(model, seed, run lengths, component schemas, kernel hyperparameters,
concentration priors, and a config digest) followed by one object per
retained sweep.  Floats go through Python's repr round-trip, so rerunning
with the same seed reproduces the file byte for byte; checkpoints store the
sampler state, the generator state, and the stream's byte offset so a
resumed run finishes the identical file.
"""

from __future__ import annotations

import hashlib
import json
import os
import pickle

import numpy as np

from .data import kernels_for_dataset
from .dpm import DpmSampler
from .kernels import family_from_dict
from .sampler import TensorMixtureSampler, run_chain
from .sticks import ConcentrationParams, GammaPrior

STREAM_VERSION = 1


class StreamFormatError(ValueError):
    """A draw stream or checkpoint file is malformed or mismatched."""


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_digest(config):
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def dataset_digest(dataset):
    """Digest of the data actually fed to the sampler (order-sensitive)."""
    h = hashlib.sha256()
    for name in dataset.component_names:
        schema = dataset.schema(name)
        h.update(canonical_json(schema.to_dict()).encode("utf-8"))
        h.update(np.ascontiguousarray(dataset.values[name]).tobytes())
        h.update(np.ascontiguousarray(dataset.observed[name]).tobytes())
    return h.hexdigest()


def _prior_dict(prior):
    return {"shape": prior.shape, "rate": prior.rate}


def _prior_from_dict(d):
    return GammaPrior(shape=float(d["shape"]), rate=float(d["rate"]))


def build_header(model, dataset, families, params, seed, chain,
                 iterations, burnin, thin, init, init_clusters):
    config = {
        "version": STREAM_VERSION,
        "model": str(model),
        "seed": int(seed),
        "chain": int(chain),
        "n": int(dataset.n),
        "iterations": int(iterations),
        "burnin": int(burnin),
        "thin": int(thin),
        "init": str(init),
        "init_clusters": int(init_clusters),
        "components": [dataset.schema(name).to_dict()
                       for name in dataset.component_names],
        "kernels": [f.to_dict() for f in families],
        "alpha_prior": _prior_dict(params.alpha_prior),
        "beta_prior": _prior_dict(params.beta_prior),
        "data_hash": dataset_digest(dataset),
    }
    return {"kind": "header", **config, "config_hash": config_digest(config)}


class DrawStreamWriter:
    """Incremental NDJSON writer with byte-exact resume support."""

    def __init__(self, path, resume_offset=None):
        self.path = str(path)
        if resume_offset is None:
            self._fh = open(self.path, "wb")
        else:
            if os.path.getsize(self.path) < resume_offset:
                raise StreamFormatError(
                    "%s is shorter than its checkpoint offset %d; the stream "
                    "lost data and cannot be resumed" % (self.path, resume_offset)
                )
            self._fh = open(self.path, "r+b")
            self._fh.truncate(resume_offset)
            self._fh.seek(resume_offset)

    def write(self, record):
        line = json.dumps(record, separators=(",", ":")) + "\n"
        self._fh.write(line.encode("utf-8"))

    def offset(self):
        self._fh.flush()
        return self._fh.tell()

    def close(self):
        self._fh.flush()
        self._fh.close()


def read_stream(path):
    """Yield the parsed objects of a draw stream, header first."""
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                yield json.loads(raw)
            except json.JSONDecodeError as exc:
                raise StreamFormatError(
                    "%s line %d: not valid JSON (%s)" % (path, lineno, exc)
                ) from None


def load_stream(path):
    """Read a stream fully; returns (header, list of draw records)."""
    header = None
    draws = []
    for obj in read_stream(path):
        kind = obj.get("kind")
        if kind == "header":
            if header is not None:
                raise StreamFormatError("%s holds more than one header" % path)
            header = obj
        elif kind == "draw":
            draws.append(obj)
        else:
            raise StreamFormatError("%s holds an object of unknown kind %r" % (path, kind))
    if header is None:
        raise StreamFormatError("%s has no header line" % path)
    return header, draws


def make_sampler(dataset, model, families, params, rng, init="single",
                 init_clusters=4, chain=0):
    if model == "itf":
        return TensorMixtureSampler(dataset, families=families, params=params,
                                    rng=rng, init=init,
                                    init_clusters=init_clusters, chain=chain)
    if model == "dpm":
        return DpmSampler(dataset, families=families, params=params, rng=rng,
                          init=init, init_clusters=init_clusters, chain=chain)
    raise ValueError("model must be 'itf' or 'dpm', got %r" % (model,))


def chain_rng(seed, chain):
    """Generator for one chain; chains of one run never share streams."""
    if chain == 0:
        return np.random.default_rng(int(seed))
    return np.random.default_rng((int(seed), int(chain)))


def default_params(dataset, rng):
    prior = GammaPrior(1.0, 1.0)
    return ConcentrationParams(
        alpha=prior.draw(rng),
        beta=np.array([prior.draw(rng) for _ in dataset.component_names]),
        alpha_prior=prior,
        beta_prior=prior,
    )


def save_checkpoint(path, payload):
    tmp = str(path) + ".tmp"
    with open(tmp, "wb") as fh:
        pickle.dump(payload, fh, protocol=pickle.HIGHEST_PROTOCOL)
    os.replace(tmp, path)


def load_checkpoint(path):
    with open(path, "rb") as fh:
        return pickle.load(fh)


def run_fit(dataset, model="itf", out_path=None, iterations=1000, burnin=0,
            thin=1, seed=0, chain=0, families=None, params=None,
            init="single", init_clusters=4,
            checkpoint_path=None, checkpoint_every=None):
    """Fit one chain and stream its retained draws to ``out_path``.

    Returns the header dict.  When checkpointing is enabled, the state
    needed to finish the identical file lands next to the stream.
    """
    if out_path is None:
        raise ValueError("out_path is required")
    rng = chain_rng(seed, chain)
    if families is None:
        families = kernels_for_dataset(dataset)
    if params is None:
        params = default_params(dataset, rng)
    sampler = make_sampler(dataset, model, families, params, rng,
                           init=init, init_clusters=init_clusters, chain=chain)
    header = build_header(model, dataset, families, params, seed, chain,
                          iterations, burnin, thin, init, init_clusters)
    writer = DrawStreamWriter(out_path)
    writer.write(header)
    if checkpoint_every:
        ckpt_path = checkpoint_path or str(out_path) + ".ckpt"

        def on_checkpoint(done):
            save_checkpoint(ckpt_path, {
                "kind": "checkpoint",
                "header": header,
                "completed": done,
                "offset": writer.offset(),
                "state": sampler.state_dict(),
                "rng_state": rng.bit_generator.state,
                "out_path": str(out_path),
            })
    else:
        on_checkpoint = None
    try:
        run_chain(sampler, iterations, burnin, thin, writer.write,
                  checkpoint_every=checkpoint_every, on_checkpoint=on_checkpoint)
    finally:
        writer.close()
    return header


def resume_fit(dataset, checkpoint_path, out_path=None):
    """Finish an interrupted fit so the stream matches an uninterrupted run."""
    payload = load_checkpoint(checkpoint_path)
    if payload.get("kind") != "checkpoint":
        raise StreamFormatError("%s is not a fit checkpoint" % checkpoint_path)
    header = payload["header"]
    if dataset_digest(dataset) != header["data_hash"]:
        raise StreamFormatError(
            "checkpoint was taken against different data; refusing to resume"
        )
    out_path = out_path or payload["out_path"]
    families = [family_from_dict(d) for d in header["kernels"]]
    params = ConcentrationParams(
        alpha=1.0,
        beta=np.ones(len(families)),
        alpha_prior=_prior_from_dict(header["alpha_prior"]),
        beta_prior=_prior_from_dict(header["beta_prior"]),
    )
    rng = np.random.default_rng()
    sampler = make_sampler(dataset, header["model"], families, params, rng,
                           init="single", chain=header["chain"])
    sampler.load_state(payload["state"])
    rng.bit_generator.state = payload["rng_state"]
    writer = DrawStreamWriter(out_path, resume_offset=payload["offset"])
    try:
        run_chain(sampler, header["iterations"], header["burnin"],
                  header["thin"], writer.write, start=payload["completed"])
    finally:
        writer.close()
    return header
