"""Mixture models for mixed-type data with per-component cluster indices.

The package fits two Bayesian nonparametric models to rows of mixed
components (real vectors, categoricals, autoregressive series):

* :class:`~tensormix.sampler.TensorMixtureSampler` — a two-level model where
  each row has a top-level cluster and, per component, its own lower-level
  cluster drawn from top-cluster-specific stick weights over a shared atom
  list.  Dependence between components is carried entirely by the shared top
  level, so the implied contingency array over lower labels factorizes as a
  weighted sum of rank-one products.
* :class:`~tensormix.dpm.DpmSampler` — the classical single-index mixture
  baseline where one shared label drives every component.

Both are exact slice samplers: uniform auxiliary variables truncate the
infinite stick-breaking weights to finitely many candidates per sweep, so no
approximation error is introduced.  Posterior draws stream to NDJSON files
and feed predictive-density estimation, conditional prediction of held-out
cells, and a permutation-calibrated pairwise dependence test.
"""

from .data import (ComponentSchema, MixedDataset, apply_holdout,
                   kernels_for_dataset, load_answers, load_dataset,
                   save_answers, save_dataset, score_predictions)
from .dpm import DpmSampler
from .drawstream import (load_checkpoint, load_stream, read_stream,
                         resume_fit, run_fit, save_checkpoint)
from .inference import (PosteriorDraws, cluster_count_trace, coclustering,
                        concentration_trace, conditional_predict,
                        dependence_report, dependence_statistic,
                        dependence_test, point_predictions,
                        predictive_density)
from .kernels import (Ar1Kernel, CategoricalKernel, GaussianDiagKernel,
                      KernelFamily, family_from_dict)
from .sampler import TensorMixtureSampler, run_chain
from .simulate import ScenarioConfig, generate
from .sticks import (ConcentrationParams, GammaPrior, StickMeasure,
                     gem_log_predictive, gem_predictive_prob,
                     gem_predictive_tail)
from .tensor import TensorView, tensor_cell_prob

__version__ = "0.1.0"

__all__ = [
    "Ar1Kernel", "CategoricalKernel", "ComponentSchema",
    "ConcentrationParams", "DpmSampler", "GammaPrior", "GaussianDiagKernel",
    "KernelFamily", "MixedDataset", "PosteriorDraws", "ScenarioConfig",
    "StickMeasure", "TensorMixtureSampler", "TensorView", "apply_holdout",
    "cluster_count_trace", "coclustering", "concentration_trace",
    "conditional_predict", "dependence_report", "dependence_statistic",
    "dependence_test", "family_from_dict", "generate",
    "gem_log_predictive", "gem_predictive_prob", "gem_predictive_tail",
    "kernels_for_dataset", "load_answers", "load_checkpoint", "load_dataset",
    "load_stream", "point_predictions", "predictive_density", "read_stream",
    "resume_fit", "run_chain", "run_fit", "save_answers", "save_checkpoint",
    "save_dataset", "score_predictions", "tensor_cell_prob",
]
