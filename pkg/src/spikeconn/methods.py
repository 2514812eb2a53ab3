"""Inference method registry: one uniform scoring surface per method.

Every method consumes a NetworkData bundle and produces a ScoreMatrix.
The shared preprocessing chain (scatter correction of the fluorescence,
then first-difference discretization at 0.12) runs lazily once per bundle
and is reused by all methods; precision-based methods additionally smooth
the raster with a length-3 summation filter before the covariance, and the
supervised method applies its own high-activity frame filter.
"""

import inspect
from dataclasses import dataclass, field

from . import cirusim, hawkes, model_free, preprocess
from .dataset import FluorescencePanel, GroundTruthNetwork, NeuronLayout


@dataclass
class NetworkData:
    """One recording with whatever side information is available."""

    network_id: str
    panel: FluorescencePanel | None = None
    layout: NeuronLayout | None = None
    ground_truth: GroundTruthNetwork | None = None
    raster: preprocess.SpikeRaster | None = None
    spike_threshold: float = preprocess.SPIKE_THRESHOLD
    scatter_amplitude: float = preprocess.SCATTER_AMPLITUDE
    _prepared: preprocess.SpikeRaster | None = field(default=None, repr=False)

    def prepared_raster(self):
        """Scatter-corrected, discretized raster (cached)."""
        if self.raster is not None:
            return self.raster
        if self._prepared is None:
            if self.panel is None:
                raise ValueError(f"network {self.network_id!r} has no recording")
            panel = self.panel
            if self.layout is not None:
                scatter = preprocess.build_scatter_matrix(
                    self.layout, amplitude=self.scatter_amplitude
                )
                panel = preprocess.correct_scatter(panel, scatter)
            self._prepared = preprocess.discretize(panel, self.spike_threshold)
        return self._prepared


class CrossCorrelationMethod:
    name = "xcorr"
    supervised = False

    def __init__(self, lag=1):
        self.lag = lag

    def score(self, test, train=None):
        return model_free.cross_correlation_scores(
            test.prepared_raster(), lag=self.lag, method_tag=self.name
        )


class _PrecisionMethod:
    supervised = False
    smooth_length = 3

    def _covariance(self, test):
        smoothed = preprocess.summation_filter(
            test.prepared_raster().events, self.smooth_length
        )
        return model_free.empirical_covariance(smoothed)


class PcaPrecisionMethod(_PrecisionMethod):
    name = "pca"

    def __init__(self, variance_kept=0.80):
        self.variance_kept = variance_kept

    def score(self, test, train=None):
        precision = model_free.pca_precision(self._covariance(test), self.variance_kept)
        return model_free.precision_to_scores(precision, self.name)


class GraphicalLassoMethod(_PrecisionMethod):
    name = "glasso"

    def __init__(self, penalty=None, max_sweeps=100, tol=1e-4):
        self.penalty = penalty
        self.max_sweeps = max_sweeps
        self.tol = tol

    def score(self, test, train=None):
        precision = model_free.graphical_lasso(
            self._covariance(test), self.penalty,
            max_sweeps=self.max_sweeps, tol=self.tol,
        )
        return model_free.precision_to_scores(precision, self.name)


class HawkesMethod:
    name = "hawkes"
    supervised = False

    def __init__(self, iterations=100, theta_init=10.0, window="auto"):
        self.iterations = iterations
        self.theta_init = theta_init
        self.window = window

    def score(self, test, train=None):
        model, _ = hawkes.em_fit(
            test.prepared_raster(), iterations=self.iterations,
            theta_init=self.theta_init, window=self.window,
        )
        return hawkes.hawkes_scores(model, self.name)


class CirusimMethod:
    name = "cirusim"
    supervised = True

    def __init__(self, refractory_s=cirusim.REFRACTORY_S,
                 clamp_floor_s=cirusim.SPAN_CLAMP_FLOOR_S,
                 activity_fraction=0.7, C=1.0, gamma=None, tol=1e-3):
        self.refractory_s = refractory_s
        self.clamp_floor_s = clamp_floor_s
        self.activity_fraction = activity_fraction
        self.C = C
        self.gamma = gamma
        self.tol = tol

    def score(self, test, train):
        if not train:
            raise ValueError("cirusim needs training networks with ground truth")
        train_sets = []
        for ds in train:
            if ds.ground_truth is None:
                raise ValueError(f"training network {ds.network_id!r} has no ground truth")
            train_sets.append((ds.prepared_raster(), ds.ground_truth))
        return cirusim.cirusim_scores(
            train_sets, test.prepared_raster(),
            refractory_s=self.refractory_s, clamp_floor_s=self.clamp_floor_s,
            activity_fraction=self.activity_fraction, C=self.C,
            gamma=self.gamma, tol=self.tol, method_tag=self.name,
        )


METHODS = {
    cls.name: cls
    for cls in (CrossCorrelationMethod, PcaPrecisionMethod, GraphicalLassoMethod,
                HawkesMethod, CirusimMethod)
}


def available_methods():
    return sorted(METHODS)


def build_method(name, **params):
    """Instantiate a registered method, forwarding only relevant params."""
    if name not in METHODS:
        raise ValueError(
            f"unknown method {name!r}; choose from {', '.join(available_methods())}"
        )
    cls = METHODS[name]
    accepted = set(inspect.signature(cls.__init__).parameters) - {"self"}
    kwargs = {k: v for k, v in params.items() if k in accepted and v is not None}
    return cls(**kwargs)
