"""ベイズ推定量."""

from .collocation import collocation_posterior
from .mh import mh_explicit
from .priors import BoxTransform, PriorSpec
from .rdem import rdem_filter, systematic_resample
from .samples import (
    PosteriorSamples,
    QuantileBands,
    load_samples,
    state_bands,
)
from .two_step import RungeKuttaMatch, two_step_bayes

__all__ = [
    "BoxTransform",
    "PosteriorSamples",
    "PriorSpec",
    "QuantileBands",
    "RungeKuttaMatch",
    "collocation_posterior",
    "load_samples",
    "mh_explicit",
    "rdem_filter",
    "state_bands",
    "systematic_resample",
    "two_step_bayes",
]
