"""Hoeffding-type concentration for Markov chains via IPM concentrability."""
__version__ = "0.1.0"

from .core import (BL, L2PI, TV, W1, DiscreteMeasure, FunctionProfile, GeneratorClass, MetricSpace,
                   ProfileIncomplete, RngStream, minimal_stretch)
from .chains import (Ar1Discrete, FiniteKernel, LinearContraction, SgdIterate, doeblin_certificate,
                     k_step_distribution, stationary_distribution, step)
from .ipm import IpmValue, ipm_distance, tv_distance, w1_distance_1d
from .ergodicity import ErgodicityReport, concentrability, dobrushin_ipm_estimate, dobrushin_l2, dobrushin_tv
from .bounds import BoundReport, BoundSpec, compare_tightness, evaluate_bound
from .montecarlo import TailExperiment, empirical_tail, validate_bounds, validate_finite_chain
