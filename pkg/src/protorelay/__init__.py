"""Protograph LDPC codes over Nakagami-m fading half-duplex relay channels.

PEXIT thresholds, Gaussian-approximation BER predictions and Monte-Carlo
simulation with a lifted code and a sum-product decoder.
"""
from .protograph import BaseMatrix, build, build_ar3a, build_ar4ja, code_rate
from .lifting import LiftedCode, lift
from .bp import BPDecoder, bp_decode
from .jfunc import j_fun, j_inv
from .pexit import run_modified_pexit, threshold_search
from .ber_theory import df_ber_curve, ef_ber_curve
from .harness import SimConfig, run_experiment, simulate_point

__version__ = "0.1.0"
