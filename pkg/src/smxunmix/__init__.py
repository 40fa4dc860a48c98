"""Blind nonlinear hyperspectral unmixing with a constrained autoencoder."""
from .datagen import (AbundanceMap, HsiCube, SpectralLibrary, add_noise, generate_scene,
                      mix_bilinear, mix_linear, mix_ppnm, sample_abundances, synth_endmembers)
from .metrics import EvalReport, align, evaluate, nonlinear_energy_map, re, rmse, sad, sid
from .model import (ModelParams, abs_normalize, decoder_forward, encoder_forward,
                    extract_endmembers, init_params, unmix)
from .numerics import blkdiag_apply, lrelu, relu, sigmoid, stepwise_sum, tv_norm
from .train import AdamState, TrainConfig, TrainHistory, adam_step, gradient, objective, train
from .vca import VcaResult, vca_extract

__version__ = "0.1.0"
