"""Attention encoder-decoder over AST path contexts, in numpy."""
from .checkpoint import load, save
from .decode import Decoded, decode_beam, decode_greedy, predict_tokens
from .gradcheck import GradCheckResult, grad_check
from .model import (PARAM_GROUPS, HyperParams, Model, encode_contexts, encode_example,
                    init_params, make_batch)
from .train import TrainReport, train
from .vocab import EOS, PAD, SOS, UNK, Vocab, build_vocab

__all__ = [
    "PARAM_GROUPS", "HyperParams", "Model", "encode_contexts", "encode_example", "init_params",
    "make_batch", "Decoded", "decode_beam", "decode_greedy", "predict_tokens", "GradCheckResult",
    "grad_check", "TrainReport", "train", "Vocab", "build_vocab", "PAD", "SOS", "EOS", "UNK",
    "load", "save",
]
