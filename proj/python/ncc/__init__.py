"""Python front of the ncc code-modeling toolkit."""

from ncc._core import (
    NccError,
    NgramModel,
    Predictor,
    bleu,
    bpe_encode,
    bpe_train,
    lex,
    linearize,
    load_predictor,
    mrr,
    registered,
    rouge_l,
    space_tokenize,
)

__all__ = [
    "NccError",
    "NgramModel",
    "Predictor",
    "bleu",
    "bpe_encode",
    "bpe_train",
    "lex",
    "linearize",
    "load_predictor",
    "mrr",
    "registered",
    "rouge_l",
    "space_tokenize",
]
