"""Credal classification of incomplete patterns with belief functions."""

from .belief import (
    Frame,
    MassFunction,
    ccai_fuse,
    decide,
    discount,
    ds_combine,
    make_simple_bba,
)
from .ccai import CcaiConfig, CcaiModel, CredalResult, classify, fit
from .dataset import LabeledDataset, Pattern, load_csv

__all__ = [
    "CcaiConfig",
    "CcaiModel",
    "CredalResult",
    "Frame",
    "LabeledDataset",
    "MassFunction",
    "Pattern",
    "ccai_fuse",
    "classify",
    "decide",
    "discount",
    "ds_combine",
    "fit",
    "load_csv",
    "make_simple_bba",
]
