"""Temporal video question answering at desk scale.

GRU encoder-decoder models learn past/present/future clip representations by
reconstruction; a dual-channel hinge ranking answers fill-in-the-blank
multiple-choice questions; a regularized linear CCA serves as the comparison
baseline. Every gradient is hand-derived and checked against central finite
differences (see temporalvqa.gradcheck and the `vqa gradcheck` subcommand).
"""

from .backend import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
