"""uasrbridge: desk-scale adversarial phoneme recognition and feature fusion.

A synthetic, fully inspectable world (Gaussian emissions driven by a bigram
language model) stands in for real speech features, so every training trend
can be checked against ground truth. On top of it: a tape-based autodiff
engine, an adversarial phoneme recognizer trained from unpaired speech and
text, a span-corruption text encoder, two feature-fusion constructions, and
a downstream probe matrix.
"""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
