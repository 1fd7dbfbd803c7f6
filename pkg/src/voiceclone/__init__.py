"""Desk-scale voice cloning.

Alignment-driven front-end, log-domain duration predictor, a
duration-conditioned autoregressive acoustic model, a GAN vocoder, and a
three-stage train / adapt / synthesize pipeline around them.
"""

__version__ = "0.1.0"
