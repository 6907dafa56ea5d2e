"""hypersyn: hyperbolic context-synergy toolkit for conversation trees.

Poincare-ball geometry with reverse-mode differentiation, a Fourier
attention encoder for user histories, hyperbolic graph convolution over a
social graph, a bidirectional hyperbolic tree LSTM over conversation
trees, a trainer with an ablation harness, a synthetic corpus generator,
and scale-free graph diagnostics.
"""

__version__ = "0.1.0"
