"""muser: emotion-conditioned symbolic music VQ-VAE with element-wise
latent regularization, two-level decoding, and an objective evaluation suite.
"""

__version__ = "0.1.0"
