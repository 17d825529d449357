"""Channel estimation for RIS-assisted OFDM links with a short cyclic prefix
and a nonlinear power amplifier.

The LS estimate of every pilot slot is split into direct and cascaded link
CFRs with the RIS reflection matrix, then refined by an extreme learning
machine whose hidden pre-activations are standardized.
"""

__version__ = "0.1.0"
