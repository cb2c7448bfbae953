"""
selgauss - Bayesian spatial inversion with selection Gaussian priors
"""
__version__ = "0.1.0"
