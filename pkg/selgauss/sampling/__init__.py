"""Set probabilities, truncated normal draws and the blocked truncated Gaussian sampler"""
