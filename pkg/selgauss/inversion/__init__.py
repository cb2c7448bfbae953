"""Conjugate posterior, data marginal and predictors under Gauss-linear likelihoods"""
