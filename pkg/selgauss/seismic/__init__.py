"""Convolved linearized seismic forward model, trivariate prior and the synthetic study"""
