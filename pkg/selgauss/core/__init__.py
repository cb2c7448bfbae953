"""Gaussian building blocks: grids, correlation functions, factorization, conditioning"""
