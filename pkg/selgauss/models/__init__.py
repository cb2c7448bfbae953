"""Selection Gaussian models and selection sets"""
