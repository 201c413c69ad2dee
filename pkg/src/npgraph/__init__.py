"""Bayesian nonparanormal graphical models.

Monotone B-spline transforms sampled by exact HMC, a spike-and-slab Gibbs
sampler for the precision matrix, and BIC tuning of the prior.
"""

__version__ = "0.1.0"
