"""Simulator of a reversible EIT optical memory for orbital-angular-momentum
light at the single-photon level.

Subpackages/modules:
    modes     Laguerre-Gaussian basis math, SLM synthesis, decomposition
    optics    fork holograms, beam splitter, fiber projector, attenuation
    memory    dynamic-EIT storage/retrieval (Maxwell-Bloch solver)
    counting  Poisson photodetection Monte Carlo with counter-based RNG
    analysis  figures of merit (efficiency, distinction ratio, imbalance)
    config    strict JSON experiment configuration
    pipeline  end-to-end experiment orchestration
    cli       command line entry point (run / sweep / decompose / validate)
"""

__version__ = "0.1.0"
