"""LIS-assisted mmWave MIMO link simulator.

Passive beamforming on the complex circle manifold, SVD-based hybrid
transceiver design, and a seeded Monte-Carlo sweep harness.
"""

__version__ = "0.1.0"
