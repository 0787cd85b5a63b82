"""Link-level simulation toolkit for trellis-coded multi-user superposition.

Covers the full chain: mapping matrices, multi-dimensional constellation
construction and shaping, distance-driven set partitioning with a dynamic
neighbor index, systematic feedback trellis codes, joint encoding with a
solved register flush, AWGN/Rayleigh channels, joint sequence detection
(exhaustive, optimal and reduced-complexity two-layer), baselines and a
Monte-Carlo BER harness.
"""

__version__ = "0.1.0"
