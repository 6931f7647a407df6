"""Poisson representability of binary processes on finite site sets.

Exact subset-lattice computations (``lattice``), Poisson set-process
sampling (``set_process``), the contact process (``contact``), the Ising
model (``ising``) and an experiment harness (``harness``, ``cli``).
"""

__version__ = "0.1.0"
