"""Desk-scale quantum computational chemistry toolkit.

Maps second-quantised molecular Hamiltonians onto qubit operators, finds
ground and excited state energies with simulated VQE and phase estimation,
and demonstrates error-mitigation techniques on a noisy statevector
simulator. Molecular integrals are ingested from FCIDUMP files; the shipped
fixtures cover H2 (STO-3G, 6-31G, cc-pVDZ) and LiH (STO-3G).
"""

__version__ = "0.1.0"
