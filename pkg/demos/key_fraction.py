"""Secret-key fraction of a chain versus interference contrast."""
import numpy as np

from atomrepeater.keyrate import chain_secret_fraction, threshold_fidelity

for N in (2, 4):
    row = ", ".join(f"C={C:.2f}: {chain_secret_fraction(C, 0.95, N):.3f}" for C in np.linspace(0.85, 1.0, 4))
    print(f"N={N}  {row}")
    print(f"      BSM fidelity for a positive key at C=0.97: {threshold_fidelity(0.97, N, 0.0):.3f}")
