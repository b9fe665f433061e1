"""Print the reference cavity parameters and the herald fidelity penalty."""
import numpy as np

from atomrepeater.cavity import reference_designs
from atomrepeater.constants import to_mhz2pi
from atomrepeater.herald import degenerate_mode_fidelity

d = reference_designs()
for name in ("heralding", "entangling"):
    c = d[name]
    print(f"{name:>10}: kappa_oc/2pi = {to_mhz2pi(c.kappa_oc):6.2f} MHz, "
          f"g/2pi = {to_mhz2pi(c.g_coupling):6.2f} MHz, C = {c.cooperativity:5.2f}")
print(f"fiber overlap: {d['fiber_overlap']:.3f}")
print(f"herald infidelity (F=2 ground state): {1 - degenerate_mode_fidelity(-1, np.sqrt(3), -np.sqrt(6)):.3%}")
