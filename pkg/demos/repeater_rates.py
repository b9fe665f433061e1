"""Entanglement rates of 1, 2 and 4 link chains and their break-even distances."""
import numpy as np

from atomrepeater.repeater import LinkParams, break_even, rate_report

params = LinkParams()


def rate(N, strategy="restart"):
    runs, seed = (50_000, 1) if strategy == "keep" else (None, None)
    return lambda L: rate_report(params.for_distance(L, N), N, strategy, runs, seed).rate


print(" L [km]    N=1 [1/s]    N=2 [1/s]    N=4 [1/s]   N=4 keep [1/s]")
for L in np.arange(50, 251, 50):
    print(f"{L:7.0f} " + " ".join(f"{rate(N)(L):12.4g}" for N in (1, 2, 4)) + f" {rate(4, 'keep')(L):14.4g}")
print(f"N=2 beats direct transmission beyond {break_even(10, 100, rate(2), rate(1)):.1f} km")
print(f"N=4 beats N=2 beyond {break_even(100, 250, rate(4), rate(2)):.1f} km")
