"""Calibrate the control pulse, then estimate the heralded-pair probability.

Takes a minute or two on one core.
"""
from atomrepeater.cascade import build_model, calibrated_pulse, success_probability

pulse = calibrated_pulse(5.9e-9)
out = success_probability(build_model(pulse=pulse), 2000, seed=1)
print(f"p_ht = {out.p_ht:.3f} +- {out.p_ht_stderr:.3f}")
for k, v in sorted(out.losses.items()):
    print(f"  loss {k:<22} {v:.3f}")
