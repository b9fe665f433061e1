"""Physical constants and 87Rb transition data used throughout the package.

Rates are population decay rates in rad/s; wavelengths in metres.
"""
import numpy as np

C_LIGHT = 2.99792458e8  # m/s
TWO_PI = 2 * np.pi


def mhz2pi(value):
    """Convert a frequency quoted as 2pi x value MHz to rad/s."""
    return TWO_PI * 1e6 * value


def to_mhz2pi(rate):
    """Inverse of :func:`mhz2pi`."""
    return rate / (TWO_PI * 1e6)


# heralding transition 5P1/2 -> 5S1/2 (D1 line)
LAMBDA_HERALD = 795e-9
GAMMA_5P12 = mhz2pi(5.75)
# relative strength of 5P1/2 F'=1 mF=+-1 -> 5S1/2 F=2 mF=+-1
BRANCH_HERALD = 1 / 4

# telecom transition 4D3/2 -> 5P1/2
LAMBDA_TELECOM = 1476e-9
GAMMA_4D_TO_5P12 = mhz2pi(1.62)
GAMMA_4D_TO_5P32 = mhz2pi(0.30)
GAMMA_4D32 = GAMMA_4D_TO_5P12 + GAMMA_4D_TO_5P32
# 4D3/2 F''=1 mF=0 -> 5P1/2 F'=1 mF=+-1, each
BRANCH_TELECOM = 5 / 12

# relative amplitudes 5P1/2 F'=1 -> 5S1/2 F=2 (a: mF=0, b: same mF, c: |mF|=2)
RB87_AMPLITUDES_F2 = (-1.0, np.sqrt(3.0), -np.sqrt(6.0))
# 5P1/2 F'=1 -> 5S1/2 F=1 with a' = -a, b' = -b
RB87_AMPLITUDES_F1 = (-1.0, 1.0, 0.0)
