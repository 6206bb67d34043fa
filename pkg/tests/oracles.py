"""Independent reference computations shared by the tests."""
import numpy as np


def cantor_oracle(n, digits=16):
    """Average of e(-n x) over all 2^digits Cantor points with 0/1 ternary
    digits (truncation error below 2*pi*|n|*3^-digits)."""
    pts = np.zeros(1)
    for k in range(1, digits + 1):
        pts = np.concatenate([pts, pts + 3.0 ** -k])
    return complex(np.mean(np.exp(-2j * np.pi * n * pts)))
