"""Tiny text plots so the demos run without a plotting library."""

import numpy as np

BARS = " .:-=+*#%@"


def sparkline(values, width=72):
    v = np.asarray(values, dtype=float)
    idx = np.linspace(0, len(v) - 1, width).astype(int)
    v = v[idx]
    top = v.max() if v.max() > 0 else 1.0
    return "".join(BARS[int(round(x / top * (len(BARS) - 1)))] for x in v)
