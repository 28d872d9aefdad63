#!/usr/bin/env python3
"""Convergence of generators and information entries to their limits.

The deviations from the long-time forms oscillate under a 1/(omega T)
envelope. This script tabulates the five relative-error curves on a log
grid and fits the envelope slope of each; all five come out at -1.
"""

import numpy as np

from acmag import FieldParams, envelope_slope, relative_error_curves

xs = np.logspace(2, 5, 2000)
curves = relative_error_curves(FieldParams.matched(1.0, 1.0), xs)

print(f"{'omega*T':>10}", *(f"{k:>12}" for k in
                            ("dh_b", "dh_omega", "df_bb", "df_ww", "df_bw")))
for x in (1e2, 1e3, 1e4, 1e5):
    i = int(np.argmin(np.abs(xs - x)))
    print(f"{xs[i]:10.0f}", *(f"{curves[k][i]:12.3e}" for k in
                              ("dh_b", "dh_omega", "df_bb", "df_ww", "df_bw")))

print("\nfitted envelope slopes (expect -1):")
for key in ("dh_b", "dh_omega", "df_bb", "df_ww", "df_bw"):
    slope, stderr = envelope_slope(xs, curves[key])
    print(f"  {key:>9}: {slope:+.3f} +- {stderr:.3f}")
