#!/usr/bin/env python3
"""Simulated sensor signals versus each target parameter.

Runs the two-qubit interleaved sequence across amplitude and frequency
sweeps around the operating point and prints the measured signals
1 - p_i. More repetitions steepen the response, which is what buys
sensitivity; the local slopes feed the uncertainty estimate.
"""

import numpy as np

from acmag import (NvParams, PiPulseModel, ReadoutModel, operating_field,
                   parameter_uncertainty, sweep_signal)

nv = NvParams()
readout = ReadoutModel()           # shot noise for n_avg = 3e6
pulse = PiPulseModel()
p = operating_field(nv, B_c=5.65)
TAU = 0.017

for n_reps in (1, 8):
    vb = p.B + np.linspace(-0.2 / n_reps, 0.2 / n_reps, 11)
    vw = p.omega + np.linspace(-2.0 / n_reps**2, 2.0 / n_reps**2, 11)
    sweep_b = sweep_signal("B", vb, p, nv, n_reps, TAU, pulse, readout,
                           seed=1, add_noise=True)
    sweep_w = sweep_signal("omega", vw, p, nv, n_reps, TAU, pulse, readout,
                           seed=2, add_noise=True)
    print(f"--- N = {n_reps} (T = {n_reps * TAU:.3f} us, wall time"
          f" {2 * n_reps * TAU:.3f} us) ---")
    print(f"{'B [G]':>9} {'signal_1':>10} {'signal_2':>10}")
    for v, s in zip(sweep_b.values, sweep_b.signals):
        print(f"{v:9.4f} {s[0]:10.6f} {s[1]:10.6f}")
    print(f"slopes dS/dB:     {sweep_b.slopes.round(5)}"
          f"  +- {sweep_b.slope_stderr.round(6)}")
    print(f"slopes dS/domega: {sweep_w.slopes.round(6)}"
          f"  +- {sweep_w.slope_stderr.round(7)}")
    unc = parameter_uncertainty(sweep_b, sweep_w, readout)
    print(f"delta_B = {unc.delta_b:.3e} G,"
          f" delta_omega = {unc.delta_w:.3e} rad/us\n")
