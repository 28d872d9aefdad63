#!/usr/bin/env python3
"""Sensitivity scaling with the number of interrogation blocks.

With ideal decoupling pulses the amplitude uncertainty falls off as 1/N
and the frequency uncertainty as 1/N^2 (the latter beating the usual
1/T readout scaling, since frequency information grows with the time
lever arm). Finite-duration pulses leave a residual hyperfine kick per
block, which shows up as oscillations about the power law.
"""

from acmag import NvParams, PiPulseModel, ReadoutModel, scaling_study

nv = NvParams()
readout = ReadoutModel()

ideal = scaling_study(nv, readout)
finite = scaling_study(nv, readout, pulse=PiPulseModel(kind="finite"))

print(f"{'N':>3} {'dB ideal':>12} {'dw ideal':>12} {'dB finite':>12} {'dw finite':>12}")
for i, n in enumerate(ideal.n_values):
    print(f"{n:3d} {ideal.delta_b[i]:12.4e} {ideal.delta_w[i]:12.4e}"
          f" {finite.delta_b[i]:12.4e} {finite.delta_w[i]:12.4e}")

print(f"\nideal-pulse fits:  delta_B ~ N^{ideal.exponent_b:+.3f}"
      f" (+- {ideal.exponent_b_stderr:.3f}),"
      f"  delta_omega ~ N^{ideal.exponent_w:+.3f}"
      f" (+- {ideal.exponent_w_stderr:.3f})")
print(f"finite-pulse fits: delta_B ~ N^{finite.exponent_b:+.3f}"
      f" (+- {finite.exponent_b_stderr:.3f}),"
      f"  delta_omega ~ N^{finite.exponent_w:+.3f}"
      f" (+- {finite.exponent_w_stderr:.3f})  <- drifts and oscillates")
