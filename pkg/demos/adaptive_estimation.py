#!/usr/bin/env python3
"""Closing the loop: refine the control toward the unknown field.

The optimal working point needs the control locked to the true field
parameters, which are what we are estimating. Starting from a deliberately
wrong guess, each round measures the (noisy) signals, inverts the local
Jacobian, and re-centers the control on the updated estimate.
"""

from acmag import NvParams, adaptive_loop, control_frequency

nv = NvParams()
w_c = control_frequency(nv)

truth = (5.70, w_c + 0.3)            # true field (Gauss, rad/us)
start = (5.65, w_c)                  # initial guess = bare hardware setting
SHOTS = 100_000

traj = adaptive_loop(truth, start, rounds=5, shots=SHOTS, nv=nv, seed=3)

print(f"true field: B = {truth[0]} G, omega - w_c = {truth[1] - w_c:+.3f} rad/us")
print(f"{'round':>5} {'B_est [G]':>11} {'w_est - w_c':>13} {'|B err|':>10} {'|w err|':>10}")
for r, (b, w) in enumerate(traj):
    print(f"{r:5d} {b:11.5f} {w - w_c:13.5f} {abs(b - truth[0]):10.2e}"
          f" {abs(w - truth[1]):10.2e}")

improved = abs(traj[-1, 1] - truth[1]) < abs(traj[0, 1] - truth[1])
print(f"\nfrequency error reduced: {improved}")
