"""Simulate the continuous-time walk and observe it at regular intervals.

The walker travels at unit speed, holding each heading for an
exponential duration and turning by a von Mises angle. The observation
process records its position every dt time units along with the number
of completed direction changes.
"""

import numpy as np

from stepturn import MovementParams, change_counts, latent_from_steps, observe, simulate_until

# a tiny hand-built path first: six step durations, five interior turns
durations = [0.2, 0.2, 0.7, 0.4, 0.4, 0.8]
turns = [0.32, 5.65, 5.81, 0.02, 0.11]
path = latent_from_steps(durations, turns)
print("hand-built path turn points:")
for i, (x, y) in enumerate(path.positions):
    print(f"  M_{i} = ({x:7.4f}, {y:7.4f})")

counts = change_counts(durations, dt=0.5, n_obs=5)
print(f"change counts at dt = 0.5: {counts.tolist()}  (N_1..N_5)")

track = observe(path, dt=0.5, n_obs=5)
print("observed positions:")
for j, (x, y) in enumerate(track.positions):
    print(f"  O_{j} = ({x:7.4f}, {y:7.4f})")

# now a random walk with kappa = 20 (persistent) and lambda = 2 turns
# per time unit, long enough for 200 observations at dt = 0.5
params = MovementParams(kappa=20.0, lam=2.0)
rng = np.random.default_rng(7)
path = simulate_until(params, total_time=200 * 0.5, rng=rng)
track = observe(path, dt=0.5, n_obs=200)
print(f"\nsimulated walk: {path.n_steps} latent steps over {path.total_time:.1f} time units")
print(f"mean step duration: {path.durations.mean():.3f} (expected {1 / params.lam})")
print(f"mean cos(turn):     {np.cos(path.turns).mean():.3f}")
steps = np.hypot(*np.diff(track.positions, axis=0).T)
print(f"observed steps: mean {steps.mean():.4f}, max {steps.max():.4f} (bounded by dt = 0.5)")
print(f"changes completed by the last observation: {track.change_counts[-1]}")
