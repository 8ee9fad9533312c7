"""A few stochastic Morris-Lecar paths against the deterministic limit.

Prints the membrane potential, the open-gate fraction and the jump rate of
five paths every 10 ms, with the deterministic ``(v, n)`` solution for
comparison.  ``pdmp simulate --config configs/ml.ini`` writes the full time
series as CSV files.

    python3 demos/morris_lecar_paths.py
"""
import numpy as np

from pdmp.core import evaluate_state, simulate_path
from pdmp.models import morris_lecar as ml
from pdmp.rng import StreamKey, derive_stream, sample_trace

params = ml.MlParams()
x0 = ml.default_initial_state(params)
T, rate_bound, h = 100.0, 10.0, 0.01
chars = ml.ml_characteristics(params, h, rate_bound)
det = ml.deterministic_ml(params, T, x0)

paths = []
for i in range(5):
    trace = sample_trace(derive_stream(StreamKey(2024, (i,))), rate_bound, T)
    paths.append(simulate_path(chars, trace, x0))
    print(f"path {i}: {paths[-1].jump_count} gate transitions out of {len(trace)} proposals")

p = params.vector()
print(f"\n{'t':>5} {'v det':>8} {'n det':>6} | " + " | ".join(f"{'v':>7} {'n':>5} {'rate':>5}" for _ in paths))
for t in np.arange(0.0, T + 1e-9, 10.0):
    v, n = det(t)
    cells = []
    for skel in paths:
        theta, nu = evaluate_state(skel, chars, float(t))
        cells.append(f"{nu:7.2f} {theta / params.N_K:5.2f} {ml.rate.py_func(theta, nu, p):5.2f}")
    print(f"{t:5.0f} {v:8.2f} {n:6.3f} | " + " | ".join(cells))
