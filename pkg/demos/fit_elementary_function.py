"""Fit sin(x + y) with a 47-parameter two-layer model.

Each layer expands its input with a concatenated Taylor + B-spline basis
and fabricates the layer weight matrix from a rank-1 factorization, so
the whole model stays tiny while the basis does the heavy lifting.

Run:  python3 demos/fit_elementary_function.py
"""

import numpy as np

from polyfab import build_model, builtin_functions, fit, gen_function_dataset

EXT = {"kind": "extended", "children": [
    {"kind": "taylor", "d": 2}, {"kind": "bspline", "t": 5, "degree": 3}]}

model = build_model([
    {"m": 2, "n": 2, "heads": [{"expansion": EXT,
                                "reconciliation": {"kind": "lorr", "r": 1}}]},
    {"m": 2, "n": 1, "heads": [{"expansion": EXT,
                                "reconciliation": {"kind": "lorr", "r": 1}}]},
])
print(f"learnable parameters: {model.param_count}")

fdef = builtin_functions()["E.5"]  # sin(x + y) on (0, 1)^2
train, test = gen_function_dataset(fdef, 2000, seed=0)

report = fit(model, train.X, train.y, test.X, test.y,
             optimizer="adam", opt_hyper={"lr": 0.05}, epochs=2000,
             seed=0, log_every=500)
print(f"best test MSE {report.best_test_loss:.3e} at epoch {report.best_epoch}")

# sanity: evaluate the snapshot on a fresh grid
g = np.linspace(0.05, 0.95, 7)
G = np.array([[a, b] for a in g for b in g])
pred = model.forward(G, report.best_params).ravel()
err = np.abs(pred - np.sin(G.sum(axis=1))).max()
print(f"max abs error on a 7x7 grid: {err:.3e}")
