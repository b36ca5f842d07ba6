"""How reconciliation functions shrink the learnable footprint.

A head never stores its (n x D) weight matrix directly; it fabricates it
from a short vector.  This script prints the stored-vector length for
each fabrication rule as the expansion width D grows, then trains the
same model twice, once with a dense reshape and once with a rank-1
factorization, to show the small version still fits.

Run:  python3 demos/weight_fabrication_scaling.py
"""

import numpy as np

from polyfab import build_model, builtin_functions, fit, gen_function_dataset
from polyfab.reconciliations import make_reconciliation

n = 4
kinds = [("identity", {}), ("masking", {"p": 0.25}), ("lorr", {"r": 2}),
         ("hm", {"p": 2, "q": 2}), ("lphm", {"p": 2, "q": 2, "r": 1}),
         ("dual_lphm", {"p": 2, "q": 2, "r": 1}),
         ("duplicated_padding", {"p": 2, "q": 2})]

widths = [12, 24, 48, 96, 192]
print(f"{'fabrication':>20} " + " ".join(f"D={D:>4}" for D in widths))
for kind, hyper in kinds:
    row = [make_reconciliation(kind, n, D, **hyper).required_length
           for D in widths]
    print(f"{kind:>20} " + " ".join(f"{r:>6}" for r in row))

# same task, dense vs rank-1 fabrication
fdef = builtin_functions()["E.2"]  # (x + y)^2
train, test = gen_function_dataset(fdef, 2000, seed=0)
for recon in ({"kind": "identity"}, {"kind": "lorr", "r": 1}):
    model = build_model([
        {"m": 2, "n": 2, "heads": [{"expansion": {"kind": "taylor", "d": 2},
                                    "reconciliation": recon}]},
        {"m": 2, "n": 1, "heads": [{"expansion": {"kind": "taylor", "d": 2},
                                    "reconciliation": recon}]}])
    rep = fit(model, train.X, train.y, test.X, test.y,
              opt_hyper={"lr": 0.05}, epochs=1500, seed=0, record_params=False)
    print(f"{recon['kind']:>10}: {model.param_count:>3} params -> "
          f"best test MSE {rep.best_test_loss:.2e}")
