"""Command-line interface.

Subcommands: train, eval, gradcheck, equiv, bench, gen-data.  Runs are
driven by a JSON config file; flags only override single fields.  Config
errors exit with code 2, a training divergence (NaN loss) with code 3.

Report files are deterministic byte-for-byte for a fixed config and
seed: anything time-dependent goes to a metadata sidecar.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import reference
from .data import (builtin_functions, downsample, export_csv,
                   gen_function_dataset, load_csv, load_idx, MeanStd)
from .errors import ConfigError, PolyfabError, TrainDivergence
from .model import build_model
from .tensorops import make_rng
from .train import accuracy, fit, get_loss, grad_check, make_optimizer


class ConfigFieldError(ConfigError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


def _check_keys(obj, allowed, path):
    if not isinstance(obj, dict):
        raise ConfigFieldError(path, f"expected an object, got {type(obj).__name__}")
    for key in obj:
        if key not in allowed:
            raise ConfigFieldError(f"{path}.{key}", "unknown key")


_HEAD_KEYS = {"expansion", "reconciliation", "remainder", "channels"}
_LAYER_KEYS = {"m", "n", "heads"}
_DATASET_KEYS = {"source", "id", "n", "seed", "path", "label_column", "k_folds",
                 "images", "labels", "test_images", "test_labels",
                 "downsample", "normalize", "train_limit", "test_limit"}
_TRAIN_KEYS = {"loss", "optimizer", "opt_hyper", "epochs", "batch_size", "seeds"}
_TOP_KEYS = {"model", "dataset", "train", "out"}


def load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as e:
        raise ConfigFieldError(path, str(e))
    except json.JSONDecodeError as e:
        raise ConfigFieldError(path, f"invalid JSON: {e}")
    _check_keys(cfg, _TOP_KEYS, "config")
    for section in ("model", "dataset", "train"):
        if section not in cfg:
            raise ConfigFieldError(f"config.{section}", "missing required section")
    _check_keys(cfg["model"], {"layers"}, "config.model")
    for i, layer in enumerate(cfg["model"].get("layers", [])):
        _check_keys(layer, _LAYER_KEYS, f"config.model.layers[{i}]")
        for j, head in enumerate(layer.get("heads", [])):
            _check_keys(head, _HEAD_KEYS, f"config.model.layers[{i}].heads[{j}]")
    _check_keys(cfg["dataset"], _DATASET_KEYS, "config.dataset")
    _check_keys(cfg["train"], _TRAIN_KEYS, "config.train")
    return cfg


def build_from_config(cfg):
    try:
        model = build_model(cfg["model"]["layers"])
    except (ConfigError, KeyError, TypeError) as e:
        raise ConfigFieldError("config.model", str(e))
    return model


def load_dataset(dcfg):
    """Returns a list of (train, test) Dataset pairs (folds)."""
    source = dcfg.get("source")
    if source == "function":
        cat = builtin_functions()
        fid = dcfg.get("id")
        if fid not in cat:
            raise ConfigFieldError("config.dataset.id",
                                   f"unknown function {fid!r}")
        tr, te = gen_function_dataset(cat[fid], n=dcfg.get("n", 2000),
                                      seed=dcfg.get("seed", 0))
        return [(tr, te)]
    if source == "csv":
        if "path" not in dcfg or not os.path.exists(dcfg.get("path", "")):
            raise ConfigFieldError("config.dataset.path", "missing dataset path")
        return load_csv(dcfg["path"], dcfg.get("label_column", "target"),
                        k_folds=dcfg.get("k_folds", 1), seed=dcfg.get("seed", 0))
    if source == "idx":
        for key in ("images", "labels", "test_images", "test_labels"):
            if key not in dcfg or not os.path.exists(dcfg[key]):
                raise ConfigFieldError(f"config.dataset.{key}", "missing IDX file path")
        tr = load_idx(dcfg["images"], dcfg["labels"])
        te = load_idx(dcfg["test_images"], dcfg["test_labels"])
        Xtr, Xte = tr.X, te.X
        if dcfg.get("downsample"):
            Xtr = downsample(Xtr, dcfg["downsample"])
            Xte = downsample(Xte, dcfg["downsample"])
        ytr, yte = tr.y, te.y
        if dcfg.get("train_limit"):
            Xtr, ytr = Xtr[:dcfg["train_limit"]], ytr[:dcfg["train_limit"]]
        if dcfg.get("test_limit"):
            Xte, yte = Xte[:dcfg["test_limit"]], yte[:dcfg["test_limit"]]
        if dcfg.get("normalize") == "mean_std":
            norm = MeanStd(per_feature=False).fit(Xtr)
            Xtr, Xte = norm.transform(Xtr), norm.transform(Xte)
        from .data import Dataset
        return [(Dataset(Xtr, ytr, "train"), Dataset(Xte, yte, "test"))]
    raise ConfigFieldError("config.dataset.source",
                           f"unknown source {source!r} (function, csv, idx)")


def _summary_stats(values):
    arr = np.asarray(values, dtype=np.float64)
    return {"mean": float(arr.mean()), "std": float(arr.std()), "n": len(values)}


def cmd_train(args):
    cfg = load_config(args.config)
    model = build_from_config(cfg)
    folds = load_dataset(cfg["dataset"])
    tcfg = cfg["train"]
    seeds = [args.seed] if args.seed is not None else tcfg.get("seeds", [0])
    out_dir = args.out or cfg.get("out") or "run_out"
    os.makedirs(out_dir, exist_ok=True)

    t_start = time.time()
    rows = []
    for seed in seeds:
        for fi, (tr, te) in enumerate(folds):
            rep = fit(model, tr.X, tr.y, te.X, te.y,
                      loss=tcfg.get("loss", "mse"),
                      optimizer=tcfg.get("optimizer", "adam"),
                      opt_hyper=tcfg.get("opt_hyper"),
                      epochs=tcfg.get("epochs", 2000),
                      batch_size=tcfg.get("batch_size"),
                      seed=seed)
            rows.append({"seed": seed, "fold": fi,
                         "best_epoch": rep.best_epoch,
                         "best_test_loss": rep.best_test_loss,
                         "best_test_metric": rep.best_test_metric,
                         "metric": rep.metric_name})
            np.save(os.path.join(out_dir, f"params_seed{seed}_fold{fi}.npy"),
                    rep.best_params)

    metric_name = rows[0]["metric"]
    stats = _summary_stats([r["best_test_metric"] for r in rows])
    summary = {"config": os.path.basename(args.config),
               "param_count": model.param_count,
               "metric": metric_name, "runs": rows, "aggregate": stats}
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    with open(os.path.join(out_dir, "metadata.json"), "w") as fh:
        json.dump({"started": t_start, "finished": time.time()}, fh, indent=2)

    lines = [f"{'seed':>6} {'fold':>5} {'best epoch':>10} {metric_name:>14}"]
    for r in rows:
        lines.append(f"{r['seed']:>6} {r['fold']:>5} {r['best_epoch']:>10} "
                     f"{r['best_test_metric']:>14.6e}")
    lines.append(f"best-epoch {metric_name} (cherry-picked): "
                 f"{stats['mean']:.6e} +/- {stats['std']:.6e} over {stats['n']} runs")
    report = "\n".join(lines)
    with open(os.path.join(out_dir, "report.txt"), "w") as fh:
        fh.write(report + "\n")
    print(report)
    return 0


def cmd_eval(args):
    cfg = load_config(args.config)
    model = build_from_config(cfg)
    folds = load_dataset(cfg["dataset"])
    params = np.load(args.checkpoint)
    loss_kind = cfg["train"].get("loss", "mse")
    loss_fn = get_loss(loss_kind)
    for fi, (tr, te) in enumerate(folds):
        out = model.forward(te.X, params)
        lval, _ = loss_fn(out, te.y)
        if loss_kind == "cross_entropy":
            print(f"fold {fi}: loss {lval:.6e} accuracy {accuracy(out, te.y):.4f}")
        else:
            print(f"fold {fi}: mse {lval:.6e}")
    return 0


def _gradcheck_cases():
    """A sweep of small configs covering every catalog entry."""
    expansions = [
        {"kind": "identity"},
        {"kind": "reciprocal"},
        {"kind": "linear", "c": 1.5},
        {"kind": "taylor", "d": 2},
        {"kind": "fourier", "P": 2.0, "N": 2},
        {"kind": "bspline", "t": 4, "degree": 3, "lo": -2.0, "hi": 2.0},
        {"kind": "chebyshev", "d": 3},
        {"kind": "jacobi", "d": 3, "alpha": 0.5, "beta": -0.25},
        {"kind": "trig"},
        {"kind": "arc_trig"},
        {"kind": "hyperbolic"},
        {"kind": "arc_hyperbolic"},
        {"kind": "gaussian_rbf", "centers": [-0.5, 0.5], "eps": 1.2},
        {"kind": "inverse_quadratic_rbf", "centers": [-0.5, 0.0, 0.5]},
        {"kind": "combinatorial", "d": 2},
        {"kind": "naive_prob", "dists": [
            {"family": "gaussian", "mu": 0.0, "sigma": 1.0},
            {"family": "laplace", "mu": 0.0, "b": 1.0},
            {"family": "cauchy", "x0": 0.0, "gamma": 1.0}]},
        {"kind": "combinatorial_prob", "d": 2},
        {"kind": "nested", "children": [
            {"kind": "bspline", "t": 3, "degree": 2}, {"kind": "taylor", "d": 2}]},
        {"kind": "extended", "children": [
            {"kind": "taylor", "d": 2}, {"kind": "bspline", "t": 3, "degree": 2}]},
    ]
    recons = [
        {"kind": "constant", "c": 0.5}, {"kind": "identity"},
        {"kind": "masking", "p": 0.5, "seed": 3},
        {"kind": "duplicated_padding", "p": 2, "q": 1},
        {"kind": "lorr", "r": 2}, {"kind": "hm", "p": 2, "q": 1},
        {"kind": "lphm", "p": 2, "q": 1, "r": 1},
        {"kind": "dual_lphm", "p": 2, "q": 1, "r": 1},
        {"kind": "hypernet", "l": 5, "width": 8, "seed": 4},
    ]
    remainders = [
        {"kind": "zero"}, {"kind": "constant", "c": 0.25},
        {"kind": "linear", "activation": "silu"},
        {"kind": "linear", "activation": "sigmoid", "placement": "pre"},
    ]
    cases = []
    nrec = len(recons)
    nrem = len(remainders)
    for i, exp in enumerate(expansions):
        cases.append((exp, recons[i % nrec], remainders[i % nrem]))
    # make sure every reconciliation and remainder kind appears
    for j, rec in enumerate(recons):
        cases.append((expansions[j % len(expansions)], rec, remainders[j % nrem]))
    for j, rem in enumerate(remainders):
        cases.append((expansions[(j + 3) % len(expansions)], recons[(j + 1) % nrec], rem))
    return cases


def _extra_gradcheck_models():
    """Cases the dict sweep cannot express: identity and complementary remainders."""
    from .model import build_head, Head, Layer, Model
    from .remainders import make_remainder
    m = n = 3
    ident = build_model([{"m": m, "n": n, "heads": [{
        "expansion": {"kind": "chebyshev", "d": 2},
        "reconciliation": {"kind": "lorr", "r": 1},
        "remainder": {"kind": "identity", "activation": "silu"}}]}])
    child = build_head(m, n, expansion={"kind": "taylor", "d": 2},
                       reconciliation={"kind": "lorr", "r": 1})
    comp_head = build_head(m, n, expansion={"kind": "fourier", "P": 2.0, "N": 1},
                           reconciliation={"kind": "identity"},
                           remainder=make_remainder("complementary", m, n, head=child))
    comp = Model([Layer([comp_head])])
    return [("chebyshev", "lorr", "identity", ident, m, n),
            ("fourier", "identity", "complementary", comp, m, n)]


def run_gradcheck(tol=1e-5, corrupt=False, quiet=False):
    """Sweep the catalog; returns (ok, worst list)."""
    todo = []
    for exp, rec, rem in _gradcheck_cases():
        m, n = 4, 2
        model = build_model([{"m": m, "n": n, "heads": [{
            "expansion": exp, "reconciliation": rec, "remainder": rem}]}])
        todo.append((exp["kind"], rec["kind"], rem["kind"], model, m, n))
    todo.extend(_extra_gradcheck_models())
    results = []
    for ekind, rkind, remkind, model, m, n in todo:
        rng = make_rng(11)
        X = rng.uniform(0.15, 0.85, size=(3, m))
        y = rng.normal(size=(3, n))
        params = model.init_params(5)
        rep = grad_check(model, params, X, y, tol=tol)
        if corrupt:
            rep["max_rel_err"] += 1.0
            rep["ok"] = False
        results.append((ekind, rkind, remkind, rep))
        if not quiet:
            flag = "ok " if rep["ok"] else "FAIL"
            print(f"{flag} {ekind:>22} x {rkind:>18} x {remkind:>13}: "
                  f"max rel err {rep['max_rel_err']:.2e} (worst param {rep['worst_index']})")
    ok = all(r[3]["ok"] for r in results)
    return ok, results


def cmd_gradcheck(args):
    ok, results = run_gradcheck(tol=args.tol)
    worst = max(results, key=lambda r: r[3]["max_rel_err"])
    print(f"worst case: {worst[0]} x {worst[1]} x {worst[2]} "
          f"rel err {worst[3]['max_rel_err']:.2e} at param {worst[3]['worst_index']}")
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


def cmd_equiv(args):
    rng = make_rng(0)
    if args.target == "mlp":
        dims = [2, 3, 1]
        worst = 0.0
        for _ in range(50):
            weights = [rng.normal(size=(dims[k + 1], dims[k]))
                       for k in range(len(dims) - 1)]
            model = reference.mlp_config(dims)
            params = reference.mlp_weights_to_params(weights)
            X = rng.normal(size=(5, dims[0]))
            diff = np.abs(model.forward(X, params)
                          - reference.reference_mlp_forward(weights, X)).max()
            worst = max(worst, diff)
        print(f"mlp forward equivalence: max abs diff {worst:.3e} over 50 draws")
        return 0 if worst < 1e-12 else 1
    if args.target == "kan":
        dims, t, deg = [2, 2, 1], 5, 3
        model = reference.kan_config(dims, t=t, degree=deg)
        nb = t + deg
        C = [rng.normal(size=(dims[k + 1], dims[k], nb)) for k in range(len(dims) - 1)]
        Wb = [rng.normal(size=(dims[k], dims[k + 1])) for k in range(len(dims) - 1)]
        params = reference.kan_weights_to_params(C, Wb)
        X = rng.uniform(-0.9, 0.9, size=(20, dims[0]))
        diff = np.abs(model.forward(X, params)
                      - reference.reference_kan_forward(X, C, Wb, t=t, degree=deg)).max()
        print(f"kan forward equivalence: max abs diff {diff:.3e}")
        return 0 if diff < 1e-10 else 1
    if args.target == "ksvm":
        worst = 0.0
        for _ in range(50):
            a, b = rng.normal(size=2), rng.normal(size=2)
            lhs = reference.phi_quadratic(a) @ reference.phi_quadratic(b)
            rhs = (a @ b) ** 2
            worst = max(worst, abs(lhs - rhs))
        print(f"kernel map identity <phi(a),phi(b)> = (a.b)^2: max abs diff {worst:.3e}")
        X = np.concatenate([rng.normal(2.0, 0.5, size=(30, 2)),
                            rng.normal(-2.0, 0.5, size=(30, 2))])
        y = np.concatenate([np.ones(30), -np.ones(30)])
        w, bias = reference.reference_perceptron(X, y)
        model, params = reference.ksvm_config(2, w, bias=bias)
        agree = float(np.mean(np.sign(model.forward(X, params)).ravel() == y))
        print(f"linear decision agreement with margin reference: {agree:.0%}")
        return 0 if worst < 1e-12 and agree == 1.0 else 1
    if args.target == "nb":
        X, y = reference.synthetic_class_gaussians(seed=1)
        Xte, _ = reference.synthetic_class_gaussians(seed=2)
        Xte = Xte[:500]
        nb = reference.NaiveBayesHeads.fit(X, y)
        ref_pred, _ = reference.reference_naive_bayes(X, y, Xte)
        agree = float(np.mean(nb.predict(Xte) == ref_pred))
        print(f"naive bayes argmax agreement on 500 points: {agree:.0%}")
        return 0 if agree == 1.0 else 1
    print(f"unknown equivalence target {args.target!r}", file=sys.stderr)
    return 2


def cmd_bench(args):
    sweep = args.sweep
    n = 4
    Ds = [10, 20, 40, 80, 160]
    if sweep == "recon-params":
        kinds = [("identity", {}), ("lorr", {"r": 2}),
                 ("duplicated_padding", {"p": 2, "q": 2}),
                 ("hm", {"p": 2, "q": 2}), ("lphm", {"p": 2, "q": 2, "r": 1}),
                 ("dual_lphm", {"p": 2, "q": 2, "r": 1})]
        from .reconciliations import make_reconciliation
        print(f"{'kind':>20} " + " ".join(f"D={D:>5}" for D in Ds) + "   log-log slope")
        for kind, hyper in kinds:
            ls = [make_reconciliation(kind, n, D, **hyper).required_length for D in Ds]
            slope = np.polyfit(np.log(Ds), np.log(ls), 1)[0]
            print(f"{kind:>20} " + " ".join(f"{l:>7}" for l in ls) + f"   {slope:.2f}")
        return 0
    if sweep == "expand-time":
        from .expansions import make_expansion
        ms = [4, 8, 16, 32, 64]
        exp_order = {"identity": 1.0, "taylor": 2.0}
        print(f"{'kind':>10} " + " ".join(f"m={m:>3}" for m in ms) + "   slope (expected)")
        for kind, hyper in (("identity", {}), ("taylor", {"d": 2})):
            e = make_expansion(kind, **hyper)
            times = []
            for m in ms:
                X = make_rng(0).normal(size=(200, m))
                e.forward(X)  # warm
                t0 = time.perf_counter()
                for _ in range(5):
                    e.forward(X)
                times.append((time.perf_counter() - t0) / 5)
            slope = np.polyfit(np.log(ms), np.log(times), 1)[0]
            print(f"{kind:>10} " + " ".join(f"{t * 1e3:5.2f}ms" for t in times)
                  + f"   {slope:.2f} ({exp_order[kind]:.1f})")
        return 0
    print(f"unknown sweep {sweep!r} (recon-params, expand-time)", file=sys.stderr)
    return 2


def cmd_gen_data(args):
    cat = builtin_functions()
    if args.function not in cat:
        print(f"unknown function id {args.function!r}; known: {sorted(cat)}",
              file=sys.stderr)
        return 2
    fdef = cat[args.function]
    tr, te = gen_function_dataset(fdef, n=args.n, seed=args.seed)
    X = np.concatenate([tr.X, te.X])
    y = np.concatenate([tr.y, te.y])
    export_csv(args.out, X, y)
    print(f"wrote {args.n} samples of {args.function} to {args.out}")
    return 0


def main(argv=None):
    ap = argparse.ArgumentParser(prog="polyfab")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved parameter vector")
    p.add_argument("--config", required=True)
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference sweep over the catalog")
    p.add_argument("--tol", type=float, default=1e-5)
    p.set_defaults(fn=cmd_gradcheck)

    p = sub.add_parser("equiv", help="equivalence harness vs reference models")
    p.add_argument("--target", required=True, choices=["mlp", "kan", "ksvm", "nb"])
    p.set_defaults(fn=cmd_equiv)

    p = sub.add_parser("bench", help="parameter-count and timing sweeps")
    p.add_argument("--sweep", required=True)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("gen-data", help="export a built-in function dataset to CSV")
    p.add_argument("--function", required=True)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_gen_data)

    args = ap.parse_args(argv)
    threads = os.environ.get("POLYFAB_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)
    try:
        return args.fn(args)
    except TrainDivergence as e:
        print(f"training diverged: {e}", file=sys.stderr)
        return 3
    except (ConfigError, PolyfabError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
