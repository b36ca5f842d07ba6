"""Losses, optimizers, gradient checking, and the seeded training loop."""

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, TrainDivergence
from .tensorops import make_rng


def mse_loss(pred, target):
    """Mean squared error over all elements; returns (loss, grad_pred)."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64).reshape(pred.shape)
    diff = pred - target
    with np.errstate(over="ignore"):
        loss = float(np.mean(diff * diff))
    return loss, 2.0 * diff / diff.size


def softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy_loss(logits, labels):
    """Softmax cross-entropy, mean over the batch; labels are class indices."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels).astype(int).ravel()
    B = logits.shape[0]
    z = logits - logits.max(axis=1, keepdims=True)
    logZ = np.log(np.exp(z).sum(axis=1))
    loss = float(np.mean(logZ - z[np.arange(B), labels]))
    grad = softmax(logits)
    grad[np.arange(B), labels] -= 1.0
    return loss, grad / B


LOSSES = {"mse": mse_loss, "cross_entropy": cross_entropy_loss}


def get_loss(kind):
    try:
        return LOSSES[kind]
    except KeyError:
        raise ConfigError(f"unknown loss {kind!r}; choose from {sorted(LOSSES)}") from None


def accuracy(logits, labels):
    pred = np.asarray(logits).argmax(axis=1)
    return float(np.mean(pred == np.asarray(labels).astype(int).ravel()))


class SGD:
    def __init__(self, lr=1e-2):
        if lr <= 0:
            raise ConfigError("sgd learning rate must be positive")
        self.lr = float(lr)

    def step(self, params, grad):
        return params - self.lr * grad


class Adam:
    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        if lr <= 0:
            raise ConfigError("adam learning rate must be positive")
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self.m = None
        self.v = None

    def step(self, params, grad):
        if self.m is None:
            self.m = np.zeros_like(params)
            self.v = np.zeros_like(params)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        mhat = self.m / (1 - self.beta1 ** self.t)
        vhat = self.v / (1 - self.beta2 ** self.t)
        return params - self.lr * mhat / (np.sqrt(vhat) + self.eps)


def make_optimizer(kind, **hyper):
    kinds = {"sgd": SGD, "adam": Adam}
    try:
        return kinds[kind](**hyper)
    except KeyError:
        raise ConfigError(f"unknown optimizer {kind!r}") from None


def grad_check(model, params, X, y, loss="mse", h=1e-6, tol=1e-5):
    """Compare analytic parameter gradients against central finite differences.

    Returns a dict with the max relative error, the worst parameter index,
    and a pass flag.  Relative error uses max(|analytic|, |numeric|, 1) as
    the denominator.
    """
    loss_fn = get_loss(loss)
    params = np.asarray(params, dtype=np.float64)
    if params.size == 0:
        return {"max_rel_err": 0.0, "worst_index": -1, "analytic": 0.0,
                "numeric": 0.0, "ok": True, "tol": tol}

    def L(p):
        return loss_fn(model.forward(X, p), y)[0]

    out, inputs = model.forward_cached(X, params)
    _, gpred = loss_fn(out, y)
    _, analytic = model.backward(X, params, gpred, inputs=inputs)

    numeric = np.zeros_like(params)
    for i in range(params.size):
        p = params.copy()
        p[i] += h
        up = L(p)
        p[i] -= 2 * h
        down = L(p)
        numeric[i] = (up - down) / (2 * h)

    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1.0)
    rel = np.abs(analytic - numeric) / denom
    worst = int(np.argmax(rel))
    return {
        "max_rel_err": float(rel[worst]),
        "worst_index": worst,
        "analytic": float(analytic[worst]),
        "numeric": float(numeric[worst]),
        "ok": bool(rel[worst] < tol),
        "tol": tol,
    }


@dataclass
class TrainReport:
    """Per-epoch history plus the best-test-epoch snapshot.

    The best epoch is cherry-picked on the test metric over the whole run
    (lowest test loss for regression, highest accuracy for classification).
    """

    seed: int
    param_count: int
    train_loss: list = field(default_factory=list)
    test_loss: list = field(default_factory=list)
    test_metric: list = field(default_factory=list)
    best_epoch: int = -1
    best_test_loss: float = np.inf
    best_test_metric: float = np.inf
    best_params: np.ndarray = None
    wall_time: float = 0.0
    metric_name: str = "mse"


def fit(model, X_train, y_train, X_test, y_test, *, loss="mse",
        optimizer="adam", opt_hyper=None, epochs=2000, batch_size=None,
        seed=0, record_params=True, log_every=0):
    """Train a model and report the cherry-picked best test score.

    batch_size None means full batch.  Deterministic given the seed: both
    parameter initialization and batch shuffling derive from it.
    """
    loss_fn = get_loss(loss)
    classify = loss == "cross_entropy"
    opt = make_optimizer(optimizer, **(opt_hyper or {}))
    rng = make_rng(seed + 1)  # shuffle stream, distinct from init stream
    params = model.init_params(seed)
    report = TrainReport(seed=seed, param_count=model.param_count,
                         metric_name="accuracy" if classify else "mse")
    if classify:
        report.best_test_metric = -np.inf

    X_train = np.asarray(X_train, dtype=np.float64)
    X_test = np.asarray(X_test, dtype=np.float64)
    n_train = X_train.shape[0]
    t0 = time.perf_counter()

    for epoch in range(epochs):
        if batch_size is None or batch_size >= n_train:
            batches = [np.arange(n_train)]
        else:
            order = rng.permutation(n_train)
            batches = [order[i:i + batch_size] for i in range(0, n_train, batch_size)]
        ep_loss = 0.0
        for bi, idx in enumerate(batches):
            Xb, yb = X_train[idx], np.asarray(y_train)[idx]
            out, inputs = model.forward_cached(Xb, params)
            lval, gpred = loss_fn(out, yb)
            if not np.isfinite(lval):
                raise TrainDivergence(
                    f"non-finite training loss at epoch {epoch}, batch {bi}",
                    epoch=epoch, batch=bi)
            _, gp = model.backward(Xb, params, gpred, inputs=inputs)
            params = opt.step(params, gp)
            ep_loss += lval * len(idx)
        report.train_loss.append(ep_loss / n_train)

        test_out = model.forward(X_test, params)
        test_l, _ = loss_fn(test_out, y_test)
        metric = accuracy(test_out, y_test) if classify else test_l
        report.test_loss.append(test_l)
        report.test_metric.append(metric)
        better = metric > report.best_test_metric if classify else metric < report.best_test_metric
        if better:
            report.best_epoch = epoch
            report.best_test_metric = metric
            report.best_test_loss = test_l
            if record_params:
                report.best_params = params.copy()
        if log_every and (epoch + 1) % log_every == 0:
            print(f"epoch {epoch + 1}: train {report.train_loss[-1]:.3e} "
                  f"test {test_l:.3e} metric {metric:.3e}")

    report.wall_time = time.perf_counter() - t0
    return report
