"""Built-in verification: gradient checks, loss oracles, and metric oracles.

``run_selftest`` prints one line per check and returns True iff all pass.
Setting ``MOLSSL_SELFTEST_CORRUPT=<op>`` scales that op's backward pass so
the gradient checks that touch it fail (used to test the harness itself).
"""

from __future__ import annotations

import itertools
import math
import os
import sys
import time
import warnings
from dataclasses import dataclass

import numpy as np

from molssl.chem import parse_smiles
from molssl.metrics import mae, rmse, roc_auc
from molssl.models import (InstructorConfig, InstructorModel, TargetModel, TargetModelConfig, collate,
                           instructor_features)
from molssl.tensorkit import grad_check, inject_gradient_fault, ops, parameter
from molssl.train.losses import instructor_loss, labeled_weights, per_sample_loss, pseudo_weights, target_loss

GRAD_EPSILON = 1e-5
GRAD_TOLERANCE = 1e-4
GRAD_MAX_ENTRIES = 40  # per parameter tensor of the model cases

# small molecules covering rings, branches, heteroatoms, charges and aromaticity
CHECK_SMILES = ("CCO", "c1ccccc1O", "CC(=O)N[C@@H](C)C(=O)O", "C1CC1C#N", "[NH4+].[Cl-]", "OC1=CC=CN=C1")


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


# --------------------------------------------------------------------------- gradient matrix


def _op_cases():
    """(name, closure, params) for every differentiable primitive."""
    rng = np.random.default_rng(7)

    def p(*shape, low=None):
        data = rng.standard_normal(shape)
        if low is not None:
            data = np.abs(data) + low
        return parameter(data)

    w3 = rng.standard_normal((4, 3))
    seg = np.array([0, 0, 1, 2, 2])
    cases = []

    def add(name, fn, params):
        cases.append((name, fn, params))

    a, b = p(4, 3), p(4, 3)
    add("add", lambda: ops.sum(ops.mul(ops.add(a, b), w3)), [a, b])
    a2, b2 = p(4, 3), p(4, 3)
    add("sub", lambda: ops.sum(ops.mul(ops.sub(a2, b2), w3)), [a2, b2])
    a3, b3 = p(4, 3), p(4, 3)
    add("mul", lambda: ops.sum(ops.mul(ops.mul(a3, b3), w3)), [a3, b3])
    x4, v4 = p(4, 3), p(4)
    add("scale_rows", lambda: ops.sum(ops.mul(ops.scale_rows(x4, v4), w3)), [x4, v4])
    m1, m2 = p(4, 5), p(5, 3)
    add("matmul", lambda: ops.sum(ops.mul(ops.matmul(m1, m2), w3)), [m1, m2])
    r = p(4, 3)
    add("relu", lambda: ops.sum(ops.mul(ops.relu(r), w3)), [r])
    s = p(4, 3)
    add("sigmoid", lambda: ops.sum(ops.mul(ops.sigmoid(s), w3)), [s])
    t = p(4, 3)
    add("tanh", lambda: ops.sum(ops.mul(ops.tanh(t), w3)), [t])
    e = p(4, 3)
    add("exp", lambda: ops.sum(ops.mul(ops.exp(e), w3)), [e])
    lg = p(4, 3, low=0.5)
    add("log", lambda: ops.sum(ops.mul(ops.log(lg), w3)), [lg])
    sm = p(4, 3)
    add("sum", lambda: ops.sum(ops.mul(ops.sum(sm, axis=1), w3[:, 0])), [sm])
    rs = p(4, 3)
    add("reshape", lambda: ops.sum(ops.mul(ops.reshape(rs, (3, 4)), w3.reshape(3, 4))), [rs])
    c1, c2 = p(4, 2), p(4, 1)
    add("concat", lambda: ops.sum(ops.mul(ops.concat([c1, c2]), w3)), [c1, c2])
    g = p(3, 3)
    idx = np.array([2, 0, 2, 1])
    add("index_gather", lambda: ops.sum(ops.mul(ops.index_gather(g, idx), w3)), [g])
    ss = p(5, 3)
    add("segment_sum", lambda: ops.sum(ops.mul(ops.segment_sum(ss, seg, 3), w3[:3])), [ss])
    sx = p(5)
    wseg = rng.standard_normal(5)
    add("segment_softmax", lambda: ops.sum(ops.mul(ops.segment_softmax(sx, seg, 3), wseg)), [sx])
    so = p(4, 3)
    add("softmax", lambda: ops.sum(ops.mul(ops.softmax(so), w3)), [so])
    d = p(4, 3)
    add("dropout", lambda: ops.sum(ops.mul(ops.dropout(d, 0.3, np.random.default_rng(3)), w3)), [d])
    z = p(4, 3)
    tgt = rng.random((4, 3))
    add("bce_with_logits", lambda: ops.sum(ops.mul(ops.bce_with_logits(z, tgt), w3)), [z])
    q = p(4, 3)
    tq = rng.standard_normal((4, 3))
    add("squared_error", lambda: ops.sum(ops.mul(ops.squared_error(q, tq), w3)), [q])
    ab = p(4, 3)
    ta = ab.data + np.where(rng.random((4, 3)) < 0.5, -1.0, 1.0) * (0.2 + rng.random((4, 3)))
    add("abs_error", lambda: ops.sum(ops.mul(ops.abs_error(ab, ta), w3)), [ab])
    return cases


def _randomize_output(model, names, seed, outputs=None):
    """Zero-initialized output layers would hide every upstream gradient.

    With ``outputs`` (a callable returning the current outputs) the layer is
    rescaled to unit output spread, which keeps finite differences clear of
    cancellation error.
    """
    rng = np.random.default_rng(seed)
    for name in names:
        t = model.params[name]
        t.data[...] = rng.standard_normal(t.data.shape)
    if outputs is not None:
        spread = float(np.std(outputs()))
        for name in names:
            model.params[name].data[...] /= spread


def model_cases(smiles=CHECK_SMILES):
    """GIN with 2-4 layers (every readout) and the instructor MLP, dropout off."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        batch = collate([parse_smiles(s) for s in smiles])
    rng = np.random.default_rng(11)
    target = rng.standard_normal((batch.n_graphs, 2))
    cases = []
    for n_layers, readout in itertools.product((2, 3, 4), ("mean", "sum", "attention")):
        cfg = TargetModelConfig(n_layers=n_layers, node_hidden=32, edge_hidden=64, head_layers=2,
                                dropout=0.0, readout=readout, n_tasks=2)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            f = TargetModel(cfg, seed=n_layers)
        _randomize_output(f, ("head_out.W", "head_out.b"), n_layers,
                          lambda f=f: f.forward(batch, train=False)[1].data)

        def closure(f=f):
            return ops.mse(f.forward(batch, train=False)[1], target)

        cases.append((f"gin-{n_layers}layer-{readout}", closure, f))
    g = InstructorModel(InstructorConfig(embedding_dim=16, n_tasks=2, hidden=16), seed=5)
    _randomize_output(g, ("out.W", "out.b"), 5)
    feats = instructor_features(rng.standard_normal((7, 16)), rng.standard_normal((7, 2)),
                                rng.random((7, 2)))
    c = np.array([1, 1, 0, 0, 0, 1, 0], dtype=np.float64)
    mask = np.ones((7, 2))
    cases.append(("instructor-mlp", lambda: ops.mul(instructor_loss(g.logits(feats), c, mask), 1 / 14), g))
    return cases


def check_gradients(epsilon=GRAD_EPSILON, tolerance=GRAD_TOLERANCE,
                    max_entries=GRAD_MAX_ENTRIES) -> list[CheckResult]:
    out = []
    for name, closure, params in _op_cases():
        rep = grad_check(closure, params, epsilon=epsilon, tolerance=tolerance)
        out.append(CheckResult(f"grad:{name}", rep.passed, f"max rel err {rep.worst:.2e}"))
    for name, closure, model in model_cases():
        names, params = zip(*model.named_parameters())
        rep = grad_check(closure, params, epsilon=epsilon, tolerance=tolerance, names=names,
                         max_entries=max_entries)
        detail = f"max rel err {rep.worst:.2e} over {rep.n_checked} entries"
        if rep.failures:
            detail += " in " + ", ".join(rep.failures[:3])
        out.append(CheckResult(f"grad:{name}", rep.passed, detail))
    return out


# --------------------------------------------------------------------------- loss oracles


def _scalar_target_loss(h_lab, m_lab, p_lab, h_pse, m_pse, p_pse, alpha, lam):
    total = 0.0
    for i in range(h_lab.shape[0]):
        for t in range(h_lab.shape[1]):
            if m_lab[i, t]:
                w = 1.0 + lam * p_lab[i, t] if lam > 0 else 1.0
                total += w * h_lab[i, t]
    for j in range(h_pse.shape[0]):
        for t in range(h_pse.shape[1]):
            if m_pse[j, t]:
                total += alpha * (2.0 * p_pse[j, t] - 1.0) * h_pse[j, t]
    return total


def _scalar_instructor_loss(p, c, mask):
    total = 0.0
    for i in range(p.shape[0]):
        for t in range(p.shape[1]):
            if mask[i, t]:
                total -= math.log(p[i, t]) if c[i] == 1 else math.log(1.0 - p[i, t])
    return total


def check_loss_oracles(n_batches: int = 20, seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    worst_f = worst_g = 0.0
    for _ in range(n_batches):
        n_lab, n_pse, n_t = rng.integers(1, 9), rng.integers(1, 9), rng.integers(1, 4)
        alpha, lam = rng.uniform(0, 1), float(rng.choice([0.0, rng.uniform(0, 2)]))
        pred_l = rng.standard_normal((n_lab, n_t))
        y_l = rng.standard_normal((n_lab, n_t))
        y_l[rng.random((n_lab, n_t)) < 0.2] = np.nan
        pred_p = rng.standard_normal((n_pse, n_t))
        y_p = rng.standard_normal((n_pse, n_t))
        p_lab, p_pse = rng.random((n_lab, n_t)), rng.random((n_pse, n_t))
        h_l, m_l = per_sample_loss(ops.as_tensor(pred_l), y_l, "mse")
        h_p, m_p = per_sample_loss(ops.as_tensor(pred_p), y_p, "mse")
        batched = target_loss(h_l, m_l, h_p, m_p, pseudo_weights(p_pse, alpha),
                              labeled_weights(p_lab, h_l.shape, lam)).item()
        ref = _scalar_target_loss((pred_l - np.nan_to_num(y_l)) ** 2, ~np.isnan(y_l), p_lab,
                                  (pred_p - y_p) ** 2, np.ones_like(y_p, bool), p_pse, alpha, lam)
        worst_f = max(worst_f, abs(batched - ref))
        logits = rng.standard_normal((n_lab + n_pse, n_t)) * 2
        c = np.concatenate([np.ones(n_lab), np.zeros(n_pse)])
        mask = (rng.random(logits.shape) < 0.85).astype(np.float64)
        batched_g = instructor_loss(ops.as_tensor(logits), c, mask).item()
        ref_g = _scalar_instructor_loss(1.0 / (1.0 + np.exp(-logits)), c, mask)
        worst_g = max(worst_g, abs(batched_g - ref_g))
    return [CheckResult("loss:target", worst_f < 1e-10, f"max abs err {worst_f:.1e}"),
            CheckResult("loss:instructor", worst_g < 1e-10, f"max abs err {worst_g:.1e}")]


# --------------------------------------------------------------------------- metric oracles


def _pair_count_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    wins = sum(1.0 if a > b else 0.5 if a == b else 0.0 for a in pos for b in neg)
    return wins / (len(pos) * len(neg))


def check_metric_oracles(n_instances: int = 50, seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    mismatches = 0
    for _ in range(n_instances):
        n = int(rng.integers(2, 40))
        labels = rng.integers(0, 2, n)
        labels[0], labels[1] = 0, 1
        scores = np.round(rng.random(n), 1)  # coarse grid forces ties
        if roc_auc(scores, labels) != _pair_count_auc(scores, labels):
            mismatches += 1
    hand = (abs(rmse([0.0, 0.0], [5.0, 0.0]) - math.sqrt(12.5)) < 1e-15
            and mae([1.0, 2.0, 3.0], [2.0, 2.0, 5.0]) == 1.0)
    return [CheckResult("metric:roc_auc", mismatches == 0, f"{mismatches}/{n_instances} mismatches"),
            CheckResult("metric:rmse_mae", hand, "hand cases")]


# --------------------------------------------------------------------------- driver


def run_checks(corrupt: str | None = None) -> list[CheckResult]:
    if corrupt:
        with inject_gradient_fault(corrupt):
            return check_gradients() + check_loss_oracles() + check_metric_oracles()
    return check_gradients() + check_loss_oracles() + check_metric_oracles()


def run_selftest(out=None, corrupt: str | None = None) -> bool:
    out = out or sys.stdout
    corrupt = corrupt if corrupt is not None else os.environ.get("MOLSSL_SELFTEST_CORRUPT") or None
    start = time.perf_counter()
    results = run_checks(corrupt)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.detail}", file=out)
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed in "
          f"{time.perf_counter() - start:.1f}s", file=out)
    if failed:
        print("failing: " + ", ".join(failed), file=out)
    return not failed
