"""Fast internal consistency checks: gradients, metric oracles, precoder
fixed point, EMA and stop-gradient. Used by ``graph-infill selfcheck``."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import engine as en
from .engine.gradcheck import check_gradients
from .gacls import GaclsModel, TrainConfig, composite_loss, ema_update, encode, fcl_loss, predict
from .graph import FeatureMatrix, build_graph, normalize
from .metrics import ndcg_at_k, recall_at_k
from .precoder import PrecoderConfig, harmonic_oracle, propagate

GRAD_TOL = 1e-4


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


# -- gradients ----------------------------------------------------------------

def _primitive_cases(rng):
    """``(name, loss_fn, params)`` for every differentiable primitive and layer."""
    def t(*shape):
        return en.Tensor(rng.normal(size=shape), requires_grad=True)

    g = build_graph([(0, 1), (1, 2), (2, 3), (0, 3), (1, 3)], 5)
    adj = normalize(g)
    adj_loops = normalize(g, self_loops=True)
    cases = []

    def add_case(name, fn, *ps):
        cases.append((name, fn, {f"{name}[{i}]": p for i, p in enumerate(ps)}))

    proj = rng.normal(size=(5, 3))  # regression target, so every output entry matters
    a, b = t(5, 4), t(4, 3)
    add_case("matmul", lambda: en.mse(en.matmul(a, b), proj), a, b)
    x = t(5, 3)
    add_case("spmm", lambda: en.mse(en.spmm(adj, x), proj), x)
    x2 = t(5, 3)
    add_case("spmm_self_loops", lambda: en.mse(en.spmm(adj_loops, x2), proj), x2)
    p, q = t(5, 3), t(3)
    add_case("add", lambda: en.mse(en.add(p, q), proj), p, q)
    s = t(5, 3)
    add_case("scale", lambda: en.mse(en.scale(s, -1.7), proj), s)
    r = t(5, 3)
    add_case("relu", lambda: en.mse(en.relu(r), proj), r)
    dr = t(5, 3)
    drop_rng_seed = int(rng.integers(1 << 30))
    add_case("dropout", lambda: en.mse(en.dropout(dr, 0.3, np.random.default_rng(drop_rng_seed)), proj), dr)
    n = t(5, 3)
    add_case("row_l2_normalize", lambda: en.mse(en.row_l2_normalize(n), proj), n)
    c1, c2 = t(5, 3), t(5, 3)
    add_case("cosine_rowwise", lambda: en.mean(en.cosine_rowwise(c1, c2)), c1, c2)
    k1, k2 = t(5, 2), t(5, 1)
    add_case("concat_cols", lambda: en.mse(en.concat_cols(k1, k2), proj), k1, k2)
    tr = t(5, 3)
    add_case("take_rows", lambda: en.mse(en.take_rows(tr, [0, 2, 2, 4]), proj[:4]), tr)
    m1, m2 = t(5, 3), t(5, 3)
    add_case("mse", lambda: en.mse(m1, m2), m1, m2)
    m3 = t(5, 3)
    add_case("mse_rows", lambda: en.mse(m3, proj, rows=[1, 3]), m3)
    lg = t(5, 3)
    labels = rng.integers(0, 3, size=5)
    add_case("softmax_cross_entropy", lambda: en.softmax_cross_entropy(lg, labels), lg)
    mx = t(5, 3)
    add_case("mean", lambda: en.mean(en.relu(mx)), mx)
    gx, gw = t(5, 4), t(4, 3)
    add_case("gcn_layer", lambda: en.mse(en.gcn_layer(adj, gx, gw, en.relu), proj), gx, gw)
    gx2, gw2 = t(5, 3), t(3, 4)
    wide = rng.normal(size=(5, 4))
    add_case("gcn_layer_widening", lambda: en.mse(en.gcn_layer(adj, gx2, gw2), wide), gx2, gw2)
    cw = t(4, 3)
    const = rng.normal(size=(5, 4))
    const[const < 0.3] = 0.0
    add_case("const_matmul", lambda: en.mse(en.const_matmul(sp.csr_matrix(const), cw), proj), cw)
    lx, lw, lb = t(5, 4), t(4, 3), t(3)
    add_case("linear", lambda: en.mse(en.linear(lx, lw, lb), proj), lx, lw, lb)
    return cases


def primitive_gradient_errors(seed: int = 0) -> dict[str, float]:
    rng = np.random.default_rng(seed)
    errors = {}
    for _name, fn, params in _primitive_cases(rng):
        errors.update(check_gradients(fn, params))
    return errors


def toy_instance(num_nodes: int = 5, dim: int = 6, seed: int = 0):
    """A small connected graph with features and two fixed augmented views."""
    rng = np.random.default_rng(seed)
    ring = [(i, (i + 1) % num_nodes) for i in range(num_nodes)]
    graph = build_graph(ring + [(0, 2)], num_nodes)
    x = rng.normal(size=(num_nodes, dim))
    keep = np.ones(dim)
    keep[0] = 0.0
    view1 = (x * keep, normalize(build_graph(ring[1:] + [(0, 2)], num_nodes)))
    view2 = (x, normalize(build_graph(ring, num_nodes)))
    return graph, x, view1, view2


def composite_gradient_errors(hidden: int = 4, generator_hidden: int = 6, seed: int = 0,
                              max_entries: int | None = None, cfg: TrainConfig | None = None) -> dict[str, float]:
    """Tape vs finite-difference error for every trainable tensor of the full loss."""
    graph, x, view1, view2 = toy_instance(seed=seed)
    cfg = cfg or TrainConfig(hidden_dim=hidden, generator_hidden=generator_hidden)
    model = GaclsModel.create(x.shape[1], np.random.default_rng(seed + 1), cfg.hidden_dim, cfg.generator_hidden)
    # a distinct target encoder, so the stop-gradient path is exercised
    jitter = np.random.default_rng(seed + 2)
    for tns in model.target.params.values():
        tns.data[...] += 0.1 * jitter.normal(size=tns.shape)
    params = {}
    for ps in model.trainable:
        params.update(ps.params)
    return check_gradients(lambda: composite_loss(model, cfg, x, view1, view2), params,
                           max_entries=max_entries, rng=np.random.default_rng(seed))


# -- metric oracles -----------------------------------------------------------

def brute_force_metrics(scores: np.ndarray, truth: np.ndarray, k: int) -> tuple[float, float]:
    """Recall@k and NDCG@k by explicit per-row sorting with (score desc, column asc)."""
    recalls, ndcgs = [], []
    for s_row, t_row in zip(scores.tolist(), truth.tolist()):
        true = {j for j, v in enumerate(t_row) if v}
        if not true:
            continue
        order = sorted(range(len(s_row)), key=lambda j: (-s_row[j], j))[:k]
        hits = [1.0 if j in true else 0.0 for j in order]
        recalls.append(sum(hits) / len(true))
        dcg = sum(h / np.log2(r + 2) for r, h in enumerate(hits))
        idcg = sum(1.0 / np.log2(r + 2) for r in range(min(k, len(true))))
        ndcgs.append(dcg / idcg)
    return float(np.mean(recalls)), float(np.mean(ndcgs))


def metric_oracle_mismatches(trials: int = 20, seed: int = 0, rows: int = 8, cols: int = 12) -> list[str]:
    rng = np.random.default_rng(seed)
    bad = []
    for trial in range(trials):
        # coarse scores so ties actually occur
        scores = rng.integers(0, 5, size=(rows, cols)).astype(float)
        truth = (rng.random((rows, cols)) < 0.3).astype(float)
        truth[0] = 0.0
        for k in range(1, cols + 1):
            want = brute_force_metrics(scores, truth, k)
            got = (recall_at_k(scores, truth, k), ndcg_at_k(scores, truth, k))
            if abs(got[0] - want[0]) > 1e-12 or abs(got[1] - want[1]) > 1e-12:
                bad.append(f"trial {trial} k={k}: got {got}, brute force {want}")
    return bad


# -- precoder, EMA --------------------------------------------------------------

def precoder_oracle_error(graphs: int = 5, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(graphs):
        n = int(rng.integers(10, 40))
        tree = [(i, int(rng.integers(0, i))) for i in range(1, n)]
        extra = rng.integers(0, n, size=(n, 2))
        g = build_graph(np.concatenate([tree, extra]), n)
        adj = normalize(g)
        mask = rng.random(n) >= 0.6
        mask[0] = True
        fm = FeatureMatrix(rng.normal(size=(n, 3)), mask)
        got = propagate(fm, adj, PrecoderConfig(iterations=500)).values
        want = harmonic_oracle(fm, adj).values
        worst = max(worst, float(np.abs(got - want).max()))
    return worst


def ema_errors() -> list[str]:
    bad = []
    rng = np.random.default_rng(0)
    model = GaclsModel.create(3, rng, 4, 5)
    theta = {n: t.data.copy() for n, t in model.online.items()}
    for tau in (1.0, 0.0, 0.5, 0.99):
        phi = {n: t.data.copy() for n, t in model.target.items()}
        ema_update(model.online, model.target, tau)
        for n, t in model.target.items():
            want = tau * phi[n] + (1.0 - tau) * theta[n.replace("target.", "online.")]
            if not np.array_equal(t.data, want):
                bad.append(f"EMA tau={tau}: {n} off by {np.abs(t.data - want).max()}")
        for n in model.target:
            model.target[n].data[...] = rng.normal(size=model.target[n].shape)

    graph, x, view1, view2 = toy_instance()
    cfg = TrainConfig(hidden_dim=4, generator_hidden=5)
    model = GaclsModel.create(x.shape[1], rng, 4, 5)
    with en.Tape() as tape:
        loss = composite_loss(model, cfg, x, view1, view2)
    grads = en.backward(tape, loss, *model.param_sets.values())
    for n in model.target:
        if np.any(grads[n] != 0.0):
            bad.append(f"target parameter {n} received a gradient")
    h = encode(model, x, view2[1], "target")
    if not -2.0 <= fcl_loss(predict(model, encode(model, x, view1[1])), h).item() <= 2.0:
        bad.append("contrastive loss outside [-2, 2]")
    return bad


# -- driver -------------------------------------------------------------------

def run_selfcheck() -> list[CheckResult]:
    results = []

    def record(name, fn):
        t0 = time.perf_counter()
        try:
            passed, detail = fn()
        except Exception as exc:  # a crash is a failed check, not a crashed run
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, passed, f"{detail} ({time.perf_counter() - t0:.2f}s)"))

    def grads_primitives():
        errs = primitive_gradient_errors()
        worst = max(errs, key=errs.get)
        failing = [n for n, e in errs.items() if not e <= GRAD_TOL]
        return not failing, f"worst {worst} {errs[worst]:.2e}" + (f"; failing {failing}" if failing else "")

    def grads_composite():
        errs = composite_gradient_errors()
        worst = max(errs, key=errs.get)
        failing = [n for n, e in errs.items() if not e <= GRAD_TOL]
        return not failing, f"worst {worst} {errs[worst]:.2e}" + (f"; failing {failing}" if failing else "")

    def metrics():
        bad = metric_oracle_mismatches()
        return not bad, bad[0] if bad else "recall/ndcg match brute force"

    def precoder():
        err = precoder_oracle_error()
        return err <= 1e-6, f"max abs error {err:.2e}"

    def ema():
        bad = ema_errors()
        return not bad, bad[0] if bad else "exact EMA, no target gradient"

    record("gradients: primitives", grads_primitives)
    record("gradients: composite loss", grads_composite)
    record("metrics: brute-force oracle", metrics)
    record("precoder: harmonic oracle", precoder)
    record("ema and stop-gradient", ema)
    return results


def format_results(results: list[CheckResult]) -> str:
    return "\n".join(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}" for r in results)


__all__ = ["CheckResult", "run_selfcheck", "format_results", "primitive_gradient_errors",
           "composite_gradient_errors", "metric_oracle_mismatches", "brute_force_metrics",
           "precoder_oracle_error", "ema_errors", "toy_instance", "GRAD_TOL"]
