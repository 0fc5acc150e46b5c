"""Dual-encoder contrastive model with a feature generator, and its trainer.

An online graph encoder sees one augmented view and a target encoder (an
exponential moving average of the online weights, never optimized directly)
sees another. A node-level predictor maps online codes toward target codes
(the contrastive term), and a generator decodes the concatenated codes back
into attributes (the reconstruction term).
"""
from __future__ import annotations

import dataclasses
import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import engine as en
from .augment import AugmentConfig, augment_view
from .graph import FeatureMatrix, NormalizedAdjacency, Split, normalize
from .ingest import Dataset, apply_mask
from .metrics import recall_at_k
from .precoder import PrecoderConfig, propagate

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "graph-infill-checkpoint/1"
VARIANTS = ("full", "star")
REC_TARGETS = ("all", "observed")


@dataclass(frozen=True)
class TrainConfig:
    lam: float = 1.0
    ema_decay: float = 0.99
    epochs: int = 1000
    lr: float = 1e-3
    aug1: AugmentConfig = AugmentConfig(seed=1)
    aug2: AugmentConfig = AugmentConfig(seed=2)
    seed: int = 0
    symmetrize_fcl: bool = False
    variant: str = "full"
    rec_target: str = "all"
    hidden_dim: int = 128
    generator_hidden: int = 512
    # validation-based selection of the returned weights (full variant only)
    eval_every: int = 10
    patience: int = 50

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if not 0.0 <= self.ema_decay <= 1.0:
            raise ValueError(f"ema_decay must lie in [0, 1], got {self.ema_decay}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.rec_target not in REC_TARGETS:
            raise ValueError(f"rec_target must be one of {REC_TARGETS}, got {self.rec_target!r}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        for key in ("aug1", "aug2"):
            if isinstance(d.get(key), dict):
                d[key] = AugmentConfig(**d[key])
        return cls(**d)


class GaclsModel:
    """Parameter sets of the four networks.

    ``online``/``target``: two graph-convolution layers ``d -> h -> h``, ReLU
    between. ``predictor``: perceptron ``h -> h -> h``. ``generator``:
    perceptron ``2h -> g -> d``.
    """

    def __init__(self, online: en.ParamSet, target: en.ParamSet,
                 predictor: en.ParamSet, generator: en.ParamSet):
        self.online = online
        self.target = target
        self.predictor = predictor
        self.generator = generator

    @classmethod
    def create(cls, in_dim: int, rng: np.random.Generator, hidden_dim: int = 128,
               generator_hidden: int = 512) -> "GaclsModel":
        h, g = hidden_dim, generator_hidden
        enc = {"enc0": en.glorot(rng, in_dim, h), "enc1": en.glorot(rng, h, h)}
        online = en.ParamSet({f"online.{k}": v for k, v in enc.items()})
        target = en.ParamSet({f"target.{k}": v for k, v in enc.items()}, trainable=False)
        predictor = en.ParamSet({
            "pred.w0": en.glorot(rng, h, h), "pred.b0": np.zeros(h),
            "pred.w1": en.glorot(rng, h, h), "pred.b1": np.zeros(h),
        })
        generator = en.ParamSet({
            "gen.w0": en.glorot(rng, 2 * h, g), "gen.b0": np.zeros(g),
            "gen.w1": en.glorot(rng, g, in_dim), "gen.b1": np.zeros(in_dim),
        })
        return cls(online, target, predictor, generator)

    @property
    def param_sets(self) -> dict[str, en.ParamSet]:
        return {"online": self.online, "target": self.target,
                "predictor": self.predictor, "generator": self.generator}

    @property
    def trainable(self) -> list[en.ParamSet]:
        return [self.online, self.predictor, self.generator]

    def num_parameters(self) -> int:
        """Count of gradient-trained values (the target encoder is excluded)."""
        return sum(ps.num_values() for ps in self.trainable)

    def state(self) -> dict[str, np.ndarray]:
        out = {}
        for ps in self.param_sets.values():
            out.update(ps.arrays())
        return out

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        for ps in self.param_sets.values():
            ps.load({n: state[n] for n in ps})


def _values(x):
    if isinstance(x, FeatureMatrix):
        return x.values
    return x


def encode(model: GaclsModel, features, adj: NormalizedAdjacency, which: str = "online") -> en.Tensor:
    """Node codes from the online or target encoder.

    Target forwards are never recorded, so no gradient reaches the target.
    """
    if which not in ("online", "target"):
        raise ValueError(f"which must be 'online' or 'target', got {which!r}")
    ps = model.online if which == "online" else model.target
    x = _values(features)
    if which == "target":
        with en.no_record():
            h = en.gcn_layer(adj, x, ps[f"{which}.enc0"], en.relu)
            h = en.gcn_layer(adj, h, ps[f"{which}.enc1"])
        return en.Tensor(h.data)
    h = en.gcn_layer(adj, x, ps[f"{which}.enc0"], en.relu)
    return en.gcn_layer(adj, h, ps[f"{which}.enc1"])


def _mlp(ps: en.ParamSet, prefix: str, x) -> en.Tensor:
    h = en.relu(en.linear(x, ps[f"{prefix}.w0"], ps[f"{prefix}.b0"]))
    return en.linear(h, ps[f"{prefix}.w1"], ps[f"{prefix}.b1"])


def predict(model: GaclsModel, h) -> en.Tensor:
    return _mlp(model.predictor, "pred", h)


def generate(model: GaclsModel, h) -> en.Tensor:
    return _mlp(model.generator, "gen", h)


def fcl_loss(z1_pred, h2_target) -> en.Tensor:
    """``-(2/N) * sum_i cos(z1_i, h2_i)``; the target side is treated as a constant."""
    target = en.Tensor(en.as_tensor(h2_target).data)
    return en.scale(en.mean(en.cosine_rowwise(z1_pred, target)), -2.0)


def rec_loss(x_hat, x, rows=None) -> en.Tensor:
    """``(1/N) * sum_i ||x_i - x_hat_i||^2`` over ``rows`` (all rows by default)."""
    return en.mse(x_hat, _values(x), rows)


def ema_update(online: en.ParamSet, target: en.ParamSet, tau: float) -> en.ParamSet:
    """``phi <- tau * phi + (1 - tau) * theta`` for matching encoder weights."""
    for name, t in target.items():
        theta = online[name.replace("target.", "online.", 1)].data
        if theta.shape != t.data.shape:
            raise en.ShapeError(f"EMA: {name} has shape {t.data.shape}, online {theta.shape}")
        t.data[...] = tau * t.data + (1.0 - tau) * theta
    return target


def eval_forward(model: GaclsModel, features, adj: NormalizedAdjacency) -> tuple[np.ndarray, np.ndarray]:
    """Un-augmented pass: ``(embedding [H1, H2], reconstruction)`` as arrays."""
    x = _values(features)
    with en.no_record():
        h1 = encode(model, x, adj, "online")
        h2 = encode(model, x, adj, "target")
        h = en.concat_cols(h1, h2)
        x_hat = generate(model, h)
    return h.data, x_hat.data


@dataclass
class TrainResult:
    model: GaclsModel
    imputed: FeatureMatrix
    embedding: np.ndarray
    precoded: FeatureMatrix
    history: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    epochs_run: int = 0
    wall_time_s: float = 0.0

    def __iter__(self):
        # unpacks as (model, imputed, embedding)
        return iter((self.model, self.imputed, self.embedding))


def _step_losses(model, cfg, x_pre, view1, view2, rec_rows):
    (x1, a1), (x2, a2) = view1, view2
    h1 = encode(model, x1, a1, "online")
    h2 = encode(model, x2, a2, "target")
    fcl = fcl_loss(predict(model, h1), h2)
    if cfg.symmetrize_fcl:
        h2_online = encode(model, x2, a2, "online")
        h1_target = encode(model, x1, a1, "target")
        mirrored = fcl_loss(predict(model, h2_online), h1_target)
        fcl = en.scale(en.add(fcl, mirrored), 0.5)
    if cfg.variant == "star":
        return fcl, None, fcl
    x_hat = generate(model, en.concat_cols(h1, h2))
    rec = rec_loss(x_hat, x_pre, rec_rows)
    return en.add(rec, en.scale(fcl, cfg.lam)), rec, fcl


def composite_loss(model: GaclsModel, cfg: TrainConfig, x_pre: np.ndarray,
                   view1, view2, rec_rows=None) -> en.Tensor:
    """Total loss for fixed views ``(features, adjacency)``; used by gradient checks."""
    return _step_losses(model, cfg, x_pre, view1, view2, rec_rows)[0]


def _selection_score(x_hat: np.ndarray, truth: np.ndarray, binary: bool) -> float:
    if binary:
        k = min(10, truth.shape[1])
        r = recall_at_k(x_hat, truth, k)
        return -np.inf if np.isnan(r) else r
    return -float(np.mean((x_hat - truth) ** 2))


def view_generators(cfg: TrainConfig) -> list[np.random.Generator]:
    """One independent stream per view, derived from the run and view seeds."""
    return [np.random.default_rng([cfg.seed, a.seed, v]) for v, a in enumerate((cfg.aug1, cfg.aug2))]


def train_epoch(model: GaclsModel, cfg: TrainConfig, precoded: FeatureMatrix, graph,
                view_rngs, rec_rows=None, epoch: int = 0) -> dict:
    """Augment, forward, backward, one Adam step and one EMA step."""
    views = []
    for aug, vr in zip((cfg.aug1, cfg.aug2), view_rngs):
        fm, g = augment_view(precoded, graph, aug, vr)
        views.append((fm.values, normalize(g)))
    with en.Tape() as tape:
        loss, rec, fcl = _step_losses(model, cfg, precoded.values, views[0], views[1], rec_rows)
    loss_v = loss.item()
    if not np.isfinite(loss_v):
        raise en.NumericalError(f"non-finite loss {loss_v} at epoch {epoch}")
    fcl_v = fcl.item()
    if not -2.0 - 1e-12 <= fcl_v <= 2.0 + 1e-12:
        raise en.NumericalError(f"contrastive loss {fcl_v} outside [-2, 2] at epoch {epoch}")
    en.backward(tape, loss, *model.param_sets.values())
    trainable = model.trainable if cfg.variant == "full" else [model.online, model.predictor]
    for ps in trainable:
        en.adam_step(ps, lr=cfg.lr)
    ema_update(model.online, model.target, cfg.ema_decay)
    return {"epoch": epoch, "loss": loss_v, "fcl": fcl_v,
            "rec": rec.item() if rec is not None else None}


def train(dataset: Dataset, split: Split, cfg: TrainConfig = TrainConfig(),
          precfg: PrecoderConfig = PrecoderConfig()) -> TrainResult:
    """Precode, then train for up to ``cfg.epochs`` epochs.

    For the full variant, every ``eval_every`` epochs the un-augmented
    reconstruction of the validation nodes is scored (Recall@10 for binary
    attributes, negative MSE otherwise); the best weights are restored at the
    end and training stops after ``patience`` epochs without improvement.
    """
    t0 = time.perf_counter()
    graph = dataset.graph
    adj = normalize(graph)
    precoded = propagate(apply_mask(dataset, split), adj, precfg)
    x_pre = precoded.values

    rng = np.random.default_rng(cfg.seed)
    model = GaclsModel.create(dataset.feature_dim, rng, cfg.hidden_dim, cfg.generator_hidden)
    view_rngs = view_generators(cfg)
    rec_rows = None if cfg.rec_target == "all" else split.train_observed

    val = split.missing_val
    select = cfg.variant == "full" and val.size > 0 and cfg.eval_every > 0
    truth_val = dataset.features.values[val] if select else None
    best = (-np.inf, -1, None)
    history = []
    epoch = -1
    for epoch in range(cfg.epochs):
        entry = train_epoch(model, cfg, precoded, graph, view_rngs, rec_rows, epoch)
        if select and (epoch + 1) % cfg.eval_every == 0:
            _, x_hat = eval_forward(model, x_pre, adj)
            score = _selection_score(x_hat[val], truth_val, dataset.binary)
            entry["val"] = score
            if score > best[0]:
                best = (score, epoch, model.state())
            elif epoch - best[1] >= cfg.patience:
                history.append(entry)
                log.info("early stop at epoch %d (best %d)", epoch, best[1])
                break
        history.append(entry)

    if best[2] is not None:
        model.load_state(best[2])
    embedding, x_hat = eval_forward(model, x_pre, adj)
    return TrainResult(
        model=model,
        imputed=FeatureMatrix(x_hat, precoded.observed_mask),
        embedding=embedding,
        precoded=precoded,
        history=history,
        best_epoch=best[1] if best[2] is not None else epoch,
        epochs_run=epoch + 1,
        wall_time_s=time.perf_counter() - t0,
    )


def save_checkpoint(path, model: GaclsModel, cfg: TrainConfig) -> None:
    arrays = model.state()
    meta = {"format": CHECKPOINT_FORMAT, "config": cfg.to_dict(),
            "shapes": {n: list(a.shape) for n, a in arrays.items()}}
    with open(path, "wb") as fh:
        np.savez(fh, __meta__=np.array(json.dumps(meta)), **arrays)


def load_checkpoint(path) -> tuple[GaclsModel, TrainConfig]:
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(str(z["__meta__"]))
        if meta.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"unsupported checkpoint format {meta.get('format')!r}")
        state = {n: z[n] for n in meta["shapes"]}
    cfg = TrainConfig.from_dict(meta["config"])
    in_dim = state["online.enc0"].shape[0]
    model = GaclsModel.create(in_dim, np.random.default_rng(0), cfg.hidden_dim, cfg.generator_hidden)
    model.load_state(state)
    return model, cfg
