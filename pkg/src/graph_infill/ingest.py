"""Dataset loading from the plain-TSV directory layout, plus seeded
missingness splits and masking.

Directory layout::

    edges.tsv      src<TAB>dst                      (ids: ints or strings)
    features.tsv   node<TAB>v1 ... vd               (feature_mode=dense)
                   node<TAB>col<TAB>val             (feature_mode=sparse;
                   node                              a bare id declares an all-zero row)
    labels.tsv     node<TAB>class                   (optional)
    meta.txt       key=value lines: name, feature_mode, feature_dim, binary

External ids are remapped to dense integers. If every id is an integer the
numeric order is kept, otherwise ids are numbered by first appearance
(features, then labels, then edges).
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .graph import FeatureMatrix, SparseGraph, Split, build_graph

META_NAMES = ("meta.txt", "meta")


class DataError(ValueError):
    """Unreadable or invalid dataset file; carries the path and line number."""

    def __init__(self, path, line: int | None, message: str):
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True, eq=False)
class Dataset:
    graph: SparseGraph
    features: FeatureMatrix
    labels: np.ndarray | None  # -1 marks an unlabeled node
    num_classes: int
    name: str
    binary: bool = False
    external_ids: tuple = ()

    @property
    def num_nodes(self) -> int:
        return self.graph.num_nodes

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class MaskSpec:
    missing_rate: float = 0.6
    seed: int = 0
    val_test_ratio: tuple[int, int] = (1, 5)

    def __post_init__(self):
        if not 0.0 <= self.missing_rate <= 1.0:
            raise ValueError(f"missing_rate must lie in [0, 1], got {self.missing_rate}")
        a, b = self.val_test_ratio
        if a < 0 or b < 0 or a + b == 0:
            raise ValueError(f"invalid val_test_ratio {self.val_test_ratio}")


def _rows(path):
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line.split()


def _read_meta(dir_path) -> dict[str, str]:
    for name in META_NAMES:
        path = os.path.join(dir_path, name)
        if os.path.exists(path):
            break
    else:
        raise DataError(os.path.join(dir_path, META_NAMES[0]), None, "missing meta file")
    meta = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DataError(path, lineno, f"expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            meta[key.strip()] = value.strip()
    for key in ("feature_mode", "feature_dim"):
        if key not in meta:
            raise DataError(path, None, f"meta key {key!r} is required")
    if meta["feature_mode"] not in ("dense", "sparse"):
        raise DataError(path, None, f"feature_mode must be dense or sparse, got {meta['feature_mode']!r}")
    return meta


def _parse_float(path, lineno, text):
    try:
        v = float(text)
    except ValueError:
        raise DataError(path, lineno, f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise DataError(path, lineno, f"non-finite value {text!r}")
    return v


class _IdTable:
    def __init__(self):
        self.order: dict[str, int] = {}

    def add(self, ext: str):
        self.order.setdefault(ext, len(self.order))

    def finalize(self) -> tuple[tuple[str, ...], dict[str, int]]:
        ids = list(self.order)
        try:
            ids.sort(key=int)
        except ValueError:
            pass
        return tuple(ids), {e: i for i, e in enumerate(ids)}


def load_dataset(dir_path, id_map_path=None) -> Dataset:
    """Read a dataset directory; optionally write ``id_map.tsv`` to ``id_map_path``."""
    if not os.path.isdir(dir_path):
        raise DataError(dir_path, None, "dataset directory does not exist")
    meta = _read_meta(dir_path)
    dim = int(meta["feature_dim"])
    dense = meta["feature_mode"] == "dense"
    binary = meta.get("binary", "false").lower() == "true"

    paths = {n: os.path.join(dir_path, f"{n}.tsv") for n in ("features", "edges", "labels")}
    for n in ("features", "edges"):
        if not os.path.exists(paths[n]):
            raise DataError(paths[n], None, "required file is missing")

    table = _IdTable()
    feat_rows = []  # (ext, lineno, payload)
    for lineno, parts in _rows(paths["features"]):
        table.add(parts[0])
        if dense:
            if len(parts) != dim + 1:
                raise DataError(paths["features"], lineno, f"expected {dim} values, got {len(parts) - 1}")
            feat_rows.append((parts[0], lineno, parts[1:]))
        elif len(parts) == 3:
            feat_rows.append((parts[0], lineno, parts[1:]))
        elif len(parts) != 1:
            raise DataError(paths["features"], lineno, f"sparse rows need node, col, val; got {len(parts)} fields")

    label_rows = []
    if os.path.exists(paths["labels"]):
        for lineno, parts in _rows(paths["labels"]):
            if len(parts) != 2:
                raise DataError(paths["labels"], lineno, "expected node<TAB>class")
            table.add(parts[0])
            label_rows.append((parts[0], lineno, parts[1]))

    edge_rows = []
    for lineno, parts in _rows(paths["edges"]):
        if len(parts) != 2:
            raise DataError(paths["edges"], lineno, "expected src<TAB>dst")
        table.add(parts[0])
        table.add(parts[1])
        edge_rows.append(parts)

    ext_ids, index = table.finalize()
    n = len(ext_ids)
    values = np.zeros((n, dim))
    for ext, lineno, payload in feat_rows:
        i = index[ext]
        if dense:
            values[i] = [_parse_float(paths["features"], lineno, t) for t in payload]
        else:
            try:
                col = int(payload[0])
            except ValueError:
                raise DataError(paths["features"], lineno, f"bad column {payload[0]!r}") from None
            if not 0 <= col < dim:
                raise DataError(paths["features"], lineno, f"column {col} outside [0, {dim})")
            values[i, col] = _parse_float(paths["features"], lineno, payload[1])
    if binary and not np.isin(values, (0.0, 1.0)).all():
        raise DataError(paths["features"], None, "binary=true but values outside {0, 1} found")

    labels, num_classes = None, 0
    if label_rows:
        raw = [t for _, _, t in label_rows]
        try:
            codes = [int(t) for t in raw]
            classes = None
        except ValueError:
            classes = {c: k for k, c in enumerate(sorted(set(raw)))}
            codes = [classes[t] for t in raw]
        labels = np.full(n, -1, dtype=np.int64)
        for (ext, lineno, _), c in zip(label_rows, codes):
            if c < 0:
                raise DataError(paths["labels"], lineno, f"negative class id {c}")
            labels[index[ext]] = c
        num_classes = int(meta.get("num_classes", labels.max() + 1))
        if labels.max() >= num_classes:
            raise DataError(paths["labels"], None, f"class id {labels.max()} >= num_classes {num_classes}")

    edges = np.array([[index[a], index[b]] for a, b in edge_rows], dtype=np.int64).reshape(-1, 2)
    graph = build_graph(edges, n)
    ds = Dataset(
        graph=graph,
        features=FeatureMatrix.fully_observed(values),
        labels=labels,
        num_classes=num_classes,
        name=meta.get("name", os.path.basename(os.path.normpath(dir_path))),
        binary=binary,
        external_ids=ext_ids,
    )
    if id_map_path is not None:
        write_id_map(ds, id_map_path)
    return ds


def write_id_map(dataset: Dataset, path) -> None:
    with open(path, "w") as fh:
        for i, ext in enumerate(dataset.external_ids):
            fh.write(f"{ext}\t{i}\n")


def write_dataset(dataset: Dataset, dir_path, feature_mode: str = "dense") -> None:
    """Write ``dataset`` in the layout read by :func:`load_dataset`."""
    os.makedirs(dir_path, exist_ok=True)
    ids = dataset.external_ids or tuple(str(i) for i in range(dataset.num_nodes))
    x = dataset.features.values
    with open(os.path.join(dir_path, "features.tsv"), "w") as fh:
        for i, ext in enumerate(ids):
            if feature_mode == "dense":
                fh.write(ext + "\t" + "\t".join(repr(float(v)) for v in x[i]) + "\n")
            else:
                cols = np.flatnonzero(x[i])
                if cols.size == 0:
                    fh.write(f"{ext}\n")
                for c in cols:
                    fh.write(f"{ext}\t{c}\t{float(x[i, c])!r}\n")
    with open(os.path.join(dir_path, "edges.tsv"), "w") as fh:
        for a, b in dataset.graph.edges():
            fh.write(f"{ids[a]}\t{ids[b]}\n")
    if dataset.labels is not None:
        with open(os.path.join(dir_path, "labels.tsv"), "w") as fh:
            for i, c in enumerate(dataset.labels):
                if c >= 0:
                    fh.write(f"{ids[i]}\t{c}\n")
    with open(os.path.join(dir_path, "meta.txt"), "w") as fh:
        fh.write(f"name={dataset.name}\nfeature_mode={feature_mode}\n")
        fh.write(f"feature_dim={dataset.feature_dim}\nbinary={str(dataset.binary).lower()}\n")
        if dataset.labels is not None:
            fh.write(f"num_classes={dataset.num_classes}\n")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def make_split(dataset: Dataset, spec: MaskSpec) -> Split:
    """Uniform random node partition.

    ``round(missing_rate * N)`` nodes become missing; those are divided
    val:test by ``spec.val_test_ratio``. Deterministic given ``spec.seed``.
    """
    n = dataset.num_nodes
    n_missing = _round_half_up(spec.missing_rate * n)
    a, b = spec.val_test_ratio
    n_val = _round_half_up(n_missing * a / (a + b))
    perm = np.random.default_rng(spec.seed).permutation(n)
    missing = perm[:n_missing]
    return Split(
        train_observed=perm[n_missing:],
        missing_val=missing[:n_val],
        missing_test=missing[n_val:],
        seed=spec.seed,
    )


def apply_mask(dataset: Dataset, split: Split) -> FeatureMatrix:
    """Copy of the features with val and test rows zeroed and marked missing."""
    if split.num_nodes != dataset.num_nodes:
        raise ValueError(f"split covers {split.num_nodes} nodes, dataset has {dataset.num_nodes}")
    mask = split.observed_mask()
    values = np.where(mask[:, None], dataset.features.values, 0.0)
    return FeatureMatrix(values, mask)
