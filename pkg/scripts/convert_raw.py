"""Convert the public Cora (LINQS) and CiteSeer (Planetoid) dumps into the
plain-TSV dataset layout read by ``graph_infill.ingest.load_dataset``.

The raw files ship inside the ``pgl`` wheel on PyPI, which is the easiest
place to get them without network access to the original hosts::

    pip download --no-deps --only-binary :all: --python-version 3.10 \
        --platform manylinux1_x86_64 pgl==2.2.6 -d /tmp/pgl
    unzip -q /tmp/pgl/pgl-*.whl 'pgl/data/cora/*' 'pgl/data/citeseer/*' -d /tmp/raw
    python scripts/convert_raw.py --cora /tmp/raw/pgl/data/cora \
        --citeseer /tmp/raw/pgl/data/citeseer --out data
"""
import argparse
import os
import pickle

import numpy as np
import scipy.sparse as sp


def _write_sparse(path, ids, rows):
    with open(path, "w") as fh:
        for ext, cols in zip(ids, rows):
            if len(cols) == 0:
                fh.write(f"{ext}\n")
            for c in cols:
                fh.write(f"{ext}\t{c}\t1\n")


def _write_common(out, name, ids, rows, dim, edges, labels):
    os.makedirs(out, exist_ok=True)
    _write_sparse(os.path.join(out, "features.tsv"), ids, rows)
    with open(os.path.join(out, "edges.tsv"), "w") as fh:
        for a, b in edges:
            fh.write(f"{a}\t{b}\n")
    with open(os.path.join(out, "labels.tsv"), "w") as fh:
        for ext, y in labels:
            fh.write(f"{ext}\t{y}\n")
    with open(os.path.join(out, "meta.txt"), "w") as fh:
        fh.write(f"name={name}\nfeature_mode=sparse\nfeature_dim={dim}\nbinary=true\n")


def convert_cora(src, out):
    ids, rows, labels = [], [], []
    classes = {}
    with open(os.path.join(src, "cora.content")) as fh:
        for line in fh:
            parts = line.split()
            ids.append(parts[0])
            vals = np.array(parts[1:-1], dtype=float)
            rows.append(np.flatnonzero(vals).tolist())
            labels.append((parts[0], classes.setdefault(parts[-1], len(classes))))
    dim = len(vals)
    with open(os.path.join(src, "cora.cites")) as fh:
        edges = [tuple(line.split()) for line in fh if line.strip()]
    _write_common(out, "cora", ids, rows, dim, edges, labels)


def _load_pickle(path):
    with open(path, "rb") as fh:
        return pickle.load(fh, encoding="latin1")


def convert_citeseer(src, out):
    def part(n):
        return _load_pickle(os.path.join(src, f"ind.citeseer.{n}"))

    allx, tx = sp.csr_matrix(part("allx")), sp.csr_matrix(part("tx"))
    ally, ty = np.asarray(part("ally")), np.asarray(part("ty"))
    graph = part("graph")
    with open(os.path.join(src, "ind.citeseer.test.index")) as fh:
        test_idx = [int(line) for line in fh]

    # Planetoid convention: row j of tx/ty belongs to node test_idx[j] (file
    # order); 15 indices inside the test range are absent from the file and
    # stay featureless and unlabeled.
    n = max(max(test_idx) + 1, allx.shape[0] + len(test_idx))
    n = max(n, max(graph) + 1)
    dim = allx.shape[1]
    x = sp.lil_matrix((n, dim))
    y = np.full(n, -1, dtype=int)
    x[: allx.shape[0]] = allx
    y[: ally.shape[0]] = ally.argmax(1)
    for row, idx in enumerate(test_idx):
        x[idx] = tx[row]
        y[idx] = ty[row].argmax() if ty[row].any() else -1
    x = x.tocsr()

    ids = [str(i) for i in range(n)]
    rows = [x.indices[x.indptr[i]: x.indptr[i + 1]].tolist() for i in range(n)]
    edges = [(str(a), str(b)) for a, nbrs in graph.items() for b in nbrs]
    labels = [(str(i), int(c)) for i, c in enumerate(y) if c >= 0]
    _write_common(out, "citeseer", ids, rows, dim, edges, labels)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cora")
    ap.add_argument("--citeseer")
    ap.add_argument("--out", default="data")
    args = ap.parse_args()
    if args.cora:
        convert_cora(args.cora, os.path.join(args.out, "cora"))
    if args.citeseer:
        convert_citeseer(args.citeseer, os.path.join(args.out, "citeseer"))


if __name__ == "__main__":
    main()
