#!/usr/bin/env python3
"""Convert Planetoid `ind.<name>.*` pickles into topoconv's text formats.

    python3 scripts/planetoid_to_text.py RAW_DIR cora data/cora

writes graph.txt, features.txt, labels.txt and split.txt. The standard split
is reproduced: the first `len(y)` nodes train, the next 500 validate, the
nodes in `ind.<name>.test.index` test. Test indices absent from the pickles
(CiteSeer's isolated nodes) get zero features and no label.

Requires numpy and scipy (the pickles contain scipy sparse matrices).
"""

import argparse
import pickle
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp


def unpickle(raw: Path, name: str, part: str):
    with open(raw / f"ind.{name}.{part}", "rb") as fh:
        return pickle.load(fh, encoding="latin1")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("raw", type=Path, help="directory holding ind.<name>.* files")
    ap.add_argument("name", help="cora, citeseer or pubmed")
    ap.add_argument("out", type=Path)
    ap.add_argument("--directed", action="store_true", help="keep adjacency lists as arcs (default: undirected)")
    args = ap.parse_args()

    x, y, tx, ty, allx, ally, graph = (unpickle(args.raw, args.name, p) for p in ("x", "y", "tx", "ty", "allx", "ally", "graph"))
    test_index = [int(l) for l in (args.raw / f"ind.{args.name}.test.index").read_text().split()]

    n = max(max(graph.keys()), max(test_index)) + 1
    n_classes = ally.shape[1]
    features = sp.lil_matrix((n, allx.shape[1]))
    labels = np.full(n, -1)

    n_all = allx.shape[0]
    features[:n_all] = allx
    labels[:n_all] = np.where(ally.sum(1) > 0, ally.argmax(1), -1)
    tx, ty = sp.csr_matrix(tx), np.asarray(ty)
    for row, node in enumerate(test_index):
        features[node] = tx[row]
        labels[node] = ty[row].argmax() if ty[row].sum() > 0 else -1
    features = features.tocsr()

    args.out.mkdir(parents=True, exist_ok=True)
    edges = set()
    for src, dsts in graph.items():
        for dst in dsts:
            if src == dst:
                continue
            edges.add((src, dst) if args.directed else (min(src, dst), max(src, dst)))
    with open(args.out / "graph.txt", "w") as fh:
        fh.write(f"#nodes {n} #directed {int(args.directed)}\n")
        fh.writelines(f"{s}\t{d}\n" for s, d in sorted(edges))

    coo = features.tocoo()
    with open(args.out / "features.txt", "w") as fh:
        fh.write(f"#nodes {n} #features {features.shape[1]}\n")
        for r, c, v in sorted(zip(coo.row, coo.col, coo.data)):
            fh.write(f"{r}\t{c}\t{v:g}\n")

    with open(args.out / "labels.txt", "w") as fh:
        fh.write(f"#classes {n_classes}\n")
        fh.writelines(f"{i}\t{c}\n" for i, c in enumerate(labels) if c >= 0)

    n_train = y.shape[0]
    with open(args.out / "split.txt", "w") as fh:
        fh.writelines(f"{i}\ttrain\n" for i in range(n_train))
        fh.writelines(f"{i}\tval\n" for i in range(n_train, n_train + 500))
        fh.writelines(f"{i}\ttest\n" for i in sorted(test_index))

    print(f"{args.name}: {n} nodes, {len(edges)} edges, {features.shape[1]} features, {n_classes} classes", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
