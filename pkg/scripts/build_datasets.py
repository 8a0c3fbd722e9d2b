"""Convert the KEEL copies of DIABETES (Pima), GERMAN and SPLICE to LIBSVM text.

The raw ``.dat`` files ship inside the ``keel-ds`` wheel on PyPI.  Each dataset
is encoded numerically and every feature is min-max scaled to [-1, 1], which is
what LIBSVM's ``svm-scale`` does for its ``*_scale`` files.  GERMAN's qualitative
attributes are one-hot encoded; SPLICE drops the 15 sequences with ambiguous
bases and labels exon/intron junctions (EI, IE) +1 against N.

    pip download --no-deps keel-ds -d /tmp/keel
    python scripts/build_datasets.py /tmp/keel/keel_ds-*.whl data/
"""
import argparse
import pathlib
import zipfile

import numpy as np

# German credit: attribute positions that are qualitative (one-hot encoded).
GERMAN_QUALITATIVE = {0, 2, 3, 5, 6, 8, 9, 11, 13, 14, 16, 18, 19}
# splice positions: purines (A, G) -> +1, pyrimidines (C, T) -> -1
NUCLEOTIDES = {"A": 1.0, "G": 1.0, "C": -1.0, "T": -1.0}


def _rows(archive, name):
    text = archive.read(f"keel_ds/data/balanced/raw/{name}.dat").decode()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("@"):
            yield [tok.strip() for tok in line.split(",")]


def diabetes(archive):
    X, y = [], []
    for row in _rows(archive, "pima"):
        X.append([float(v) for v in row[:-1]])
        y.append(1 if row[-1] == "tested_positive" else -1)
    return np.array(X), np.array(y)


def german(archive):
    rows = list(_rows(archive, "german"))
    levels = {j: sorted({r[j] for r in rows}) for j in GERMAN_QUALITATIVE}
    X = []
    for r in rows:
        feats = []
        for j, tok in enumerate(r[:-1]):
            if j in GERMAN_QUALITATIVE:
                feats.extend(1.0 if tok == lev else 0.0 for lev in levels[j])
            else:
                feats.append(float(tok))
        X.append(feats)
    # raw class ids 1 (good) / 2 (bad) are kept; the loader binarizes them
    y = [int(r[-1]) for r in rows]
    return np.array(X), np.array(y)


def splice(archive):
    X, y = [], []
    for row in _rows(archive, "splice"):
        seq = row[:-1]
        if any(c not in NUCLEOTIDES for c in seq):
            continue  # ambiguous bases (D, N, R, S)
        X.append([NUCLEOTIDES[c] for c in seq])
        y.append(-1 if row[-1] == "N" else 1)
    return np.array(X), np.array(y)


def scale(X, lower=-1.0, upper=1.0):
    lo, hi = X.min(axis=0), X.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    out = lower + (upper - lower) * (X - lo) / span
    out[:, hi == lo] = 0.0
    return out


def write_libsvm(path, X, y):
    signed = set(np.unique(y)) <= {-1, 1}
    with open(path, "w") as fh:
        for row, label in zip(X, y):
            toks = [f"{label:+d}" if signed else str(label)]
            toks += [f"{j + 1}:{v:.6g}" for j, v in enumerate(row) if v != 0.0]
            fh.write(" ".join(toks) + "\n")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("wheel", type=pathlib.Path)
    parser.add_argument("outdir", type=pathlib.Path)
    args = parser.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(args.wheel) as archive:
        for name, loader in [("diabetes", diabetes), ("german", german), ("splice", splice)]:
            X, y = loader(archive)
            write_libsvm(args.outdir / f"{name}_scale.libsvm", scale(X), y)
            print(f"{name}: n={X.shape[0]} d={X.shape[1]}")


if __name__ == "__main__":
    main()
