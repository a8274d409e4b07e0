#!/usr/bin/env python3
"""Regenerate the committed CLI fixtures in this directory.

Run from the repository root: python3 tests/data/make_fixtures.py
The train golden is produced by the CLI itself so it tracks the defaults.
"""

import os
import subprocess
import sys

import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, os.path.join(HERE, os.pardir))

from iireward import (
    AnswerSample,
    EmbeddingRecord,
    EmbeddingRecordSet,
    PredictionRecord,
    write_predictions,
    write_records_text,
)


def record(pid, tid, role, index, vec):
    return EmbeddingRecord(pid, tid, role, index, np.asarray(vec, dtype=float))


def alternating():
    # One 1-d trajectory whose reduced states come out [0, 1, 0, 1]: the
    # single zero prompt key makes attention conditioning add a constant,
    # which centering removes again.
    recs = [record("p1", "", "prompt", 0, [0.0])]
    for i, v in enumerate([0.0, 1.0, 0.0, 1.0]):
        recs.append(record("p1", "p1/t1", "output", i, [v]))
    write_records_text(EmbeddingRecordSet(recs), os.path.join(HERE, "alternating.jsonl"))


def pairs():
    # 2 prompts x 2 trajectories, 4-d, sized so trajectory-mode PCA (3 rows
    # minimum at 2 units) stays well-conditioned in every scope.
    rng = np.random.default_rng(20240819)
    recs = []
    for pid in ("p1", "p2"):
        for i in range(3):
            recs.append(record(pid, "", "prompt", i, rng.standard_normal(4)))
        for t in ("t1", "t2"):
            tid = f"{pid}/{t}"
            for i in range(7):
                recs.append(record(pid, tid, "output", i, rng.standard_normal(4)))
    write_records_text(EmbeddingRecordSet(recs), os.path.join(HERE, "pairs.jsonl"))


def labels():
    rows = ["p1/t1\t1", "p1/t2\t0", "p2/t1\t0", "p2/t2\t1"]
    with open(os.path.join(HERE, "pairs_labels.tsv"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(rows) + "\n")


def predictions():
    rng = np.random.default_rng(7)
    records = []
    for i in range(20):
        samples = []
        for _ in range(5):
            ok = rng.random() < 0.6
            conf = float(rng.uniform(0.55, 0.95)) if ok else float(rng.uniform(0.2, 0.7))
            samples.append(AnswerSample("right" if ok else "wrong", round(conf, 6), int(ok)))
        records.append(PredictionRecord(f"item{i:02d}", tuple(samples)))
    write_predictions(records, os.path.join(HERE, "predictions.tsv"))


def tpm_golden():
    subprocess.run(
        [
            sys.executable, "-m", "iireward.cli", "tpm",
            "--input", os.path.join(HERE, "alternating.jsonl"),
            "--units", "1", "--mode", "batch", "--out", HERE,
        ],
        check=True,
    )
    os.replace(os.path.join(HERE, "batch.json"), os.path.join(HERE, "alternating_tpm.json"))


def train_golden():
    out = os.path.join(HERE, "train_golden")
    os.makedirs(out, exist_ok=True)
    subprocess.run(
        [
            sys.executable, "-m", "iireward.cli", "train",
            "--steps", "20", "--seed", "7", "--out", out,
        ],
        check=True,
    )
    os.replace(os.path.join(out, "metrics.tsv"), os.path.join(HERE, "golden_train_metrics.tsv"))
    os.rmdir(out)


if __name__ == "__main__":
    alternating()
    pairs()
    labels()
    predictions()
    tpm_golden()
    train_golden()
    print("fixtures written to", HERE)
