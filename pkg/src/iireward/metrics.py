"""Evaluation metrics: majority voting, calibration, response statistics.

Calibration uses 10 fixed-width bins over (0, 1] with right-closed edges;
a confidence of exactly 0 falls into the first bin so every prediction is
counted once. Voting ties break toward the answer seen earliest.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

SELF_CONSISTENCY_TEMPERATURE = 0.7
SELF_CONSISTENCY_SAMPLES = 5
N_CALIBRATION_BINS = 10


@dataclass(frozen=True)
class AnswerSample:
    answer: str
    confidence: float
    correct: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise InvalidInputError(f"confidence must be in [0, 1], got {self.confidence}")
        if self.correct not in (0, 1):
            raise InvalidInputError(f"correct must be 0 or 1, got {self.correct}")


@dataclass(frozen=True)
class PredictionRecord:
    item_id: str
    answers: tuple[AnswerSample, ...]

    def __post_init__(self) -> None:
        if len(self.answers) == 0:
            raise InvalidInputError(f"item {self.item_id}: needs at least one answer")


@dataclass(frozen=True)
class CalibrationBin:
    lower: float
    upper: float
    count: int
    mean_confidence: float
    accuracy: float


@dataclass(frozen=True)
class CalibrationReport:
    ece: float
    mce: float
    bins: tuple[CalibrationBin, ...]
    total: int


def majority_vote(answers: tuple[AnswerSample, ...] | list[AnswerSample]) -> tuple[str, int]:
    """Most frequent answer string; ties go to the earliest-seen answer.
    Correctness is the flag attached to the winning answer's first sample."""
    if len(answers) == 0:
        raise InvalidInputError("majority vote needs at least one answer")
    counts = Counter(a.answer for a in answers)
    best_count = max(counts.values())
    for sample in answers:
        if counts[sample.answer] == best_count:
            return sample.answer, sample.correct
    raise AssertionError("unreachable")


def confidence_bin(confidence: float, n_bins: int = N_CALIBRATION_BINS) -> int:
    """Right-closed bin index over (b/n, (b+1)/n]; 0 maps to the first bin.
    The round guards float noise like 0.30000000000000004 crossing an edge."""
    if confidence <= 0.0:
        return 0
    return min(n_bins - 1, max(0, math.ceil(round(confidence * n_bins, 12)) - 1))


def calibration(
    records: list[PredictionRecord], n_bins: int = N_CALIBRATION_BINS
) -> CalibrationReport:
    """ECE/MCE over every answer sample in the records."""
    if n_bins < 1:
        raise InvalidInputError(f"n_bins must be >= 1, got {n_bins}")
    samples = [a for record in records for a in record.answers]
    if len(samples) == 0:
        raise InvalidInputError("calibration needs at least one prediction")
    counts = np.zeros(n_bins, dtype=np.int64)
    conf_sums = np.zeros(n_bins)
    correct_sums = np.zeros(n_bins)
    for sample in samples:
        b = confidence_bin(sample.confidence, n_bins)
        counts[b] += 1
        conf_sums[b] += sample.confidence
        correct_sums[b] += sample.correct
    total = int(counts.sum())
    bins = []
    ece = 0.0
    mce = 0.0
    for b in range(n_bins):
        lower, upper = b / n_bins, (b + 1) / n_bins
        if counts[b] == 0:
            bins.append(CalibrationBin(lower, upper, 0, 0.0, 0.0))
            continue
        mean_conf = float(conf_sums[b] / counts[b])
        acc = float(correct_sums[b] / counts[b])
        gap = abs(acc - mean_conf)
        ece += counts[b] / total * gap
        mce = max(mce, gap)
        bins.append(CalibrationBin(lower, upper, int(counts[b]), mean_conf, acc))
    return CalibrationReport(ece=float(ece), mce=float(mce), bins=tuple(bins), total=total)


@dataclass(frozen=True)
class ResponseStats:
    mean_length: float
    mean_entropy: float


def response_stats(
    lengths: list[int], token_distributions: list[np.ndarray] | None = None
) -> ResponseStats:
    """Mean token count plus mean per-token entropy (bits) pooled over all
    supplied generating distributions."""
    if len(lengths) == 0:
        raise InvalidInputError("response stats need at least one response")
    if any(n < 0 for n in lengths):
        raise InvalidInputError("lengths must be nonnegative")
    mean_entropy = 0.0
    if token_distributions:
        entropies = []
        for dist in token_distributions:
            p = np.asarray(dist, dtype=float)
            nz = p[p > 0.0]
            entropies.append(float(-(nz * np.log2(nz)).sum()))
        mean_entropy = float(np.mean(entropies))
    return ResponseStats(mean_length=float(np.mean(lengths)), mean_entropy=mean_entropy)


def answer_confidence(token_probabilities: list[float]) -> float:
    """Geometric mean of per-token probabilities: a length-normalized
    sequence confidence in [0, 1]."""
    if len(token_probabilities) == 0:
        raise InvalidInputError("confidence needs at least one token probability")
    if any(not 0.0 <= p <= 1.0 for p in token_probabilities):
        raise InvalidInputError("token probabilities must lie in [0, 1]")
    if any(p == 0.0 for p in token_probabilities):
        return 0.0
    return float(math.exp(np.mean(np.log(token_probabilities))))


def write_predictions(records: list[PredictionRecord], path: str) -> None:
    lines = ["\t".join(("item_id", "answer", "confidence", "correct"))]
    for record in records:
        for sample in record.answers:
            lines.append(
                "\t".join(
                    # int() normalizes bools, which validation admits via True == 1
                    (record.item_id, sample.answer, repr(sample.confidence), str(int(sample.correct)))
                )
            )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_predictions(path: str) -> list[PredictionRecord]:
    """Rows group by item_id in order of first appearance."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [line.rstrip("\n") for line in fh if line.strip()]
    except OSError as exc:
        raise InvalidInputError(f"cannot read predictions from {path}: {exc}") from exc
    if not lines or lines[0].split("\t") != ["item_id", "answer", "confidence", "correct"]:
        raise InvalidInputError(f"{path}: not a prediction file")
    grouped: dict[str, list[AnswerSample]] = {}
    for line in lines[1:]:
        parts = line.split("\t")
        if len(parts) != 4:
            raise InvalidInputError(f"{path}: malformed prediction row {line!r}")
        item_id, answer, conf_text, correct_text = parts
        try:
            sample = AnswerSample(answer, float(conf_text), int(correct_text))
        except ValueError as exc:
            raise InvalidInputError(f"{path}: malformed prediction row {line!r}") from exc
        grouped.setdefault(item_id, []).append(sample)
    return [PredictionRecord(item_id, tuple(samples)) for item_id, samples in grouped.items()]


def voted_accuracy(records: list[PredictionRecord]) -> float:
    """Fraction of items whose majority-voted answer is correct."""
    if len(records) == 0:
        raise InvalidInputError("voted accuracy needs at least one item")
    votes = [majority_vote(record.answers)[1] for record in records]
    return float(np.mean(votes))
