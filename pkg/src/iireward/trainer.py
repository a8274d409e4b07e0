"""Desk-scale GRPO over a tabular autoregressive policy.

The policy is an n-gram table: one logits row per context of the last m
tokens (left-padded with a start symbol), softmaxed at the sampling
temperature. Token embeddings are fixed seeded Gaussian vectors, which is
all the state-space pipeline needs; a separate TPM is built per response,
fit on that response's own token vectors. Rewards feed group-standardized
advantages into a clipped policy-gradient step. All randomness flows from
one generator per run, so a config + seed pins the whole metrics series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, InvalidInputError, NumericError
from .reward import (
    FLAG_DEGENERATE_SCOPE,
    KIND_ACCURACY,
    KIND_ENTROPY_MIN,
    KIND_II_PLUS_ACCURACY,
    RewardBreakdown,
    RewardConfig,
    entropy_reward,
    trajectory_reward,
)
from .state_space import CONDITION_NONE, ReductionConfig, reduce_and_binarize
from .tpm import build_tpm

ADVANTAGE_EPS = 1e-8
MAX_VOCAB = 32
MAX_SEQ_LEN = 64


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max()
    e = np.exp(shifted)
    return e / e.sum()


def token_entropy(dist: np.ndarray) -> float:
    nz = dist[dist > 0.0]
    return float(-(nz * np.log2(nz)).sum())


@dataclass
class ToyPolicy:
    """Tabular autoregressive policy over a synthetic vocabulary.

    Context index packs the last `context_order` tokens base (V + 1); the
    extra symbol V is the start pad, so early tokens condition on it.
    """

    vocab_size: int
    context_order: int
    max_len: int
    eos_id: int
    logits: np.ndarray
    embeddings: np.ndarray

    @property
    def start_id(self) -> int:
        return self.vocab_size

    @property
    def n_contexts(self) -> int:
        return (self.vocab_size + 1) ** self.context_order

    @classmethod
    def create(
        cls,
        vocab_size: int,
        context_order: int = 1,
        max_len: int = 24,
        embed_dim: int = 12,
        eos_id: int = 0,
        seed: int = 0,
    ) -> "ToyPolicy":
        if not 2 <= vocab_size <= MAX_VOCAB:
            raise ConfigError(f"vocab_size must be in [2, {MAX_VOCAB}], got {vocab_size}")
        if context_order not in (1, 2):
            raise ConfigError(f"context_order must be 1 or 2, got {context_order}")
        if not 1 <= max_len <= MAX_SEQ_LEN:
            raise ConfigError(f"max_len must be in [1, {MAX_SEQ_LEN}], got {max_len}")
        if embed_dim < 1:
            raise ConfigError(f"embed_dim must be >= 1, got {embed_dim}")
        if not 0 <= eos_id < vocab_size:
            raise ConfigError(f"eos_id {eos_id} outside vocabulary")
        rng = np.random.default_rng(seed)
        embeddings = rng.standard_normal((vocab_size, embed_dim))
        logits = np.zeros(((vocab_size + 1) ** context_order, vocab_size))
        return cls(vocab_size, context_order, max_len, eos_id, logits, embeddings)

    def context_index(self, history: list[int]) -> int:
        m = self.context_order
        window = [self.start_id] * max(0, m - len(history)) + list(history[-m:])
        idx = 0
        for tok in window:
            idx = idx * (self.vocab_size + 1) + tok
        return idx

    def distribution(self, context: int, temperature: float) -> np.ndarray:
        if not temperature > 0.0:
            raise ConfigError(f"temperature must be positive, got {temperature}")
        return _softmax(self.logits[context] / temperature)


@dataclass
class ToyTrajectory:
    trajectory_id: str
    tokens: list[int]
    contexts: list[int]
    distributions: list[np.ndarray]

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class GrpoConfig:
    group_size: int = 8
    learning_rate: float = 0.5
    steps: int = 200
    clip: float = 0.2
    temperature: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.group_size < 2:
            raise ConfigError(f"group_size must be >= 2, got {self.group_size}")
        if not self.learning_rate > 0.0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.steps < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")
        if not 0.0 < self.clip <= 1.0:
            raise ConfigError(f"clip must be in (0, 1], got {self.clip}")
        if not self.temperature > 0.0:
            raise ConfigError(f"temperature must be positive, got {self.temperature}")


def rollout_group(
    policy: ToyPolicy,
    prompt_id: str,
    group_size: int,
    seed: int,
    temperature: float = 1.0,
) -> list[ToyTrajectory]:
    """Sample a group of trajectories; a seed fixes every draw."""
    if group_size < 2:
        raise InvalidInputError(f"group_size must be >= 2, got {group_size}")
    rng = np.random.default_rng(seed)
    group = []
    for i in range(group_size):
        tokens: list[int] = []
        contexts: list[int] = []
        dists: list[np.ndarray] = []
        while len(tokens) < policy.max_len:
            ctx = policy.context_index(tokens)
            dist = policy.distribution(ctx, temperature)
            tok = int(rng.choice(policy.vocab_size, p=dist))
            contexts.append(ctx)
            dists.append(dist)
            tokens.append(tok)
            if tok == policy.eos_id:
                break
        group.append(ToyTrajectory(f"{prompt_id}/g{i}", tokens, contexts, dists))
    return group


def contains_subsequence(tokens: list[int], target: tuple[int, ...]) -> bool:
    k = len(target)
    return any(tuple(tokens[i : i + k]) == target for i in range(len(tokens) - k + 1))


def score_trajectory(
    policy: ToyPolicy,
    trajectory: ToyTrajectory,
    reward_config: RewardConfig,
    reduction: ReductionConfig,
    target: tuple[int, ...],
) -> RewardBreakdown:
    """Toy reward wiring: synthetic accuracy is presence of the target
    subsequence; information rewards run the full embedding -> state -> TPM
    pipeline on this response alone. Responses too short or too uniform for
    the pipeline score zero information, flagged."""
    accuracy = 1.0 if contains_subsequence(trajectory.tokens, target) else 0.0
    kind = reward_config.kind
    if kind == KIND_ACCURACY:
        return RewardBreakdown(
            trajectory_id=trajectory.trajectory_id,
            kind=kind,
            raw=0.0,
            shaped=0.0,
            accuracy=accuracy,
            entropy_term=0.0,
            total=accuracy,
        )
    if kind == KIND_ENTROPY_MIN:
        term = entropy_reward(trajectory.distributions)
        return RewardBreakdown(
            trajectory_id=trajectory.trajectory_id,
            kind=kind,
            raw=0.0,
            shaped=0.0,
            accuracy=accuracy,
            entropy_term=term,
            total=reward_config.weight * term,
        )
    vectors = policy.embeddings[trajectory.tokens]
    try:
        sequence = reduce_and_binarize(vectors, reduction, vectors, trajectory.trajectory_id)
        tpm = build_tpm([sequence], reduction.n_units)
    except NumericError:
        total = accuracy if kind == KIND_II_PLUS_ACCURACY else 0.0
        return RewardBreakdown(
            trajectory_id=trajectory.trajectory_id,
            kind=kind,
            raw=0.0,
            shaped=0.0,
            accuracy=accuracy,
            entropy_term=0.0,
            total=total,
            flags=(FLAG_DEGENERATE_SCOPE,),
        )
    return trajectory_reward(
        tpm,
        sequence.states,
        reward_config,
        accuracy=accuracy,
        trajectory_id=trajectory.trajectory_id,
    )


def group_advantages(rewards: list[float]) -> np.ndarray:
    r = np.asarray(rewards, dtype=float)
    if r.size < 2:
        raise InvalidInputError("advantages need at least 2 rewards")
    return (r - r.mean()) / (r.std() + ADVANTAGE_EPS)


def _clip_active(ratio: float, advantage: float, clip: float) -> bool:
    # min(rho*A, clip(rho)*A) is flat exactly when the clipped branch wins
    if advantage >= 0.0:
        return ratio <= 1.0 + clip
    return ratio >= 1.0 - clip


def surrogate_objective(
    logits: np.ndarray,
    old_logits: np.ndarray,
    groups: list[list[ToyTrajectory]],
    advantages: list[np.ndarray],
    clip: float,
    temperature: float,
) -> float:
    """Clipped importance-ratio objective, summed over all tokens."""
    total = 0.0
    for group, advs in zip(groups, advantages):
        for trajectory, a in zip(group, advs):
            for ctx, tok in zip(trajectory.contexts, trajectory.tokens):
                p_new = _softmax(logits[ctx] / temperature)[tok]
                p_old = _softmax(old_logits[ctx] / temperature)[tok]
                ratio = p_new / p_old
                clipped = min(max(ratio, 1.0 - clip), 1.0 + clip)
                total += min(ratio * a, clipped * a)
    return float(total)


def surrogate_gradient(
    logits: np.ndarray,
    old_logits: np.ndarray,
    groups: list[list[ToyTrajectory]],
    advantages: list[np.ndarray],
    clip: float,
    temperature: float,
) -> np.ndarray:
    """Analytic gradient of surrogate_objective in the logits table.

    Per token, d ratio / d logits[ctx] = ratio * (onehot - softmax) / T;
    tokens sitting on the flat clipped branch contribute nothing.
    """
    grad = np.zeros_like(logits)
    for group, advs in zip(groups, advantages):
        for trajectory, a in zip(group, advs):
            for ctx, tok in zip(trajectory.contexts, trajectory.tokens):
                row = _softmax(logits[ctx] / temperature)
                p_old = _softmax(old_logits[ctx] / temperature)[tok]
                ratio = float(row[tok] / p_old)
                if not _clip_active(ratio, float(a), clip):
                    continue
                coef = float(a) * ratio / temperature
                grad[ctx] -= coef * row
                grad[ctx, tok] += coef
    return grad


@dataclass(frozen=True)
class StepStats:
    mean_reward: float
    mean_length: float
    mean_entropy: float
    degenerate_groups: int


def grpo_step(
    policy: ToyPolicy,
    groups: list[list[ToyTrajectory]],
    group_rewards: list[list[float]],
    config: GrpoConfig,
) -> StepStats:
    """One ascent step on the clipped surrogate; zero-spread groups yield
    zero advantages and leave the parameters untouched."""
    if len(groups) != len(group_rewards):
        raise InvalidInputError("one reward list per group required")
    for group, rewards in zip(groups, group_rewards):
        if len(group) != len(rewards):
            raise InvalidInputError("each trajectory needs exactly one reward")
    old_logits = policy.logits.copy()
    advantages = [group_advantages(rewards) for rewards in group_rewards]
    degenerate = sum(1 for rewards in group_rewards if float(np.std(rewards)) == 0.0)
    grad = surrogate_gradient(
        policy.logits, old_logits, groups, advantages, config.clip, config.temperature
    )
    policy.logits = policy.logits + config.learning_rate * grad

    all_rewards = [r for rewards in group_rewards for r in rewards]
    trajectories = [t for group in groups for t in group]
    entropies = [token_entropy(d) for t in trajectories for d in t.distributions]
    return StepStats(
        mean_reward=float(np.mean(all_rewards)),
        mean_length=float(np.mean([len(t) for t in trajectories])),
        mean_entropy=float(np.mean(entropies)),
        degenerate_groups=degenerate,
    )


@dataclass(frozen=True)
class ExperimentConfig:
    reward: RewardConfig = field(default_factory=RewardConfig)
    grpo: GrpoConfig = field(default_factory=GrpoConfig)
    reduction: ReductionConfig = field(
        default_factory=lambda: ReductionConfig(n_units=2, conditioning=CONDITION_NONE)
    )
    # Defaults are the tuned synthetic task: the answer token terminates the
    # response (eos is the target's last symbol), so correct completions are
    # short while the untrained mean length scales with the vocabulary.
    vocab_size: int = 16
    context_order: int = 1
    max_len: int = 32
    embed_dim: int = 12
    eos_id: int = 5
    target: tuple[int, ...] = (3, 5)
    groups_per_step: int = 2
    embed_seed: int | None = None

    def __post_init__(self) -> None:
        if len(self.target) == 0:
            raise ConfigError("target subsequence must be nonempty")
        if any(not 0 <= t < self.vocab_size for t in self.target):
            raise ConfigError("target tokens must lie in the vocabulary")
        if self.groups_per_step < 1:
            raise ConfigError("groups_per_step must be >= 1")
        if self.reduction.n_units > self.embed_dim:
            raise ConfigError("n_units cannot exceed embed_dim")


@dataclass(frozen=True)
class MetricsRow:
    step: int
    reward_kind: str
    mean_len: float
    mean_reward: float
    mean_entropy: float
    mean_accuracy: float


SERIES_COLUMNS = ("step", "reward_kind", "mean_len", "mean_reward", "mean_entropy", "mean_accuracy")


@dataclass
class MetricsSeries:
    rows: list[MetricsRow] = field(default_factory=list)

    def extend(self, other: "MetricsSeries") -> None:
        self.rows.extend(other.rows)

    def save(self, path: str) -> None:
        lines = ["\t".join(SERIES_COLUMNS)]
        for r in self.rows:
            lines.append(
                "\t".join(
                    (
                        str(r.step),
                        r.reward_kind,
                        repr(r.mean_len),
                        repr(r.mean_reward),
                        repr(r.mean_entropy),
                        repr(r.mean_accuracy),
                    )
                )
            )
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path: str) -> "MetricsSeries":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                lines = [line.rstrip("\n") for line in fh if line.strip()]
        except OSError as exc:
            raise InvalidInputError(f"cannot read series from {path}: {exc}") from exc
        if not lines or tuple(lines[0].split("\t")) != SERIES_COLUMNS:
            raise InvalidInputError(f"{path}: not a metrics series file")
        rows = []
        for line in lines[1:]:
            parts = line.split("\t")
            if len(parts) != len(SERIES_COLUMNS):
                raise InvalidInputError(f"{path}: malformed series row {line!r}")
            try:
                rows.append(
                    MetricsRow(
                        step=int(parts[0]),
                        reward_kind=parts[1],
                        mean_len=float(parts[2]),
                        mean_reward=float(parts[3]),
                        mean_entropy=float(parts[4]),
                        mean_accuracy=float(parts[5]),
                    )
                )
            except ValueError as exc:
                raise InvalidInputError(f"{path}: malformed series row {line!r}") from exc
        return cls(rows)


@dataclass
class ExperimentResult:
    series: MetricsSeries
    policy: ToyPolicy


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Train one policy under one reward kind; metrics are measured on each
    step's rollouts before the update, so step 0 is the untrained baseline."""
    embed_seed = config.embed_seed if config.embed_seed is not None else config.grpo.seed
    policy = ToyPolicy.create(
        vocab_size=config.vocab_size,
        context_order=config.context_order,
        max_len=config.max_len,
        embed_dim=config.embed_dim,
        eos_id=config.eos_id,
        seed=embed_seed,
    )
    master = np.random.default_rng(config.grpo.seed)
    series = MetricsSeries()
    for step in range(config.grpo.steps):
        groups = []
        group_rewards = []
        accuracies = []
        for g in range(config.groups_per_step):
            seed = int(master.integers(0, 2**63 - 1))
            group = rollout_group(
                policy, f"s{step}p{g}", config.grpo.group_size, seed, config.grpo.temperature
            )
            breakdowns = [
                score_trajectory(policy, t, config.reward, config.reduction, config.target)
                for t in group
            ]
            groups.append(group)
            group_rewards.append([b.total for b in breakdowns])
            accuracies.extend(b.accuracy for b in breakdowns)
        stats = grpo_step(policy, groups, group_rewards, config.grpo)
        series.rows.append(
            MetricsRow(
                step=step,
                reward_kind=config.reward.kind,
                mean_len=stats.mean_length,
                mean_reward=stats.mean_reward,
                mean_entropy=stats.mean_entropy,
                mean_accuracy=float(np.mean(accuracies)),
            )
        )
    return ExperimentResult(series=series, policy=policy)


def run_comparison(base: ExperimentConfig, kinds: list[str]) -> MetricsSeries:
    """Run the same seeded experiment once per reward kind; concatenated
    series share the seed so kinds differ only in the reward."""
    combined = MetricsSeries()
    for kind in kinds:
        cfg = replace(base, reward=replace(base.reward, kind=kind))
        combined.extend(run_experiment(cfg).series)
    return combined


def _spearman(x: list[float], y: list[float]) -> float:
    """Spearman rank correlation, average ranks on ties."""

    def ranks(v: list[float]) -> np.ndarray:
        arr = np.asarray(v, dtype=float)
        order = np.argsort(arr, kind="stable")
        r = np.empty(len(arr))
        i = 0
        while i < len(arr):
            j = i
            while j + 1 < len(arr) and arr[order[j + 1]] == arr[order[i]]:
                j += 1
            r[order[i : j + 1]] = (i + j) / 2.0 + 1.0
            i = j + 1
        return r

    rx, ry = ranks(x), ranks(y)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = math.sqrt(float((rx**2).sum() * (ry**2).sum()))
    if denom == 0.0:
        return 0.0
    return float((rx * ry).sum() / denom)


def entropy_trend(series: MetricsSeries, reward_kind: str) -> float:
    """Spearman correlation between step and mean entropy for one kind."""
    rows = [r for r in series.rows if r.reward_kind == reward_kind]
    if len(rows) < 2:
        raise InvalidInputError("trend needs at least 2 rows")
    return _spearman([float(r.step) for r in rows], [r.mean_entropy for r in rows])
