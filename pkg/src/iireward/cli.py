"""Single-binary command line: tpm, ii, phi, reward, train, metrics, plotdata.

Configuration comes from an optional flat key=value file plus flags, flags
winning. Every output is deterministic given config + seed; row ordering is
always canonical (sorted by id), independent of --jobs.

Exit codes: 0 ok, 2 unreadable/invalid input, 3 bad configuration,
4 numeric degeneracy.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

from .errors import ConfigError, IIRewardError, InvalidInputError
from .intrinsic import COMBINE_MAX, COMBINE_SUM, intrinsic_info
from .metrics import calibration, read_predictions, voted_accuracy
from .phi import phi_system
from .pipeline import ON_DEGENERATE_RAISE, ON_DEGENERATE_ZERO, score_scope
from .records import read_records
from .reward import KIND_II_PLUS_ACCURACY, REWARD_KINDS, RewardConfig
from .state_space import (
    CONDITION_ATTENTION,
    CONDITION_NONE,
    STATE_CHUNK,
    STATE_TOKEN,
    ReductionConfig,
)
from .tpm import (
    MODE_BATCH,
    MODE_PROMPT,
    MODE_TRAJECTORY,
    TpmPolicy,
    build_tpm,
    group_by_policy,
    load_tpm,
    save_tpm,
)
from .trainer import ExperimentConfig, GrpoConfig, MetricsSeries, run_comparison
from . import pipeline

_CONFIG_KEYS = {
    "input",
    "mode",
    "units",
    "state_size",
    "combine",
    "conditioning",
    "reward",
    "tau",
    "weight",
    "seed",
    "jobs",
    "out",
    "labels",
    "on_degenerate",
    "steps",
    "group_size",
    "learning_rate",
    "clip",
    "temperature",
    "vocab_size",
    "context_order",
    "max_len",
    "embed_dim",
    "eos_id",
    "target",
    "groups_per_step",
}


def parse_config_file(path: str) -> dict[str, str]:
    """Flat key=value lines; '#' starts a comment; unknown keys are errors."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise InvalidInputError(f"cannot read config {path}: {exc}") from exc
    out: dict[str, str] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.rstrip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        out[key] = value
    return out


class _Settings:
    """Flags override config-file values override defaults."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        config_path = getattr(args, "config", None)
        self.file = parse_config_file(config_path) if config_path else {}

    def get(self, key: str, cast, default):
        flag = getattr(self.args, key, None)
        if flag is not None:
            return flag
        if key in self.file:
            text = self.file[key]
            try:
                return cast(text)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"config key {key}={text!r}: {exc}") from exc
        return default


def parse_state_size(text: str) -> tuple[str, int | None]:
    if text == STATE_TOKEN:
        return STATE_TOKEN, None
    if text.startswith(STATE_CHUNK + ":"):
        try:
            k = int(text.split(":", 1)[1])
        except ValueError as exc:
            raise ConfigError(f"bad state size {text!r}") from exc
        return STATE_CHUNK, k
    raise ConfigError(f"state size must be 'token' or 'chunk:K', got {text!r}")


def parse_target(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip() != "")
    except ValueError as exc:
        raise ConfigError(f"bad target {text!r}") from exc


def _reduction_config(s: _Settings) -> ReductionConfig:
    state_size, chunk_k = parse_state_size(s.get("state_size", str, STATE_TOKEN))
    return ReductionConfig(
        n_units=s.get("units", int, 2),
        state_size=state_size,
        chunk_k=chunk_k,
        conditioning=s.get("conditioning", str, CONDITION_ATTENTION),
    )


def _reward_config(s: _Settings) -> RewardConfig:
    return RewardConfig(
        kind=s.get("reward", str, KIND_II_PLUS_ACCURACY),
        combine_rule=s.get("combine", str, COMBINE_SUM),
        tau=s.get("tau", float, 1.0),
        weight=s.get("weight", float, 1.0),
    )


def _require_input(s: _Settings) -> str:
    path = s.get("input", str, None)
    if path is None:
        raise ConfigError("--input is required")
    return path


def _emit(lines: list[str], out_path: str | None) -> None:
    text = "\n".join(lines) + "\n"
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _read_labels(path: str | None) -> dict[str, int]:
    if path is None:
        return {}
    labels: dict[str, int] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            rows = [line.strip() for line in fh if line.strip()]
    except OSError as exc:
        raise InvalidInputError(f"cannot read labels {path}: {exc}") from exc
    for row in rows:
        parts = row.split("\t")
        if len(parts) != 2 or parts[1] not in ("0", "1"):
            raise InvalidInputError(f"{path}: label rows are 'trajectory_id<TAB>0|1', got {row!r}")
        labels[parts[0]] = int(parts[1])
    return labels


def cmd_tpm(args: argparse.Namespace) -> int:
    s = _Settings(args)
    records = read_records(_require_input(s))
    reduction = _reduction_config(s)
    policy = TpmPolicy(mode=s.get("mode", str, MODE_TRAJECTORY))
    out_dir = s.get("out", str, None)
    scopes = sorted(group_by_policy(records, policy), key=lambda sc: sc.scope_id)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    lines = []
    for scope in scopes:
        sequences = pipeline.scope_sequences(records, scope, reduction)
        tpm = build_tpm(list(sequences.values()), reduction.n_units)
        if out_dir is None:
            lines.append(f"# scope {scope.scope_id}")
            lines.append(
                json.dumps(
                    {
                        "n_units": tpm.n_units,
                        "counts": tpm.counts.tolist(),
                        "probs": [[float(p) for p in row] for row in tpm.probs],
                    },
                    indent=1,
                )
            )
        else:
            # trajectory ids may contain separators; keep one flat file per scope
            path = os.path.join(out_dir, f"{scope.scope_id.replace(os.sep, '_')}.json")
            save_tpm(tpm, path)
            lines.append(f"wrote {path}")
    _emit(lines, None)
    return 0


def cmd_ii(args: argparse.Namespace) -> int:
    s = _Settings(args)
    tpm = load_tpm(_require_input(s))
    combine = s.get("combine", str, COMBINE_SUM)
    if combine not in (COMBINE_SUM, COMBINE_MAX):
        raise ConfigError(f"unknown combine rule {combine!r}")
    state = s.get("state", int, None)
    states = range(tpm.n_states) if state is None else [state]
    lines = ["\t".join(("state", "ii_cause", "ii_effect", "best_cause", "best_effect", "combined"))]
    for st in states:
        r = intrinsic_info(tpm, st, combine)
        lines.append(
            "\t".join(
                (
                    str(r.state),
                    repr(r.ii_cause),
                    repr(r.ii_effect),
                    str(r.best_cause),
                    str(r.best_effect),
                    repr(r.combined),
                )
            )
        )
    _emit(lines, s.get("out", str, None))
    return 0


def cmd_phi(args: argparse.Namespace) -> int:
    s = _Settings(args)
    tpm = load_tpm(_require_input(s))
    state = s.get("state", int, None)
    states = range(tpm.n_states) if state is None else [state]
    lines = ["\t".join(("state", "phi_s", "mip", "clamped"))]
    for st in states:
        r = phi_system(tpm, st)
        mip = r.mip.label() if r.mip is not None else "-"
        lines.append("\t".join((str(r.state), repr(r.phi_s), mip, str(int(r.clamped)))))
    _emit(lines, s.get("out", str, None))
    return 0


def cmd_reward(args: argparse.Namespace) -> int:
    s = _Settings(args)
    records = read_records(_require_input(s))
    reduction = _reduction_config(s)
    reward_config = _reward_config(s)
    policy = TpmPolicy(mode=s.get("mode", str, MODE_TRAJECTORY))
    labels = _read_labels(s.get("labels", str, None))
    on_degenerate = s.get("on_degenerate", str, ON_DEGENERATE_RAISE)
    if on_degenerate not in (ON_DEGENERATE_RAISE, ON_DEGENERATE_ZERO):
        raise ConfigError(f"unknown degenerate-scope policy {on_degenerate!r}")
    if reward_config.kind == "entropy_min":
        raise ConfigError("entropy_min rewards are only available in the trainer")
    jobs = s.get("jobs", int, 1)
    if jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {jobs}")
    scopes = group_by_policy(records, policy)

    def work(scope):
        return score_scope(records, scope, reduction, reward_config, labels, on_degenerate)

    if jobs == 1:
        outcomes = [work(scope) for scope in scopes]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(work, scopes))
    breakdowns = sorted(pipeline.flatten_breakdowns(outcomes), key=lambda b: b.trajectory_id)
    lines = [
        "\t".join(
            ("trajectory_id", "kind", "raw", "shaped", "accuracy", "entropy_term", "total", "flags")
        )
    ]
    for b in breakdowns:
        lines.append(
            "\t".join(
                (
                    b.trajectory_id,
                    b.kind,
                    repr(b.raw),
                    repr(b.shaped),
                    repr(b.accuracy),
                    repr(b.entropy_term),
                    repr(b.total),
                    ",".join(b.flags) if b.flags else "-",
                )
            )
        )
    _emit(lines, s.get("out", str, None))
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    s = _Settings(args)
    grpo = GrpoConfig(
        group_size=s.get("group_size", int, 8),
        learning_rate=s.get("learning_rate", float, 0.5),
        steps=s.get("steps", int, 200),
        clip=s.get("clip", float, 0.2),
        temperature=s.get("temperature", float, 1.0),
        seed=s.get("seed", int, 0),
    )
    reduction = ReductionConfig(
        n_units=s.get("units", int, 2),
        conditioning=s.get("conditioning", str, CONDITION_NONE),
    )
    kinds = [k.strip() for k in s.get("reward", str, KIND_II_PLUS_ACCURACY).split(",")]
    for kind in kinds:
        if kind not in REWARD_KINDS:
            raise ConfigError(f"unknown reward kind {kind!r}")
    reward_config = RewardConfig(
        kind=kinds[0],
        combine_rule=s.get("combine", str, COMBINE_SUM),
        tau=s.get("tau", float, 1.0),
        weight=s.get("weight", float, 1.0),
    )
    config = ExperimentConfig(
        reward=reward_config,
        grpo=grpo,
        reduction=reduction,
        vocab_size=s.get("vocab_size", int, 16),
        context_order=s.get("context_order", int, 1),
        max_len=s.get("max_len", int, 32),
        embed_dim=s.get("embed_dim", int, 12),
        eos_id=s.get("eos_id", int, 5),
        target=s.get("target", parse_target, (3, 5)),
        groups_per_step=s.get("groups_per_step", int, 2),
    )
    series = run_comparison(config, kinds)
    out_dir = s.get("out", str, ".")
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "metrics.tsv")
    series.save(path)
    last = {kind: [r for r in series.rows if r.reward_kind == kind][-1] for kind in kinds}
    lines = [f"wrote {path}"]
    for kind in kinds:
        row = last[kind]
        lines.append(
            f"{kind}: final mean_len={row.mean_len:.3f} mean_reward={row.mean_reward:.4f} "
            f"mean_entropy={row.mean_entropy:.4f} mean_accuracy={row.mean_accuracy:.3f}"
        )
    _emit(lines, None)
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    s = _Settings(args)
    records = read_predictions(_require_input(s))
    report = calibration(records)
    lines = [
        f"items\t{len(records)}",
        f"predictions\t{report.total}",
        f"voted_accuracy\t{repr(voted_accuracy(records))}",
        f"ece\t{repr(report.ece)}",
        f"mce\t{repr(report.mce)}",
    ]
    for b in report.bins:
        lines.append(
            "\t".join(
                (
                    "bin",
                    repr(b.lower),
                    repr(b.upper),
                    str(b.count),
                    repr(b.mean_confidence),
                    repr(b.accuracy),
                )
            )
        )
    _emit(lines, s.get("out", str, None))
    return 0


def cmd_plotdata(args: argparse.Namespace) -> int:
    s = _Settings(args)
    series = MetricsSeries.load(_require_input(s))
    triples = []
    for row in series.rows:
        for column, value in (
            ("mean_len", row.mean_len),
            ("mean_reward", row.mean_reward),
            ("mean_entropy", row.mean_entropy),
            ("mean_accuracy", row.mean_accuracy),
        ):
            triples.append((f"{row.reward_kind}.{column}", row.step, value))
    triples.sort(key=lambda t: (t[0], t[1]))
    lines = ["\t".join(("step", "metric", "value"))]
    for metric, step, value in triples:
        lines.append("\t".join((str(step), metric, repr(value))))
    _emit(lines, s.get("out", str, None))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iireward",
        description="Intrinsic-information rewards over token-embedding transition matrices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, flags):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--config", help="flat key=value config file")
        if "input" in flags:
            p.add_argument("--input", help="input file path")
        if "mode" in flags:
            p.add_argument("--mode", choices=[MODE_BATCH, MODE_PROMPT, MODE_TRAJECTORY])
        if "units" in flags:
            p.add_argument("--units", type=int, help="reduced dimensionality (binary units)")
        if "state-size" in flags:
            p.add_argument("--state-size", dest="state_size", help="token or chunk:K")
        if "combine" in flags:
            p.add_argument("--combine", choices=[COMBINE_SUM, COMBINE_MAX])
        if "conditioning" in flags:
            p.add_argument("--conditioning", choices=[CONDITION_ATTENTION, CONDITION_NONE])
        if "reward" in flags:
            p.add_argument("--reward", help="|".join(REWARD_KINDS))
        if "tau" in flags:
            p.add_argument("--tau", type=float, help="reward shaping scale")
        if "weight" in flags:
            p.add_argument("--weight", type=float, help="shaped-term weight")
        if "state" in flags:
            p.add_argument("--state", type=int, help="single state to report (default: all)")
        if "seed" in flags:
            p.add_argument("--seed", type=int)
        if "jobs" in flags:
            p.add_argument("--jobs", type=int, help="parallel scope workers")
        if "labels" in flags:
            p.add_argument("--labels", help="trajectory_id<TAB>0|1 accuracy labels")
        if "on-degenerate" in flags:
            p.add_argument(
                "--on-degenerate",
                dest="on_degenerate",
                choices=[ON_DEGENERATE_RAISE, ON_DEGENERATE_ZERO],
            )
        if "out" in flags:
            p.add_argument("--out", help="output file (directory for tpm/train)")
        if "train" in flags:
            p.add_argument("--steps", type=int)
            p.add_argument("--group-size", dest="group_size", type=int)
            p.add_argument("--learning-rate", dest="learning_rate", type=float)
            p.add_argument("--clip", type=float)
            p.add_argument("--temperature", type=float)
            p.add_argument("--vocab-size", dest="vocab_size", type=int)
            p.add_argument("--context-order", dest="context_order", type=int)
            p.add_argument("--max-len", dest="max_len", type=int)
            p.add_argument("--embed-dim", dest="embed_dim", type=int)
            p.add_argument("--eos-id", dest="eos_id", type=int)
            p.add_argument("--target", type=parse_target, help="comma-separated token ids")
            p.add_argument("--groups-per-step", dest="groups_per_step", type=int)
        return p

    add("tpm", cmd_tpm, "build transition matrices from embedding records",
        ["input", "mode", "units", "state-size", "conditioning", "out"])
    add("ii", cmd_ii, "intrinsic information of states under a saved TPM",
        ["input", "combine", "state", "out"])
    add("phi", cmd_phi, "integrated information of states under a saved TPM (n <= 3)",
        ["input", "state", "out"])
    add("reward", cmd_reward, "score trajectories end to end from embedding records",
        ["input", "mode", "units", "state-size", "conditioning", "combine", "reward", "tau",
         "weight", "labels", "on-degenerate", "jobs", "out"])
    add("train", cmd_train, "run the toy GRPO experiment",
        ["reward", "tau", "weight", "combine", "units", "conditioning", "seed", "out", "train"])
    add("metrics", cmd_metrics, "voting accuracy and calibration from prediction records",
        ["input", "out"])
    add("plotdata", cmd_plotdata, "flatten a metrics series into (step, metric, value) rows",
        ["input", "out"])
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except IIRewardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
