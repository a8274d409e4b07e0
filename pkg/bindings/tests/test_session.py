import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from iireward import (
    ConfigError,
    InvalidInputError,
    NumericError,
    ReductionConfig,
    RewardConfig,
    TpmPolicy,
    read_records,
)
from iireward.cli import main as cli_main
from iireward_bindings import RewardSession, exit_code_for

DATA = os.path.join(os.path.dirname(__file__), os.pardir, os.pardir, "tests", "data")
PAIRS = os.path.join(DATA, "pairs.jsonl")
PAIRS_LABELS = os.path.join(DATA, "pairs_labels.tsv")
ALTERNATING = os.path.join(DATA, "alternating.jsonl")


def grouped_arrays(path):
    """fixture file -> {prompt_id: (prompt matrix, [trajectory matrices], [tids])}"""
    records = read_records(path)
    out = {}
    for pid, tid in records.trajectories():
        prompt, group, tids = out.setdefault(pid, (records.prompt_vectors(pid), [], []))
        group.append(records.output_vectors(tid))
        tids.append(tid)
    return out


def cli_rows(capsys, argv):
    code = cli_main(argv)
    assert code == 0
    out = capsys.readouterr().out
    rows = {}
    for line in out.strip().split("\n")[1:]:
        cols = line.split("\t")
        rows[cols[0]] = {
            "raw": float(cols[2]),
            "shaped": float(cols[3]),
            "accuracy": float(cols[4]),
            "total": float(cols[6]),
        }
    return rows


class TestCrossComponentEquivalence:
    @pytest.mark.parametrize("mode", ["trajectory", "prompt"])
    def test_fixture_group_matches_cli(self, capsys, mode):
        labels = {"p1/t1": 1, "p1/t2": 0, "p2/t1": 0, "p2/t2": 1}
        table = cli_rows(
            capsys,
            ["reward", "--input", PAIRS, "--mode", mode, "--labels", PAIRS_LABELS,
             "--reward", "ii_plus_accuracy"],
        )
        session = RewardSession(
            reduction=ReductionConfig(n_units=2),
            policy=TpmPolicy(mode=mode),
            reward=RewardConfig(kind="ii_plus_accuracy"),
        )
        for pid, (prompt, group, tids) in grouped_arrays(PAIRS).items():
            breakdowns = session.reward(prompt, group, accuracies=[labels[t] for t in tids])
            assert len(breakdowns) == len(group)
            for tid, b in zip(tids, breakdowns):
                want = table[tid]
                assert abs(b.raw - want["raw"]) < 1e-12
                assert abs(b.shaped - want["shaped"]) < 1e-12
                assert abs(b.total - want["total"]) < 1e-12
                assert b.accuracy == want["accuracy"]

    def test_alternating_fixture_matches_cli(self, capsys):
        table = cli_rows(
            capsys,
            ["reward", "--input", ALTERNATING, "--units", "1", "--reward", "ii"],
        )
        session = RewardSession(
            reduction=ReductionConfig(n_units=1),
            policy=TpmPolicy(mode="trajectory"),
            reward=RewardConfig(kind="ii"),
        )
        (prompt, group, _) = grouped_arrays(ALTERNATING)["p1"]
        [b] = session.reward(prompt, group)
        want = table["p1/t1"]
        assert abs(b.raw - want["raw"]) < 1e-12
        assert abs(b.total - want["total"]) < 1e-12


class TestSessionBehavior:
    def test_uniform_inducing_input_scores_zero(self):
        session = RewardSession(
            reduction=ReductionConfig(n_units=1),
            reward=RewardConfig(kind="ii"),
        )
        prompt = np.zeros((1, 1))
        tokens = np.array([[0.0], [0.0], [1.0], [1.0], [0.0], [0.0], [1.0], [1.0], [0.0]])
        breakdowns = session.reward(prompt, [tokens, tokens])
        for b in breakdowns:
            assert b.raw == 0.0
            assert b.shaped == 0.0
            assert b.total == 0.0

    def test_empty_group_returns_empty_list(self):
        session = RewardSession()
        assert session.reward(np.zeros((2, 3)), []) == []

    def test_breakdowns_align_with_group_order(self):
        rng = np.random.default_rng(5)
        session = RewardSession(reduction=ReductionConfig(n_units=2))
        prompt = rng.standard_normal((2, 4))
        group = [rng.standard_normal((6 + i % 3, 4)) for i in range(11)]
        breakdowns = session.reward(prompt, group)
        assert [b.trajectory_id for b in breakdowns] == sorted(
            b.trajectory_id for b in breakdowns
        )
        assert len(breakdowns) == 11

    def test_accuracy_labels_align(self):
        rng = np.random.default_rng(8)
        session = RewardSession(reward=RewardConfig(kind="ii_plus_accuracy"))
        prompt = rng.standard_normal((2, 4))
        group = [rng.standard_normal((6, 4)) for _ in range(3)]
        breakdowns = session.reward(prompt, group, accuracies=[1, 0, 1])
        assert [b.accuracy for b in breakdowns] == [1.0, 0.0, 1.0]

    def test_configuration_is_frozen(self):
        session = RewardSession()
        with pytest.raises(AttributeError):
            session.reduction = ReductionConfig(n_units=3)
        with pytest.raises(AttributeError):
            session.reward_config = RewardConfig(kind="phi")

    def test_concurrent_calls_match_serial(self):
        rng = np.random.default_rng(3)
        session = RewardSession(reduction=ReductionConfig(n_units=2))
        calls = [
            (rng.standard_normal((2, 5)), [rng.standard_normal((7, 5)) for _ in range(3)])
            for _ in range(8)
        ]
        serial = [session.reward(p, g) for p, g in calls]
        with ThreadPoolExecutor(max_workers=4) as pool:
            threaded = list(pool.map(lambda c: session.reward(*c), calls))
        for a_group, b_group in zip(serial, threaded):
            for a, b in zip(a_group, b_group):
                assert a.raw == b.raw and a.total == b.total


class TestErrorMapping:
    def test_dimension_mismatch_maps_to_input_error(self):
        session = RewardSession()
        with pytest.raises(InvalidInputError) as exc:
            session.reward(np.zeros((2, 3)), [np.zeros((4, 5))])
        assert exit_code_for(exc.value) == 2

    def test_ragged_accuracies_map_to_input_error(self):
        session = RewardSession()
        rng = np.random.default_rng(0)
        with pytest.raises(InvalidInputError) as exc:
            session.reward(
                rng.standard_normal((2, 3)),
                [rng.standard_normal((5, 3))],
                accuracies=[1, 0],
            )
        assert exit_code_for(exc.value) == 2

    def test_one_dim_array_rejected(self):
        session = RewardSession()
        with pytest.raises(InvalidInputError):
            session.reward(np.zeros(3), [np.zeros((4, 3))])

    def test_bad_config_maps_to_config_error(self):
        with pytest.raises(ConfigError) as exc:
            RewardSession(reward=RewardConfig(kind="entropy_min"))
        assert exit_code_for(exc.value) == 3
        with pytest.raises(ConfigError):
            RewardSession(on_degenerate="sometimes")

    def test_degenerate_input_maps_to_numeric_error(self):
        session = RewardSession(reduction=ReductionConfig(n_units=1))
        prompt = np.zeros((1, 2))
        flat = np.ones((6, 2))
        with pytest.raises(NumericError) as exc:
            session.reward(prompt, [flat])
        assert exit_code_for(exc.value) == 4

    def test_zero_policy_flags_instead_of_raising(self):
        session = RewardSession(
            reduction=ReductionConfig(n_units=1), on_degenerate="zero"
        )
        prompt = np.zeros((1, 2))
        with pytest.warns(UserWarning):
            [b] = session.reward(prompt, [np.ones((6, 2))])
        assert b.total == 0.0
        assert "degenerate-scope" in b.flags

    def test_unhandled_exception_maps_to_one(self):
        assert exit_code_for(RuntimeError("boom")) == 1
