import numpy as np
import pytest

from iireward import (
    Bipartition,
    DimensionalityLimitError,
    InvalidInputError,
    TransitionProbabilityMatrix,
    enumerate_bipartitions,
    partitioned_tpm,
    phi_system,
)
from iireward.phi import sequence_phi_total

from conftest import copy_system_tpm, permutation_tpm, tpm_from_probs, uniform_tpm
from oracles import oracle_phi, random_tpm


def product_tpm(unit_tpms: list[np.ndarray]) -> TransitionProbabilityMatrix:
    """Joint TPM of independent 1-bit units, unit j on bit j."""
    n = len(unit_tpms)
    size = 2**n
    probs = np.zeros((size, size))
    for s in range(size):
        for e in range(size):
            p = 1.0
            for j, t in enumerate(unit_tpms):
                p *= t[s >> j & 1, e >> j & 1]
            probs[s, e] = p
    return tpm_from_probs(probs, n)


def random_unit_tpm(rng) -> np.ndarray:
    raw = rng.random((2, 2)) + 0.05
    return raw / raw.sum(axis=1, keepdims=True)


class TestBipartitions:
    def test_counts_by_size(self):
        assert len(enumerate_bipartitions(2)) == 1
        assert len(enumerate_bipartitions(3)) == 3

    def test_unit_zero_always_in_part_a(self):
        for cut in enumerate_bipartitions(3):
            assert 0 in cut.part_a

    def test_parts_cover_all_units(self):
        for cut in enumerate_bipartitions(3):
            assert sorted(cut.part_a + cut.part_b) == [0, 1, 2]

    def test_invalid_partitions_rejected(self):
        with pytest.raises(InvalidInputError):
            Bipartition((0,), ())
        with pytest.raises(InvalidInputError):
            Bipartition((1,), (0,))  # unit 0 must sit in part_a
        with pytest.raises(InvalidInputError):
            Bipartition((0, 1), (1, 2))


class TestPartitionedTpm:
    def test_uniform_stays_uniform(self):
        t = uniform_tpm(2)
        cut = enumerate_bipartitions(2)[0]
        np.testing.assert_allclose(partitioned_tpm(t, cut).probs, 0.25)

    def test_factorized_system_unchanged_by_every_cut(self, rng):
        t = product_tpm([random_unit_tpm(rng) for _ in range(3)])
        for cut in enumerate_bipartitions(3):
            np.testing.assert_allclose(partitioned_tpm(t, cut).probs, t.probs, atol=1e-12)

    def test_copy_system_cut_is_uniform(self):
        # A' = B and B' = A: each marginal loses its input entirely
        t = copy_system_tpm()
        cut = enumerate_bipartitions(2)[0]
        np.testing.assert_allclose(partitioned_tpm(t, cut).probs, 0.25, atol=1e-12)

    def test_rows_still_stochastic(self, rng):
        t = tpm_from_probs(random_tpm(rng, 3, sparse=True), 3)
        for cut in enumerate_bipartitions(3):
            rows = partitioned_tpm(t, cut).probs.sum(axis=1)
            np.testing.assert_allclose(rows, 1.0, atol=1e-9)

    def test_dimensionality_limit(self, rng):
        t = tpm_from_probs(random_tpm(rng, 4), 4)
        with pytest.raises(DimensionalityLimitError):
            partitioned_tpm(t, Bipartition((0, 1), (2, 3)))


class TestPhiSystem:
    def test_uniform_scores_zero(self):
        for n in (2, 3):
            t = uniform_tpm(n)
            for s in range(2**n):
                assert phi_system(t, s).phi_s == 0.0

    def test_factorized_scores_zero(self, rng):
        for n in (2, 3):
            for _ in range(10):
                t = product_tpm([random_unit_tpm(rng) for _ in range(n)])
                for s in range(2**n):
                    assert phi_system(t, s).phi_s == pytest.approx(0.0, abs=1e-9)

    def test_copy_system_phi_is_two_bits(self):
        # whole system pins e*/c* with probability 1; the cut leaves 1/4
        t = copy_system_tpm()
        r = phi_system(t, 0b01)
        assert r.phi_s == pytest.approx(2.0, abs=1e-12)
        assert r.mip.label() == "[0|1]"
        assert not r.clamped

    def test_copy_system_matches_exhaustive_oracle(self):
        t = copy_system_tpm()
        for s in range(4):
            assert phi_system(t, s).phi_s == pytest.approx(
                oracle_phi(t.probs.tolist(), s, 2), abs=1e-9
            )

    def test_matches_oracle_on_random_tpms(self, rng):
        for n in (2, 3):
            for i in range(12):
                probs = random_tpm(rng, n, sparse=i % 3 == 0)
                t = tpm_from_probs(probs, n)
                for s in range(2**n):
                    assert phi_system(t, s).phi_s == pytest.approx(
                        oracle_phi(probs.tolist(), s, n), abs=1e-9
                    )

    def test_single_unit_has_no_partition(self):
        t = permutation_tpm([1, 0], 1)
        r = phi_system(t, 0)
        assert r.phi_s == 0.0 and r.mip is None and r.per_partition == {}

    def test_nonnegative_and_bounded(self, rng):
        for n in (2, 3):
            for _ in range(8):
                t = tpm_from_probs(random_tpm(rng, n, sparse=True), n)
                for s in range(2**n):
                    r = phi_system(t, s)
                    assert 0.0 <= r.phi_s <= n + 1e-9

    def test_invariant_under_unit_relabeling(self, rng):
        probs = random_tpm(rng, 3)
        t = tpm_from_probs(probs, 3)
        perm = [2, 0, 1]  # new bit j reads old bit perm[j]

        def relabel(state):
            return sum(((state >> perm[j]) & 1) << j for j in range(3))

        relabeled = np.zeros_like(probs)
        for s in range(8):
            for e in range(8):
                relabeled[relabel(s), relabel(e)] = probs[s, e]
        t2 = tpm_from_probs(relabeled, 3)
        for s in range(8):
            assert phi_system(t2, relabel(s)).phi_s == pytest.approx(
                phi_system(t, s).phi_s, abs=1e-9
            )

    def test_mip_attains_the_minimum(self, rng):
        t = tpm_from_probs(random_tpm(rng, 3), 3)
        for s in range(8):
            r = phi_system(t, s)
            values = [min(pc, pe) for pc, pe in r.per_partition.values()]
            assert min(values) == pytest.approx(min(r.per_partition[r.mip]), abs=0)

    def test_state_out_of_range(self):
        with pytest.raises(InvalidInputError):
            phi_system(uniform_tpm(2), 4)

    def test_dimensionality_limit(self, rng):
        t = tpm_from_probs(random_tpm(rng, 4), 4)
        with pytest.raises(DimensionalityLimitError):
            phi_system(t, 0)


class TestSequencePhi:
    def test_uniform_sequence_scores_zero(self):
        t = uniform_tpm(2)
        assert sequence_phi_total(t, [0, 1, 2, 3]) == 0.0

    def test_matches_per_state_sum(self, rng):
        t = tpm_from_probs(random_tpm(rng, 2), 2)
        states = [0, 3, 3, 1, 2]
        want = sum(oracle_phi(t.probs.tolist(), s, 2) for s in states)
        assert sequence_phi_total(t, states) == pytest.approx(want, abs=1e-9)
