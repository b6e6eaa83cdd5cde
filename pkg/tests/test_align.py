import dataclasses

import numpy as np
import pytest

from versetopics.align import (
    AlignmentWeights,
    GateThresholds,
    align_run,
    composite_similarity,
    consensus,
    hungarian_max,
    jaccard_top_m,
    load_consensus_gamma,
    load_dominant,
    load_top_terms,
    n_eff,
    realign_gamma,
    select_reference,
    spearman,
    top_m_indices,
    write_alignment_report,
    write_consensus,
)
from versetopics.errors import ComputationError, InputDataError
from versetopics.lda import GibbsConfig, LdaRun

from oracles import brute_force_assignment


def make_run(beta, gamma, ll=0.0, seed=0):
    return LdaRun(
        beta_matrix=np.asarray(beta, dtype=np.float64),
        gamma_matrix=np.asarray(gamma, dtype=np.float64),
        log_likelihood=ll,
        seed=seed,
        config=GibbsConfig(k=np.asarray(beta).shape[0], iterations=2, burn_in=1, thin=1),
    )


def permute_run(run, sigma):
    """New run whose topic j is the old topic sigma[j]."""
    sigma = np.asarray(sigma)
    return dataclasses.replace(
        run,
        beta_matrix=run.beta_matrix[sigma],
        gamma_matrix=run.gamma_matrix[:, sigma],
    )


class TestJaccard:
    def test_identical_rows(self):
        row = np.linspace(1, 0, 50)
        assert jaccard_top_m(row, row, m=30) == 1.0

    def test_disjoint_top_sets(self):
        a = np.concatenate([np.ones(30), np.zeros(30)])
        b = np.concatenate([np.zeros(30), np.ones(30)])
        assert jaccard_top_m(a, b, m=30) == 0.0

    def test_two_of_four(self):
        # top-3 sets {0,1,2} and {1,2,3}: intersection 2, union 4
        a = np.array([0.5, 0.3, 0.2, 0.0, 0.0])
        b = np.array([0.0, 0.3, 0.2, 0.5, 0.0])
        assert jaccard_top_m(a, b, m=3) == 0.5

    def test_tie_break_by_lemma(self):
        weights = np.array([0.4, 0.1, 0.1, 0.1])
        lemmas = ["d", "c", "b", "a"]
        # three-way tie at the second slot: lemma order picks 'a' then 'b'
        idx = top_m_indices(weights, 3, lemmas)
        assert idx.tolist() == [0, 3, 2]

    def test_m_larger_than_vocab_rejected(self):
        with pytest.raises(InputDataError):
            top_m_indices(np.ones(5), 6)


class TestSpearman:
    def test_identity(self):
        assert spearman([0.1, 0.5, 0.4], [0.1, 0.5, 0.4]) == 1.0

    def test_reversal(self):
        assert spearman([1, 2, 3], [3, 2, 1]) == -1.0

    def test_ties_average_ranks(self):
        assert spearman([1, 2, 2, 4], [1, 3, 3, 4]) == pytest.approx(1.0)

    def test_zero_variance_raises(self):
        with pytest.raises(ComputationError):
            spearman([1.0, 1.0, 1.0], [1, 2, 3])

    def test_length_mismatch(self):
        with pytest.raises(InputDataError):
            spearman([1, 2], [1, 2, 3])


class TestHungarian:
    def test_identity_dominant(self):
        perm = hungarian_max(np.array([[0.9, 0.1], [0.2, 0.8]]))
        assert perm.tolist() == [0, 1]

    def test_permutation_matrix_recovered(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            k = rng.integers(2, 7)
            sigma = rng.permutation(k)
            matrix = np.zeros((k, k))
            matrix[np.arange(k), sigma] = 1.0
            assert hungarian_max(matrix).tolist() == sigma.tolist()

    def test_matches_brute_force(self):
        import math

        rng = np.random.default_rng(17)
        for k in range(2, 7):
            for _ in range(40):
                score = rng.random((k, k))
                perm = hungarian_max(score)
                total = math.fsum(score[i, perm[i]] for i in range(k))
                _, oracle_total = brute_force_assignment(score)
                assert total == oracle_total

    def test_lexicographic_tie_break(self):
        assert hungarian_max(np.ones((4, 4))).tolist() == [0, 1, 2, 3]
        # two optimal assignments; the lexicographically smaller perm wins
        score = np.array([[1.0, 1.0], [1.0, 1.0]])
        assert hungarian_max(score).tolist() == [0, 1]

    def test_ties_match_brute_force_preference(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            k = int(rng.integers(2, 5))
            score = rng.integers(0, 3, size=(k, k)).astype(float)  # many ties
            perm, oracle_total = brute_force_assignment(score)
            ours = hungarian_max(score)
            import math

            assert math.fsum(score[i, ours[i]] for i in range(k)) == oracle_total
            assert ours.tolist() == list(perm)

    def test_rejects_bad_input(self):
        with pytest.raises(InputDataError):
            hungarian_max(np.ones((2, 3)))
        with pytest.raises(InputDataError):
            hungarian_max(np.array([[np.nan, 1.0], [1.0, 0.0]]))


class TestAlignRun:
    def test_self_alignment(self, small_ensemble):
        run = small_ensemble[0]
        a = align_run(run, run)
        assert a.permutation.tolist() == [0, 1, 2]
        assert a.mean_jaccard30 == 1.0
        assert a.mean_spearman == pytest.approx(1.0)
        assert a.mapping_agreement == 1.0
        assert a.retained

    def test_recovers_inverse_permutation(self, small_ensemble):
        reference = small_ensemble[0]
        sigma = np.array([2, 0, 1])
        permuted = permute_run(reference, sigma)
        a = align_run(permuted, reference)
        # permuted topic j is reference topic sigma[j]
        assert a.permutation.tolist() == sigma.tolist()
        assert a.mean_jaccard30 == 1.0
        assert a.mean_spearman == pytest.approx(1.0)

    def test_beta_gamma_disagreement_lowers_agreement(self, small_ensemble):
        reference = small_ensemble[0]
        sigma = np.array([1, 2, 0])  # derangement
        adversarial = dataclasses.replace(
            reference, beta_matrix=reference.beta_matrix[sigma]
        )
        a = align_run(adversarial, reference)
        assert a.mapping_agreement == 0.0
        assert not a.retained

    def test_dimension_mismatch(self, small_ensemble):
        run = small_ensemble[0]
        other = dataclasses.replace(run, beta_matrix=run.beta_matrix[:, :-1])
        with pytest.raises(InputDataError):
            align_run(other, run)

    def test_weights_must_sum_to_one(self):
        with pytest.raises(InputDataError):
            AlignmentWeights(0.7, 0.6)


class TestSelectReference:
    def test_argmax(self):
        runs = [make_run(np.eye(2), np.eye(2), ll=ll) for ll in (-100, -90, -95)]
        assert select_reference(runs) == 1

    def test_single(self):
        runs = [make_run(np.eye(2), np.eye(2))]
        assert select_reference(runs) == 0

    def test_tie_break_smallest_seed(self):
        runs = [
            make_run(np.eye(2), np.eye(2), ll=-5.0, seed=7),
            make_run(np.eye(2), np.eye(2), ll=-5.0, seed=3),
        ]
        assert select_reference(runs) == 1

    def test_empty_rejected(self):
        with pytest.raises(InputDataError):
            select_reference([])


class TestConsensus:
    def test_identical_runs(self, small_ensemble):
        run = small_ensemble[0]
        res = consensus([run, run, run], reference_index=0)
        np.testing.assert_allclose(res.consensus_gamma, run.gamma_matrix, atol=5e-15)
        assert res.retained_run_count == 3

    def test_alignment_undoes_permutation(self, small_ensemble):
        run = small_ensemble[0]
        sigma = np.array([1, 2, 0])
        res = consensus([run, permute_run(run, sigma)], reference_index=0)
        np.testing.assert_allclose(res.consensus_gamma, run.gamma_matrix, atol=5e-15)

    def test_permuting_all_non_reference_runs_is_bitwise_invariant(self, small_ensemble):
        base = consensus(list(small_ensemble))
        rng = np.random.default_rng(0)
        ref = base.reference_index
        shuffled = [
            run if i == ref else permute_run(run, rng.permutation(run.n_topics))
            for i, run in enumerate(small_ensemble)
        ]
        res = consensus(shuffled, reference_index=ref)
        assert np.array_equal(res.consensus_gamma, base.consensus_gamma)
        assert np.array_equal(res.dominant_topic, base.dominant_topic)
        assert res.n_eff == base.n_eff

    def test_dominant_differs_from_runner_up(self, small_ensemble):
        res = consensus(list(small_ensemble))
        assert (res.dominant_topic != res.runner_up_topic).all()
        np.testing.assert_allclose(res.consensus_gamma.sum(axis=1), 1.0, atol=1e-9)

    def test_reference_always_retained(self, small_ensemble):
        strict = GateThresholds(min_jaccard=1.1, min_spearman=1.1, min_agreement=1.1)
        res = consensus(list(small_ensemble), thresholds=strict)
        assert res.retained_run_count == 1
        assert res.alignments[res.reference_index].retained

    def test_gating_monotonicity(self, small_ensemble):
        loose = consensus(list(small_ensemble), thresholds=GateThresholds(0.1, 0.1, 0.1))
        tight = consensus(list(small_ensemble), thresholds=GateThresholds(0.6, 0.8, 0.8))
        loose_set = {i for i, a in enumerate(loose.alignments) if a.retained}
        tight_set = {i for i, a in enumerate(tight.alignments) if a.retained}
        assert tight_set <= loose_set


class TestNeff:
    def test_uniform(self):
        assert n_eff([4, 4, 4, 4, 4]) == pytest.approx(5.0, abs=1e-12)

    def test_concentrated(self):
        assert n_eff([35, 0, 0, 0, 0]) == pytest.approx(1.0, abs=1e-12)

    def test_hand_computed(self):
        assert n_eff([7, 8, 10, 5, 5]) == pytest.approx(1225 / 263, abs=1e-12)

    def test_all_zero_rejected(self):
        with pytest.raises(InputDataError):
            n_eff([0, 0])


class TestZeroVarianceGamma:
    def test_treated_as_zero_with_warning(self):
        beta = np.array([[0.6, 0.3, 0.1], [0.1, 0.3, 0.6]])
        gamma_const = np.full((4, 2), 0.5)
        gamma_ok = np.array([[0.9, 0.1], [0.2, 0.8], [0.7, 0.3], [0.4, 0.6]])
        run = make_run(beta, gamma_const)
        ref = make_run(beta, gamma_ok)
        with pytest.warns(RuntimeWarning, match="zero variance"):
            score = composite_similarity(run, ref, m=2)
        assert score.undefined_gamma.all()
        np.testing.assert_array_equal(score.r_gamma, 0.0)


class TestConsensusIO:
    def test_round_trip_files(self, tmp_path, small_corpus, small_ensemble):
        res = consensus(list(small_ensemble), lemmas=small_corpus.dtm.lemmas)
        write_alignment_report(small_ensemble, res.alignments, tmp_path / "diag.csv")
        write_consensus(res, small_corpus.dtm.block_ids, tmp_path, reference_seed=small_ensemble[res.reference_index].seed)
        blocks, gamma = load_consensus_gamma(tmp_path / "consensus_gamma.csv")
        assert blocks == list(small_corpus.dtm.block_ids)
        np.testing.assert_array_equal(gamma, res.consensus_gamma)
        blocks2, dominant = load_dominant(tmp_path / "dominant.csv")
        assert blocks2 == list(small_corpus.dtm.block_ids)
        np.testing.assert_array_equal(dominant, res.dominant_topic)
        terms = load_top_terms(tmp_path / "top_terms.csv")
        assert tuple(tuple(t) for t in terms) == res.reference_top_terms
        lines = (tmp_path / "diag.csv").read_text().strip().split("\n")
        assert lines[0] == "seed,log_likelihood,mean_jaccard30,mean_spearman,mapping_agreement,retained"
        assert len(lines) == 1 + len(small_ensemble)

    def test_realign_gamma_inverse(self):
        rng = np.random.default_rng(1)
        gamma = rng.random((5, 4))
        sigma = rng.permutation(4)
        realigned = realign_gamma(gamma, sigma)
        for j in range(4):
            np.testing.assert_array_equal(realigned[:, sigma[j]], gamma[:, j])
