import json
import math

import numpy as np
import pytest

from oracles import enumerate_chain, random_crf_instance
from tweetriage.domain import BioLabel, EntityTag, EntitySpan, spans_to_bio
from tweetriage.nertag import (
    NUM_LABELS,
    CrfModel,
    CrfTrainConfig,
    extract_features,
    forward_backward,
    nll_and_gradient,
    sequence_features,
    sequence_score,
    tag_tweet,
    token_accuracy,
    train_crf,
    viterbi_decode,
)
from tweetriage.textfeat import tokenize


def zero_model(l2=0.0):
    return CrfModel({"bias": 0}, np.zeros((1, NUM_LABELS)), np.zeros((NUM_LABELS, NUM_LABELS)), l2)


class TestExtractFeatures:
    def test_first_of_two_tokens(self):
        tokens = tokenize("Hatay merkez")
        feats = extract_features(tokens, 0)
        assert set(feats) == {
            "bias",
            "stem=hatay",
            "shape=TITLE",
            "prev.shape=BOS",
            "next.shape=LOWER",
            "word=hatay",
            "istitle=1",
            "islower=0",
            "isupper=0",
        }

    def test_single_token_has_both_sentinels(self):
        feats = extract_features(tokenize("yardım"), 0)
        assert "prev.shape=BOS" in feats
        assert "next.shape=EOS" in feats

    def test_uppercase_boolean(self):
        assert "isupper=1" in extract_features(tokenize("ACİL"), 0)

    def test_position_out_of_range(self):
        with pytest.raises(IndexError):
            extract_features(tokenize("bir"), 1)

    def test_always_nine_features(self):
        tokens = tokenize("Ali enkaz altında! no:12")
        for i in range(len(tokens)):
            assert len(extract_features(tokens, i)) == 9


class TestZeroWeightAnalytics:
    def test_logz_uniform(self):
        model = zero_model()
        feats = [["bias"]] * 3
        log_z, node, edge = forward_backward(model, feats)
        assert log_z == pytest.approx(3 * math.log(9), abs=1e-12)
        assert np.allclose(node, 1 / 9, atol=1e-12)

    def test_t1_logz(self):
        model = zero_model()
        log_z, node, edge = forward_backward(model, [["bias"]])
        assert log_z == pytest.approx(math.log(9), abs=1e-12)
        assert edge.shape == (0, 9, 9)

    def test_all_o_decode_by_tie_rule(self):
        labels, score = viterbi_decode(zero_model(), [["bias"]] * 4)
        assert labels == [BioLabel.O] * 4
        assert score == 0.0

    def test_nll_is_t_ln_9(self):
        model = zero_model(l2=0.0)
        gold = [BioLabel.B_PER, BioLabel.I_PER, BioLabel.O]
        nll, gs, gt = nll_and_gradient(model, [["bias"]] * 3, gold)
        assert nll == pytest.approx(3 * math.log(9), abs=1e-12)


class TestAgainstBruteForce:
    def test_logz_viterbi_and_marginals(self):
        rng = np.random.default_rng(123)
        for _ in range(40):
            model, feats = random_crf_instance(rng, max_t=4)
            emissions = model.emissions(feats)
            brute_logz, brute_best, brute_seq = enumerate_chain(
                emissions, model.transition_weights
            )
            log_z, node, edge = forward_backward(model, feats)
            assert log_z == pytest.approx(brute_logz, abs=1e-6)
            decoded, score = viterbi_decode(model, feats)
            assert score == pytest.approx(brute_best, abs=1e-9)
            assert tuple(int(l) for l in decoded) == brute_seq
            assert np.allclose(node.sum(axis=1), 1.0, atol=1e-9)
            # edge marginals must marginalize to the adjacent node marginals
            if len(feats) > 1:
                assert np.allclose(edge.sum(axis=2), node[:-1], atol=1e-8)
                assert np.allclose(edge.sum(axis=1), node[1:], atol=1e-8)

    def test_forward_equals_backward_partition(self):
        # beta recursion folded from the other end must give the same logZ
        rng = np.random.default_rng(7)
        for _ in range(10):
            model, feats = random_crf_instance(rng, max_t=4)
            T = int(rng.integers(5, 21))
            feats = [feats[0]] * T
            emissions = model.emissions(feats)
            trans = model.transition_weights
            log_z, _, _ = forward_backward(model, feats)
            beta = np.zeros(NUM_LABELS)
            for t in range(T - 2, -1, -1):
                scores = trans + (emissions[t + 1] + beta)[None, :]
                peak = scores.max(axis=1, keepdims=True)
                beta = np.squeeze(peak, 1) + np.log(
                    np.exp(scores - peak).sum(axis=1)
                )
            first = emissions[0] + beta
            backward_logz = first.max() + math.log(np.exp(first - first.max()).sum())
            assert backward_logz == pytest.approx(log_z, abs=1e-9)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(99)
        h = 1e-5
        for _ in range(12):
            model, feats = random_crf_instance(rng, max_t=5)
            gold = [BioLabel(int(g)) for g in rng.integers(0, NUM_LABELS, size=len(feats))]
            nll, grad_state, grad_trans = nll_and_gradient(model, feats, gold)
            assert nll >= -1e-12 or model.l2 > 0

            def nll_at(state, trans):
                m = CrfModel(model.feature_index, state, trans, model.l2)
                return nll_and_gradient(m, feats, gold)[0]

            # probe a sample of coordinates in each block
            for _ in range(6):
                i = int(rng.integers(model.num_features))
                j = int(rng.integers(NUM_LABELS))
                up = model.state_weights.copy()
                down = model.state_weights.copy()
                up[i, j] += h
                down[i, j] -= h
                fd = (nll_at(up, model.transition_weights) - nll_at(down, model.transition_weights)) / (2 * h)
                rel = abs(fd - grad_state[i, j]) / max(abs(fd) + abs(grad_state[i, j]), 1e-3)
                assert rel < 1e-4
            for _ in range(6):
                i = int(rng.integers(NUM_LABELS))
                j = int(rng.integers(NUM_LABELS))
                up = model.transition_weights.copy()
                down = model.transition_weights.copy()
                up[i, j] += h
                down[i, j] -= h
                fd = (nll_at(model.state_weights, up) - nll_at(model.state_weights, down)) / (2 * h)
                rel = abs(fd - grad_trans[i, j]) / max(abs(fd) + abs(grad_trans[i, j]), 1e-3)
                assert rel < 1e-4


class TestTraining:
    def _toy_data(self):
        # CITY after "şehir", PER when title-cased: separable patterns
        corpus = [
            ("Hatay sallandı", [(EntityTag.CITY, "Hatay")]),
            ("Adana sallandı", [(EntityTag.CITY, "Adana")]),
            ("Ali kayboldu", [(EntityTag.PER, "Ali")]),
            ("Veli kayboldu", [(EntityTag.PER, "Veli")]),
        ]
        data = []
        for text, ents in corpus:
            tokens = tokenize(text)
            spans = []
            for tag, surface in ents:
                start = text.index(surface)
                spans.append(EntitySpan(tag, start, start + len(surface), surface))
            data.append((sequence_features(tokens), spans_to_bio(tokens, spans)))
        return data

    def test_deterministic_given_seed(self):
        data = self._toy_data()
        cfg = CrfTrainConfig(iterations=20, seed=5)
        a = train_crf(data, cfg)
        b = train_crf(data, cfg)
        assert np.array_equal(a.state_weights, b.state_weights)
        assert np.array_equal(a.transition_weights, b.transition_weights)
        assert a.feature_index == b.feature_index

    def test_memorizes_training_set(self):
        data = self._toy_data()
        model = train_crf(data, CrfTrainConfig(iterations=150, seed=1))
        assert token_accuracy(model, data) == 1.0

    def test_empty_data_rejected(self):
        with pytest.raises(ValueError):
            train_crf([], CrfTrainConfig())

    def test_zero_iterations_rejected(self):
        with pytest.raises(ValueError):
            CrfTrainConfig(iterations=0)

    def test_nll_decreases_on_single_sequence(self):
        data = self._toy_data()[:1]
        feats, gold = data[0]
        nlls = []
        for iterations in (1, 40, 160):
            model = train_crf(data, CrfTrainConfig(iterations=iterations, l2=0.0,
                                                   learning_rate=0.5, seed=2))
            nlls.append(nll_and_gradient(model, feats, gold)[0])
        assert nlls[0] > nlls[1] > nlls[2]
        assert nlls[2] < 0.25  # saturated model puts most mass on gold

    def test_unknown_features_ignored_at_decode(self):
        data = self._toy_data()
        model = train_crf(data, CrfTrainConfig(iterations=30, seed=1))
        feats, _ = data[0]
        with_unknown = [list(f) + ["word=görülmemiş"] for f in feats]
        assert viterbi_decode(model, feats) == viterbi_decode(model, with_unknown)


class TestTagTweet:
    def test_empty_text(self, trained_models):
        _, _, crf = trained_models
        assert tag_tweet(crf, "") == []

    def test_memorized_sentence_round_trips(self):
        text = "Ali Kaya enkaz altında, Hatay"
        tokens = tokenize(text)
        spans = [
            EntitySpan(EntityTag.PER, 0, 8, "Ali Kaya"),
            EntitySpan(EntityTag.STATUS, 9, 22, "enkaz altında"),
            EntitySpan(EntityTag.CITY, 24, 29, "Hatay"),
        ]
        data = [(sequence_features(tokens), spans_to_bio(tokens, spans))]
        model = train_crf(data, CrfTrainConfig(iterations=250, l2=0.0,
                                               learning_rate=0.5, seed=3))
        assert tag_tweet(model, text) == spans

    def test_punctuation_only_text_yields_nothing(self, trained_models):
        _, _, crf = trained_models
        assert tag_tweet(crf, "!!! ???") == []

    def test_decoded_spans_valid(self, trained_models):
        _, _, crf = trained_models
        text = "Zeynep Arslan göçük altında, İnönü Sok. no 3, Kilis yardım"
        spans = tag_tweet(crf, text)
        for s in spans:
            assert text[s.start : s.end] == s.surface
        ordered = sorted(spans, key=lambda s: s.start)
        for a, b in zip(ordered, ordered[1:]):
            assert a.end <= b.start


class TestPersistence:
    def test_round_trip(self):
        rng = np.random.default_rng(3)
        model = CrfModel(
            {"bias": 0, "word=x": 1},
            rng.normal(size=(2, NUM_LABELS)),
            rng.normal(size=(NUM_LABELS, NUM_LABELS)),
            l2=0.1,
        )
        back = CrfModel.from_json(model.to_json())
        assert back.feature_index == model.feature_index
        assert np.array_equal(back.state_weights, model.state_weights)
        assert np.array_equal(back.transition_weights, model.transition_weights)
        assert back.l2 == model.l2

    def test_json_shape(self):
        model = zero_model()
        doc = json.loads(model.to_json())
        assert set(doc) == {"features", "state_weights", "transition_weights", "l2"}

    def test_score_helper_consistent_with_decode(self):
        rng = np.random.default_rng(11)
        model, feats = random_crf_instance(rng, max_t=4)
        decoded, score = viterbi_decode(model, feats)
        assert sequence_score(model, feats, decoded) == pytest.approx(score, abs=1e-9)
