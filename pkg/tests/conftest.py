import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tweetriage import classify, evalkit, nertag
from tweetriage.domain import HelpLabel, spans_to_bio
from tweetriage.textfeat import fit_tfidf, tfidf_transform, tokenize


@pytest.fixture(scope="session")
def small_corpus():
    """A compact synthetic corpus for fast end-to-end tests."""
    return evalkit.synthetic_records(160, seed=11)


@pytest.fixture(scope="session")
def trained_models(small_corpus):
    """Vectorizer + classifier + CRF trained once per session."""
    docs = [[t.surface for t in tokenize(tweet.text)] for tweet, _, _ in small_corpus]
    labels = [label for _, label, _ in small_corpus]
    vectorizer = fit_tfidf(docs)
    X = [tfidf_transform(vectorizer, doc) for doc in docs]
    model = classify.train_classifier(
        X, labels, classify.TrainConfig(seed=3),
        feature_size=vectorizer.feature_size,
        fingerprint=vectorizer.fingerprint(),
    )
    sequences = []
    for tweet, label, spans in small_corpus:
        if label == HelpLabel.CALL_FOR_HELP:
            tokens = tokenize(tweet.text)
            sequences.append((nertag.sequence_features(tokens), spans_to_bio(tokens, spans)))
    crf = nertag.train_crf(
        sequences, nertag.CrfTrainConfig(iterations=40, seed=3)
    )
    return vectorizer, model, crf


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory, trained_models):
    """The session models persisted as the artifact files the server loads."""
    vectorizer, model, crf = trained_models
    path = tmp_path_factory.mktemp("models")
    (path / "vectorizer.json").write_text(vectorizer.to_json(), encoding="utf-8")
    (path / "classifier.json").write_text(model.to_json(), encoding="utf-8")
    (path / "crf.json").write_text(crf.to_json(), encoding="utf-8")
    return path
