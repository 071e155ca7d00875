"""Evaluation protocol and the bundled synthetic corpus.

Stratified k-fold splitting, positive-class F1 for classification, exact-match
span F1 (CoNLL convention) for tagging, and a deterministic template
generator that stands in for private annotated data at desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import Hashable, Optional, Sequence

import numpy as np

from tweetriage import classify, nertag
from tweetriage.domain import (
    EntitySpan,
    EntityTag,
    HelpLabel,
    Tweet,
    spans_to_bio,
)
from tweetriage.textfeat import fit_tfidf, tfidf_transform, tokenize


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    fold_of: tuple[int, ...]

    def test_indices(self, fold: int) -> list[int]:
        return [i for i, f in enumerate(self.fold_of) if f == fold]

    def train_indices(self, fold: int) -> list[int]:
        return [i for i, f in enumerate(self.fold_of) if f != fold]


def stratified_kfold(labels: Sequence[Hashable], k: int, seed: int) -> FoldAssignment:
    """Shuffle within each class and deal round-robin; the fold receiving
    each class's remainder rotates so overall fold sizes stay balanced."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > len(labels):
        raise ValueError(f"k={k} exceeds {len(labels)} examples")
    groups: dict[Hashable, list[int]] = {}
    for i, label in enumerate(labels):
        groups.setdefault(label, []).append(i)
    rng = np.random.default_rng(seed)
    fold_of = [0] * len(labels)
    offset = 0
    for indices in groups.values():
        shuffled = np.array(indices)
        rng.shuffle(shuffled)
        for j, idx in enumerate(shuffled):
            fold_of[int(idx)] = (offset + j) % k
        offset = (offset + len(indices)) % k
    return FoldAssignment(k, tuple(fold_of))


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float
    support: int

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> "PRF":
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        return cls(precision, recall, f1, support=tp + fn)

    def as_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "support": self.support,
        }


def binary_f1_positive(pred: Sequence[HelpLabel], gold: Sequence[HelpLabel]) -> PRF:
    """Precision/recall/F1 of the call-for-help class."""
    if len(pred) != len(gold):
        raise ValueError(f"{len(pred)} predictions for {len(gold)} labels")
    pos = HelpLabel.CALL_FOR_HELP
    tp = sum(1 for p, g in zip(pred, gold) if p == pos and g == pos)
    fp = sum(1 for p, g in zip(pred, gold) if p == pos and g != pos)
    fn = sum(1 for p, g in zip(pred, gold) if p != pos and g == pos)
    return PRF.from_counts(tp, fp, fn)


@dataclass(frozen=True)
class TaggingScores:
    per_tag: dict[EntityTag, PRF]
    weighted_f1: float

    def as_dict(self) -> dict:
        return {
            "per_tag": {tag.value: prf.as_dict() for tag, prf in self.per_tag.items()},
            "weighted_f1": self.weighted_f1,
        }


def conll_span_f1(
    pred_spans: Sequence[Sequence[EntitySpan]],
    gold_spans: Sequence[Sequence[EntitySpan]],
) -> TaggingScores:
    """Exact-match span scoring: a prediction counts only when tag, start,
    and end all match; the average is weighted by gold support per tag."""
    if len(pred_spans) != len(gold_spans):
        raise ValueError("document count mismatch")
    tp = {tag: 0 for tag in EntityTag}
    fp = {tag: 0 for tag in EntityTag}
    fn = {tag: 0 for tag in EntityTag}
    for pred_doc, gold_doc in zip(pred_spans, gold_spans):
        pred_set = {(s.tag, s.start, s.end) for s in pred_doc}
        gold_set = {(s.tag, s.start, s.end) for s in gold_doc}
        for item in pred_set & gold_set:
            tp[item[0]] += 1
        for item in pred_set - gold_set:
            fp[item[0]] += 1
        for item in gold_set - pred_set:
            fn[item[0]] += 1
    per_tag = {tag: PRF.from_counts(tp[tag], fp[tag], fn[tag]) for tag in EntityTag}
    total = sum(prf.support for prf in per_tag.values())
    weighted = (
        sum(prf.f1 * prf.support for prf in per_tag.values()) / total if total else 0.0
    )
    return TaggingScores(per_tag=per_tag, weighted_f1=weighted)


# --- synthetic corpus -------------------------------------------------------

_FIRST_NAMES = (
    "Ahmet", "Ayşe", "Mehmet", "Fatma", "Mustafa", "Emine", "Ali", "Zeynep",
    "Hüseyin", "Hatice", "İbrahim", "Elif", "Osman", "Meryem", "Hasan",
    "Şeyma", "Murat", "Selin", "Kemal", "Derya",
)
_LAST_NAMES = (
    "Yılmaz", "Demir", "Kaya", "Çelik", "Şahin", "Yıldız", "Aydın", "Arslan",
    "Doğan", "Kılıç",
)
_STATUSES = (
    "enkaz altında", "göçük altında", "enkaz altındayız", "mahsur kaldı",
    "kayıp", "yaralı durumda", "ses veriyor",
)
_STREETS = (
    "Atatürk", "İnönü", "Cumhuriyet", "Gazi", "Mimar Sinan", "Yunus Emre",
    "Barbaros", "İstiklal", "Mevlana", "Fevzi Çakmak",
)
_STREET_TYPES = ("Caddesi", "Sokak", "Mahallesi", "Bulvarı", "Cad.", "Sok.", "Mah.")
_CITIES = (
    "Adana", "Adıyaman", "Diyarbakır", "Elazığ", "Gaziantep", "Hatay",
    "Kahramanmaraş", "Kilis", "Malatya", "Osmaniye", "Şanlıurfa",
)

_PER, _CITY, _ADDR, _STATUS = EntityTag.PER, EntityTag.CITY, EntityTag.ADDR, EntityTag.STATUS

# Templates mix located, address-only, and no-location help calls so the
# downstream funnel has every stage populated.
_POS_TEMPLATES: tuple[tuple, ...] = (
    (_PER, " ", _STATUS, ", ", _ADDR, ", ", _CITY, " yardım edin lütfen"),
    ("Acil yardım! ", _ADDR, " ", _CITY, " adresinde ", _PER, " ", _STATUS),
    (_CITY, " ", _ADDR, " konumunda ", _PER, " ", _STATUS, ", kurtarın"),
    (_PER, " ", _CITY, " merkezinde ", _STATUS, ", adres ", _ADDR, " ekip bekliyor"),
    ("Sesimizi duyun: ", _PER, " ", _STATUS, ", ", _ADDR, ", ", _CITY),
    (_PER, " ve ailesi ", _STATUS, ", ", _ADDR, ", ", _CITY, " acil kurtarma lazım"),
    (_PER, " ", _STATUS, ", haber alamıyoruz, yardım edin"),
    (_PER, " ", _STATUS, ", adres ", _ADDR, ", ekipler nerede"),
)

_NUM = "#NUM"
_CITYWORD = "#CITYWORD"

_NEG_TEMPLATES: tuple[tuple, ...] = (
    ("Deprem bölgesine ", _NUM, " yardım tırı yola çıktı"),
    (_CITYWORD, " için yardım kampanyası başlatıldı"),
    ("Maç ertelendi, bilet iadeleri başladı",),
    ("Okullar ", _NUM, " gün tatil edildi"),
    ("Deprem anı görüntüleri paylaşıldı",),
    ("Telefon hatlarında yoğunluk yaşanıyor",),
    ("Gönüllüler toplanma alanında bekliyor",),
    ("Vali açıklama yaptı: arama çalışmaları sürüyor",),
    ("Elektrik kesintisi ", _NUM, " mahalleyi etkiledi"),
    ("Uçuşlar iptal edildi, yolcular bekliyor",),
    ("Benzin istasyonlarında uzun kuyruklar var",),
    ("Hava sıcaklığı ", _NUM, " dereceye düştü"),
)

POSITIVE_RATIO = 0.42
MIN_CORPUS_SIZE = 20


def _pick(rng: np.random.Generator, pool: Sequence[str]) -> str:
    return pool[int(rng.integers(len(pool)))]


def _fill(rng: np.random.Generator, slot: object) -> str:
    if slot is _PER:
        return f"{_pick(rng, _FIRST_NAMES)} {_pick(rng, _LAST_NAMES)}"
    if slot is _CITY:
        return _pick(rng, _CITIES)
    if slot is _STATUS:
        return _pick(rng, _STATUSES)
    if slot is _ADDR:
        number = int(rng.integers(1, 60))
        return f"{_pick(rng, _STREETS)} {_pick(rng, _STREET_TYPES)} no {number}"
    raise ValueError(f"unknown slot {slot!r}")


def _render_positive(rng: np.random.Generator, template: tuple) -> tuple[str, list[EntitySpan]]:
    text = ""
    spans: list[EntitySpan] = []
    for part in template:
        if isinstance(part, str):
            text += part
            continue
        surface = _fill(rng, part)
        spans.append(EntitySpan(part, len(text), len(text) + len(surface), surface))
        text += surface
    return text, spans


def _render_negative(rng: np.random.Generator, template: tuple) -> str:
    text = ""
    for part in template:
        if part == _NUM:
            text += str(int(rng.integers(2, 41)))
        elif part == _CITYWORD:
            text += _pick(rng, _CITIES)
        else:
            text += part
    return text


CorpusExample = tuple[str, HelpLabel, list[EntitySpan]]


def generate_synthetic_corpus(n: int, seed: int) -> list[CorpusExample]:
    """Template-based labeled tweets with a ~42/58 class split.

    The first examples of each class walk through every template once, so
    n >= 20 guarantees full template coverage; spans are exact character
    offsets into the rendered text. Deterministic given the seed.
    """
    if n < MIN_CORPUS_SIZE:
        raise ValueError(f"n must be >= {MIN_CORPUS_SIZE} to cover all templates")
    rng = np.random.default_rng(seed)
    pos_count = round(POSITIVE_RATIO * n)
    plan = np.array([1] * pos_count + [0] * (n - pos_count))
    rng.shuffle(plan)
    out: list[CorpusExample] = []
    pos_seen = neg_seen = 0
    for is_positive in plan:
        if is_positive:
            idx = pos_seen if pos_seen < len(_POS_TEMPLATES) else int(rng.integers(len(_POS_TEMPLATES)))
            pos_seen += 1
            text, spans = _render_positive(rng, _POS_TEMPLATES[idx])
            out.append((text, HelpLabel.CALL_FOR_HELP, spans))
        else:
            idx = neg_seen if neg_seen < len(_NEG_TEMPLATES) else int(rng.integers(len(_NEG_TEMPLATES)))
            neg_seen += 1
            out.append((_render_negative(rng, _NEG_TEMPLATES[idx]), HelpLabel.NOT_CALL_FOR_HELP, []))
    return out


_CORPUS_EPOCH = datetime(2023, 2, 6, 4, 17, 0, tzinfo=timezone.utc)

SyntheticRecord = tuple[Tweet, HelpLabel, list[EntitySpan]]


def synthetic_records(n: int, seed: int) -> list[SyntheticRecord]:
    """Corpus examples wrapped as tweets with deterministic ids/timestamps."""
    records = []
    for i, (text, label, spans) in enumerate(generate_synthetic_corpus(n, seed)):
        tweet = Tweet(
            id=f"synt-{seed}-{i:05d}",
            text=text,
            created_at=_CORPUS_EPOCH + timedelta(seconds=7 * i),
        )
        records.append((tweet, label, spans))
    return records


# --- cross-validation harness ----------------------------------------------


def crossval_classification(
    texts: Sequence[str],
    labels: Sequence[HelpLabel],
    k: int,
    seed: int,
    cfg: Optional[classify.TrainConfig] = None,
    min_df: int = 1,
) -> dict:
    """Stratified k-fold positive-class F1 for the TF-IDF linear classifier."""
    cfg = cfg or classify.TrainConfig(seed=seed)
    docs = [[t.surface for t in tokenize(text)] for text in texts]
    assignment = stratified_kfold(labels, k, seed)
    folds = []
    for fold in range(k):
        train_idx = assignment.train_indices(fold)
        test_idx = assignment.test_indices(fold)
        vectorizer = fit_tfidf([docs[i] for i in train_idx], min_df=min_df)
        X_train = [tfidf_transform(vectorizer, docs[i]) for i in train_idx]
        y_train = [labels[i] for i in train_idx]
        model = classify.train_classifier(
            X_train, y_train, cfg, feature_size=vectorizer.feature_size
        )
        pred = [
            classify.predict(model, tfidf_transform(vectorizer, docs[i]))[0]
            for i in test_idx
        ]
        prf = binary_f1_positive(pred, [labels[i] for i in test_idx])
        folds.append({"fold": fold, **prf.as_dict()})
    mean_f1 = sum(f["f1"] for f in folds) / k
    return {"task": "classification", "k": k, "seed": seed, "folds": folds, "mean_f1": mean_f1}


def crossval_tagging(
    examples: Sequence[tuple[str, Sequence[EntitySpan]]],
    k: int,
    seed: int,
    cfg: Optional[nertag.CrfTrainConfig] = None,
) -> dict:
    """K-fold span-level weighted F1 for the CRF tagger (help calls only)."""
    cfg = cfg or nertag.CrfTrainConfig(seed=seed)
    assignment = stratified_kfold([0] * len(examples), k, seed)
    prepared = []
    for text, spans in examples:
        tokens = tokenize(text)
        prepared.append(
            (text, list(spans), nertag.sequence_features(tokens), spans_to_bio(tokens, spans))
        )
    folds = []
    for fold in range(k):
        train_idx = assignment.train_indices(fold)
        test_idx = assignment.test_indices(fold)
        model = nertag.train_crf(
            [(prepared[i][2], prepared[i][3]) for i in train_idx], cfg
        )
        pred = [nertag.tag_tweet(model, prepared[i][0]) for i in test_idx]
        gold = [prepared[i][1] for i in test_idx]
        scores = conll_span_f1(pred, gold)
        folds.append({"fold": fold, **scores.as_dict()})
    mean_f1 = sum(f["weighted_f1"] for f in folds) / k
    return {"task": "tagging", "k": k, "seed": seed, "folds": folds, "mean_weighted_f1": mean_f1}
