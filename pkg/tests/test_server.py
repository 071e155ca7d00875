import pytest
from fastapi.testclient import TestClient

from tweetriage.pipeline import PipelineStats
from tweetriage.server import ServerConfig, create_app
from tweetriage.store import Store

NEGATIVE_TEXT = "Maç ertelendi, bilet iadeleri başladı"
LOCATED_TEXT = "Ahmet Yılmaz enkaz altında, Atatürk Caddesi no 12, Hatay yardım edin lütfen"
TAGFAIL_TEXT = "Ayşe Demir mahsur kaldı, haber alamıyoruz, yardım edin"
UNLOCATED_TEXT = "Mehmet Kaya kayıp, adres İnönü Sokak no 5, ekipler nerede"
LOCATED_TEXT_2 = "Zeynep Arslan göçük altında, Mevlana Mah. no 3, Kilis yardım edin lütfen"


def tweet_obj(tid, text, ts="2023-02-06T05:00:00Z"):
    return {"id": tid, "text": text, "created_at": ts}


@pytest.fixture()
def client(tmp_path, model_dir):
    config = ServerConfig(
        store_path=str(tmp_path / "triage.db"),
        vectorizer_path=str(model_dir / "vectorizer.json"),
        classifier_path=str(model_dir / "classifier.json"),
        crf_path=str(model_dir / "crf.json"),
        max_batch=50,
    )
    app = create_app(config)
    with TestClient(app) as tc:
        yield tc
    app.state.store.close()


def seed_batch(client):
    batch = [
        tweet_obj("n1", NEGATIVE_TEXT, "2023-02-06T05:00:00Z"),
        tweet_obj("l1", LOCATED_TEXT, "2023-02-06T05:01:00Z"),
        tweet_obj("f1", TAGFAIL_TEXT, "2023-02-06T05:02:00Z"),
        tweet_obj("u1", UNLOCATED_TEXT, "2023-02-06T05:03:00Z"),
        tweet_obj("l2", LOCATED_TEXT_2, "2023-02-06T05:04:00Z"),
    ]
    response = client.post("/api/v1/tweets", json=batch)
    assert response.status_code == 200
    return response.json()


class TestIngest:
    def test_fresh_batch_accepted(self, client):
        summary = seed_batch(client)
        assert summary["accepted"] == 5
        assert summary["duplicates"] == 0
        assert summary["rejected"] == 0
        assert summary["stats"]["ingested"] == 5

    def test_reposting_is_idempotent(self, client):
        seed_batch(client)
        before = client.get("/api/v1/stats").json()
        summary = seed_batch(client)
        assert summary["accepted"] == 0
        assert summary["duplicates"] == 5
        assert summary["stats"]["ingested"] == 0
        assert client.get("/api/v1/stats").json() == before

    def test_malformed_body_400(self, client):
        response = client.post("/api/v1/tweets", content=b"[", headers={"content-type": "application/json"})
        assert response.status_code == 400
        assert "error" in response.json()

    def test_non_array_body_400(self, client):
        response = client.post("/api/v1/tweets", json={"id": "1"})
        assert response.status_code == 400

    def test_oversized_batch_413(self, client):
        batch = [tweet_obj(f"t{i}", NEGATIVE_TEXT) for i in range(51)]
        response = client.post("/api/v1/tweets", json=batch)
        assert response.status_code == 413

    def test_bad_tweet_does_not_sink_batch(self, client):
        batch = [
            tweet_obj("ok1", NEGATIVE_TEXT),
            {"id": "broken"},  # missing fields
            tweet_obj("ok2", TAGFAIL_TEXT),
        ]
        summary = client.post("/api/v1/tweets", json=batch).json()
        assert summary["accepted"] == 2
        assert summary["rejected"] == 1

    def test_funnel_conservation_after_each_batch(self, client):
        seed_batch(client)
        stats = client.get("/api/v1/stats").json()
        PipelineStats(**stats).check()
        assert stats["ingested"] == 5
        assert stats["classified_negative"] == 1
        assert stats["tag_failed"] == 1
        assert stats["located"] == 2
        assert stats["unlocated"] == 1


class TestResults:
    def test_default_ordering_newest_first(self, client):
        seed_batch(client)
        page = client.get("/api/v1/results").json()
        assert page["total"] == 5
        stamps = [item["created_at"] for item in page["items"]]
        assert stamps == sorted(stamps, reverse=True)

    def test_paging_partitions(self, client):
        seed_batch(client)
        first = client.get("/api/v1/results", params={"limit": 2}).json()
        second = client.get("/api/v1/results", params={"limit": 3, "offset": 2}).json()
        assert first["total"] == 5
        assert len(first["items"]) == 2
        ids = [i["tweet_id"] for i in first["items"]] + [i["tweet_id"] for i in second["items"]]
        assert len(set(ids)) == 5

    def test_stage_filter_subset(self, client):
        seed_batch(client)
        everything = client.get("/api/v1/results").json()
        located = client.get("/api/v1/results", params={"stage": "located"}).json()
        all_ids = {i["tweet_id"] for i in everything["items"]}
        located_ids = {i["tweet_id"] for i in located["items"]}
        assert located_ids <= all_ids
        assert located_ids == {"l1", "l2"}

    def test_unknown_stage_400(self, client):
        response = client.get("/api/v1/results", params={"stage": "nonsense"})
        assert response.status_code == 400

    def test_bad_paging_values_400(self, client):
        assert client.get("/api/v1/results", params={"limit": "x"}).status_code == 400
        assert client.get("/api/v1/results", params={"limit": 0}).status_code == 400

    def test_name_filter_matches_per_surface(self, client):
        seed_batch(client)
        page = client.get("/api/v1/results", params={"name": "ahmet yılmaz"}).json()
        assert [i["tweet_id"] for i in page["items"]] == ["l1"]

    def test_status_filter(self, client):
        seed_batch(client)
        page = client.get("/api/v1/results", params={"status": "göçük altında"}).json()
        assert [i["tweet_id"] for i in page["items"]] == ["l2"]

    def test_located_items_carry_bbox_points(self, client):
        seed_batch(client)
        located = client.get("/api/v1/results", params={"stage": "located"}).json()
        for item in located["items"]:
            point = item["outcome"]["point"]
            assert 35.5 <= point["lat"] <= 39.5
            assert 35.0 <= point["lon"] <= 41.5


class TestFilters:
    def test_empty_store(self, client):
        assert client.get("/api/v1/filters").json() == {"names": [], "statuses": []}

    def test_lists_located_and_unlocated_surfaces(self, client):
        seed_batch(client)
        payload = client.get("/api/v1/filters").json()
        assert "Ahmet Yılmaz" in payload["names"]
        assert "Mehmet Kaya" in payload["names"]  # unlocated still listed
        assert "Ayşe Demir" not in payload["names"]  # tag-failed excluded
        assert "enkaz altında" in payload["statuses"]

    def test_case_insensitive_dedup_keeps_first_casing(self, tmp_path, model_dir):
        # exercised at the store layer where surfaces can be forced
        from datetime import datetime, timezone

        from tweetriage.domain import EntitySpan, EntityTag, HelpLabel, Tweet
        from tweetriage.geoloc import GeocodeOutcome, GeoPoint
        from tweetriage.pipeline import Stage, TriageResult

        store = Store(tmp_path / "direct.db")
        for i, surface in enumerate(["Ali Kaya", "ALİ KAYA"]):
            tweet = Tweet(
                id=f"d{i}", text=surface + " enkaz altında",
                created_at=datetime(2023, 2, 6, 5, i, tzinfo=timezone.utc),
            )
            result = TriageResult(
                tweet_id=tweet.id,
                label=HelpLabel.CALL_FOR_HELP,
                margin=1.0,
                spans=(EntitySpan(EntityTag.PER, 0, len(surface), surface),),
                matched_city=None,
                normalized_address=None,
                outcome=GeocodeOutcome.located(GeoPoint(37.0, 36.0)),
                stage=Stage.LOCATED,
            )
            store.save_triage(tweet, result)
        names, statuses = store.list_filters()
        assert names == ["Ali Kaya"]
        assert statuses == []
        store.close()


class TestTweetDetail:
    def test_unknown_tweet_404(self, client):
        assert client.get("/api/v1/tweets/ghost").status_code == 404

    def test_detail_shape(self, client):
        seed_batch(client)
        payload = client.get("/api/v1/tweets/l1").json()
        assert payload["tweet"]["id"] == "l1"
        assert payload["result"]["stage"] == "located"
        assert payload["annotations"] == []


class TestAnnotations:
    def annotation(self, tweet_id="l1", spans=None, label="call_for_help"):
        return {
            "tweet_id": tweet_id,
            "label": label,
            "annotator": "op1",
            "spans": spans if spans is not None else [
                {"tag": "PER", "start": 0, "end": 12, "surface": "Ahmet Yılmaz"}
            ],
        }

    def test_valid_record_stored(self, client):
        seed_batch(client)
        response = client.post("/api/v1/annotations", json=self.annotation())
        assert response.status_code == 200
        assert response.json()["created_at"]
        detail = client.get("/api/v1/tweets/l1").json()
        assert len(detail["annotations"]) == 1

    def test_unknown_tweet_404(self, client):
        response = client.post("/api/v1/annotations", json=self.annotation(tweet_id="ghost"))
        assert response.status_code == 404

    def test_bad_offsets_422(self, client):
        seed_batch(client)
        bad = self.annotation(spans=[{"tag": "PER", "start": 0, "end": 9999, "surface": "x"}])
        assert client.post("/api/v1/annotations", json=bad).status_code == 422

    def test_surface_mismatch_422(self, client):
        seed_batch(client)
        bad = self.annotation(spans=[{"tag": "PER", "start": 0, "end": 3, "surface": "zzz"}])
        assert client.post("/api/v1/annotations", json=bad).status_code == 422

    def test_negative_label_with_spans_422(self, client):
        seed_batch(client)
        bad = self.annotation(label="not_call_for_help")
        assert client.post("/api/v1/annotations", json=bad).status_code == 422

    def test_malformed_body_400(self, client):
        seed_batch(client)
        assert client.post("/api/v1/annotations", json={"tweet_id": "l1"}).status_code == 400

    def test_upsert_replaces_previous(self, client):
        seed_batch(client)
        client.post("/api/v1/annotations", json=self.annotation())
        replacement = self.annotation(
            spans=[{"tag": "CITY", "start": 51, "end": 56, "surface": "Hatay"}]
        )
        assert client.post("/api/v1/annotations", json=replacement).status_code == 200
        detail = client.get("/api/v1/tweets/l1").json()
        assert len(detail["annotations"]) == 1
        assert detail["annotations"][0]["spans"][0]["tag"] == "CITY"


class TestStats:
    def test_fresh_store_zeros(self, client):
        stats = client.get("/api/v1/stats").json()
        assert all(v == 0 for v in stats.values())

    def test_additive_across_batches(self, client):
        first = client.post(
            "/api/v1/tweets", json=[tweet_obj("a1", NEGATIVE_TEXT)]
        ).json()["stats"]
        second = client.post(
            "/api/v1/tweets", json=[tweet_obj("a2", LOCATED_TEXT)]
        ).json()["stats"]
        total = client.get("/api/v1/stats").json()
        summed = {k: first[k] + second[k] for k in first}
        assert total == summed


class TestUiConfig:
    def test_config_served(self, client):
        payload = client.get("/config.json").json()
        assert "tile_url" in payload
        assert payload["bbox"]["min_lat"] == 35.5
