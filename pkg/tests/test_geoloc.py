import httpx
import pytest
from hypothesis import given, strategies as st

from oracles import all_strings, osa_bruteforce
from tweetriage.domain import EntitySpan, EntityTag
from tweetriage.geoloc import (
    CITY_POINTS,
    DEFAULT_BBOX,
    DEFAULT_CITIES,
    BoundingBox,
    CityList,
    GeocodeOutcome,
    Geocoder,
    GeoPoint,
    HttpGeocodingProvider,
    HttpProviderConfig,
    MockGeocodingProvider,
    OutcomeKind,
    ProviderError,
    damerau_levenshtein,
    default_mock_provider,
    match_city,
    normalize_address,
    within_bbox,
)


def addr_span(text, start, end):
    return EntitySpan(EntityTag.ADDR, start, end, text[start:end])


class TestDamerauLevenshtein:
    @pytest.mark.parametrize(
        "a,b,expected",
        [
            ("hatay", "hatay", 0),
            ("abcd", "acbd", 1),
            ("ca", "abc", 3),  # pins the OSA variant (unrestricted would give 2)
            ("kitten", "sitting", 3),
            ("", "abc", 3),
            ("ab", "", 2),
        ],
    )
    def test_known_distances(self, a, b, expected):
        assert damerau_levenshtein(a, b) == expected

    def test_matches_bruteforce_on_short_strings(self):
        strings = all_strings("ab", 3)
        for a in strings:
            for b in strings:
                assert damerau_levenshtein(a, b) == osa_bruteforce(a, b)

    @given(st.text(alphabet="abc", max_size=6), st.text(alphabet="abc", max_size=6))
    def test_symmetric_and_zero_iff_equal(self, a, b):
        d = damerau_levenshtein(a, b)
        assert d == damerau_levenshtein(b, a)
        assert (d == 0) == (a == b)

    @given(
        st.text(alphabet="ab", max_size=4),
        st.text(alphabet="ab", max_size=4),
        st.text(alphabet="ab", max_size=4),
    )
    def test_triangle_inequality(self, a, b, c):
        assert damerau_levenshtein(a, c) <= (
            damerau_levenshtein(a, b) + damerau_levenshtein(b, c)
        )


class TestMatchCity:
    def test_exact(self):
        assert match_city("Hatay", DEFAULT_CITIES) == "Hatay"

    def test_one_typo(self):
        assert match_city("Hatey", DEFAULT_CITIES) == "Hatay"

    def test_case_folded(self):
        assert match_city("HATAY", DEFAULT_CITIES) == "Hatay"
        assert match_city("adıyaman", DEFAULT_CITIES) == "Adıyaman"

    def test_outside_threshold_absent(self):
        assert match_city("İstanbul", DEFAULT_CITIES) is None

    def test_threshold_scales_with_length(self):
        cities = CityList(("Kahramanmaraş",))
        assert match_city("Kahramanmarş", cities) == "Kahramanmaraş"
        assert match_city("xy", cities) is None

    def test_tie_breaks_by_list_order(self):
        cities = CityList(("Abc", "Abd"))
        assert match_city("Abe", cities) == "Abc"

    def test_result_is_list_element_verbatim(self):
        for raw in ("hatay", "HATAY", "Hatey"):
            result = match_city(raw, DEFAULT_CITIES)
            assert result in DEFAULT_CITIES.names

    def test_empty_raw_rejected(self):
        with pytest.raises(ValueError):
            match_city("", DEFAULT_CITIES)


class TestCityList:
    def test_non_empty(self):
        with pytest.raises(ValueError):
            CityList(())

    def test_fold_duplicates_rejected(self):
        with pytest.raises(ValueError):
            CityList(("Hatay", "HATAY"))

    def test_from_file(self, tmp_path):
        path = tmp_path / "cities.txt"
        path.write_text("Hatay\n\nAdana\n", encoding="utf-8")
        assert CityList.from_file(path).names == ("Hatay", "Adana")


class TestNormalizeAddress:
    def test_addr_with_city(self):
        text = "atatürk cad. no:12"
        span = addr_span(text, 0, len(text))
        assert normalize_address([span], "hatay") == "Atatürk Cad. No 12 Hatay"

    def test_city_only(self):
        assert normalize_address([], "adana") == "Adana"

    def test_slash_becomes_space(self):
        text = "güllü sok, 5/3"
        span = addr_span(text, 0, len(text))
        assert normalize_address([span], "Hatay") == "Güllü Sok, 5 3 Hatay"

    def test_spans_joined_in_tweet_order(self):
        text = "mahalle x sokak y"
        first = addr_span(text, 0, 9)
        second = addr_span(text, 10, 17)
        assert normalize_address([second, first], None) == "Mahalle X Sokak Y"

    def test_both_empty_rejected(self):
        with pytest.raises(ValueError):
            normalize_address([], None)

    @given(st.text(max_size=40).filter(lambda s: any(c.isalnum() for c in s)))
    def test_output_charset_and_spacing(self, raw):
        span = EntitySpan(EntityTag.ADDR, 0, len(raw), raw)
        out = normalize_address([span], None)
        assert out == out.strip()
        assert "  " not in out
        assert all(ch.isalnum() or ch in ".,- " for ch in out)


class TestBbox:
    def test_inside(self):
        assert within_bbox(GeoPoint(37.0, 37.0), DEFAULT_BBOX)

    def test_outside(self):
        assert not within_bbox(GeoPoint(41.0, 29.0), DEFAULT_BBOX)

    def test_edge_inclusive(self):
        assert within_bbox(GeoPoint(35.5, 36.0), DEFAULT_BBOX)
        assert within_bbox(GeoPoint(39.5, 41.5), DEFAULT_BBOX)

    def test_parse(self):
        box = BoundingBox.parse("35.5,39.5,35.0,41.5")
        assert box == DEFAULT_BBOX
        with pytest.raises(ValueError):
            BoundingBox.parse("1,2,3")

    def test_invalid_ranges(self):
        with pytest.raises(ValueError):
            GeoPoint(91.0, 0.0)
        with pytest.raises(ValueError):
            BoundingBox(10.0, 5.0, 0.0, 1.0)

    def test_default_cities_inside_default_bbox(self):
        for point in CITY_POINTS.values():
            assert within_bbox(point, DEFAULT_BBOX)


class TestGeocode:
    def test_mock_table_hit(self):
        provider = MockGeocodingProvider({"Adana": GeoPoint(37.0, 35.32)})
        outcome = Geocoder(provider).geocode("Adana")
        assert outcome.kind == OutcomeKind.LOCATED
        assert outcome.point == GeoPoint(37.0, 35.32)

    def test_mock_word_scan(self):
        outcome = Geocoder(default_mock_provider()).geocode("Atatürk Cad. No 12 Hatay")
        assert outcome.kind == OutcomeKind.LOCATED
        assert outcome.point == CITY_POINTS["Hatay"]

    def test_unmapped_is_not_found(self):
        provider = MockGeocodingProvider({"Adana": GeoPoint(37.0, 35.32)})
        outcome = Geocoder(provider).geocode("Bilinmeyen Sokak")
        assert outcome.kind == OutcomeKind.NOT_FOUND

    def test_provider_error_becomes_outcome(self):
        class Failing:
            def lookup(self, address):
                raise ProviderError("malformed payload")

        outcome = Geocoder(Failing()).geocode("Adana")
        assert outcome.kind == OutcomeKind.PROVIDER_ERROR
        assert "malformed" in (outcome.message or "")

    def test_cache_idempotent(self):
        provider = MockGeocodingProvider({"Adana": GeoPoint(37.0, 35.32)})
        geocoder = Geocoder(provider)
        first = geocoder.geocode("Adana")
        second = geocoder.geocode("Adana")
        assert first == second
        assert provider.calls == 1

    def test_not_found_cached_too(self):
        provider = MockGeocodingProvider({})
        geocoder = Geocoder(provider)
        geocoder.geocode("yok")
        geocoder.geocode("yok")
        assert provider.calls == 1

    def test_provider_errors_not_cached(self):
        class FlakyProvider:
            def __init__(self):
                self.calls = 0

            def lookup(self, address):
                self.calls += 1
                if self.calls == 1:
                    raise ProviderError("down")
                return [GeoPoint(37.0, 35.0)]

        provider = FlakyProvider()
        geocoder = Geocoder(provider)
        assert geocoder.geocode("Adana").kind == OutcomeKind.PROVIDER_ERROR
        assert geocoder.geocode("Adana").kind == OutcomeKind.LOCATED

    def test_empty_address_rejected(self):
        with pytest.raises(ValueError):
            Geocoder(default_mock_provider()).geocode("")


class TestHttpProvider:
    def _provider(self, handler):
        transport = httpx.MockTransport(handler)
        config = HttpProviderConfig(url="https://geo.example/api", api_key="k")
        return HttpGeocodingProvider(config, client=httpx.Client(transport=transport))

    def test_parses_first_candidate(self):
        def handler(request):
            assert request.url.params["address"] == "Adana"
            assert request.url.params["key"] == "k"
            return httpx.Response(
                200,
                json={
                    "results": [
                        {"geometry": {"location": {"lat": 37.0, "lng": 35.32}}},
                        {"geometry": {"location": {"lat": 0.0, "lng": 0.0}}},
                    ]
                },
            )

        points = self._provider(handler).lookup("Adana")
        assert points[0] == GeoPoint(37.0, 35.32)

    def test_empty_results(self):
        def handler(request):
            return httpx.Response(200, json={"results": []})

        assert self._provider(handler).lookup("x") == []

    def test_malformed_payload_raises(self):
        def handler(request):
            return httpx.Response(200, content=b"not json")

        with pytest.raises(ProviderError):
            self._provider(handler).lookup("x")

    def test_missing_field_raises(self):
        def handler(request):
            return httpx.Response(200, json={"results": [{"geometry": {}}]})

        with pytest.raises(ProviderError):
            self._provider(handler).lookup("x")

    def test_http_error_raises(self):
        def handler(request):
            return httpx.Response(500, json={})

        with pytest.raises(ProviderError):
            self._provider(handler).lookup("x")


class TestOutcome:
    def test_constructors(self):
        p = GeoPoint(37.0, 36.0)
        assert GeocodeOutcome.located(p).kind == OutcomeKind.LOCATED
        assert GeocodeOutcome.not_found().point is None
        assert GeocodeOutcome.out_of_scope(p).point == p
        assert GeocodeOutcome.provider_error("x").message == "x"
