// Read API: bearer tokens, scope enforcement, dataset discovery, and the
// aggregation queries, checked against hand computations and a brute-force
// scan of the source rows.
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "fabric/access/query.hpp"
#include "fabric/access/token.hpp"
#include "fabric/crypto.hpp"
#include "fabric/error.hpp"
#include "fabric/model/catalog.hpp"
#include "fabric/store/datastore.hpp"
#include "support.hpp"

using namespace fabric;
using namespace fabric::access;

namespace {

const std::string kKey = "unit-test-signing-key";

AccessToken dev_token(const std::string& study = "teststudy") {
  return AccessToken{{{"dev", study}}, testsup::far_future(), "tests"};
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::parse_error;
}

}  // namespace

TEST_CASE("tokens sign and verify with shared key material") {
  const auto expires = testsup::at("2030-01-01T00:00:00Z");
  const std::string token =
      sign_token(kKey, {{"dev", "teststudy"}, {"prod", "other"}}, expires, "analyst-7");

  CHECK(token.rfind("fab1.", 0) == 0);
  CHECK(std::count(token.begin(), token.end(), '.') == 2);

  TokenVerifier verifier(kKey, [] { return testsup::at("2024-01-01T00:00:00Z"); });
  auto parsed = verifier.verify(token);
  REQUIRE(parsed.scopes.size() == 2);
  CHECK(parsed.scopes[0].environment == "dev");
  CHECK(parsed.scopes[0].study_id == "teststudy");
  CHECK(parsed.scopes[1].environment == "prod");
  CHECK(parsed.expires_at == expires);
  CHECK(parsed.subject == "analyst-7");

  SUBCASE("coverage is exact pair membership") {
    CHECK(parsed.covers("dev", "teststudy"));
    CHECK(parsed.covers("prod", "other"));
    CHECK_FALSE(parsed.covers("dev", "other"));
    CHECK_FALSE(parsed.covers("prod", "teststudy"));
    CHECK_FALSE(parsed.covers("staging", "teststudy"));
  }
}

TEST_CASE("token verification failure modes") {
  const auto expires = testsup::at("2024-06-01T00:00:00Z");
  const std::string good = sign_token(kKey, {{"dev", "teststudy"}}, expires);
  TokenVerifier verifier(kKey, [] { return testsup::at("2024-01-01T00:00:00Z"); });

  auto expect = [&](const std::string& token, ErrorCode want,
                    const TokenVerifier& v) {
    try {
      v.verify(token);
      FAIL("expected failure for " << token.substr(0, 24));
    } catch (const Error& e) {
      CHECK(std::string(to_string(e.code())) == std::string(to_string(want)));
    }
  };

  SUBCASE("wrong prefix") { expect("fab2." + good.substr(5), ErrorCode::malformed_token, verifier); }
  SUBCASE("no signature part") {
    expect(good.substr(0, good.rfind('.')), ErrorCode::malformed_token, verifier);
  }
  SUBCASE("payload not base64url") {
    expect("fab1.!!!.AAAA", ErrorCode::malformed_token, verifier);
  }
  SUBCASE("signature from a different key") {
    const std::string forged = sign_token("attacker-key", {{"dev", "teststudy"}}, expires);
    expect(forged, ErrorCode::invalid_signature, verifier);
  }
  SUBCASE("tampered payload keeps the old mac") {
    // Re-encode a modified payload but keep the original signature.
    const auto dot = good.find('.', 5);
    auto payload = base64url_decode(good.substr(5, dot - 5));
    REQUIRE(payload.has_value());
    auto doc = Json::parse(*payload);
    doc["scopes"][0]["study_id"] = "stolen";
    const std::string tampered =
        "fab1." + base64url_encode(doc.dump()) + good.substr(good.rfind('.'));
    expect(tampered, ErrorCode::invalid_signature, verifier);
  }
  SUBCASE("valid mac over a non-json payload") {
    const std::string body = "fab1." + base64url_encode("not json at all");
    expect(body + "." + base64url_encode(hmac_sha256(kKey, body)),
           ErrorCode::malformed_token, verifier);
  }
  SUBCASE("payload missing scopes") {
    const std::string body =
        "fab1." + base64url_encode(Json{{"expires_at", "2030-01-01T00:00:00Z"}}.dump());
    expect(body + "." + base64url_encode(hmac_sha256(kKey, body)),
           ErrorCode::malformed_token, verifier);
  }
  SUBCASE("expiry is exclusive: now == expires_at is expired") {
    TokenVerifier at_expiry(kKey, [expires] { return expires; });
    expect(good, ErrorCode::expired, at_expiry);
    TokenVerifier just_before(
        kKey, [expires] { return Instant::from_millis(expires.millis() - 1); });
    CHECK_NOTHROW(just_before.verify(good));
  }
  SUBCASE("unconfigured verifier refuses everything") {
    TokenVerifier blank;
    CHECK_FALSE(blank.configured());
    expect(good, ErrorCode::invalid_config, blank);
  }
}

TEST_CASE("key material loads with trailing newlines trimmed") {
  testsup::TempDir dir("key");
  const auto file = dir.path() / "token.key";
  std::ofstream(file) << "s3cret-bytes\n";
  CHECK(load_key_material(file) == "s3cret-bytes");
  std::ofstream(file) << "crlf-key\r\n";
  CHECK(load_key_material(file) == "crlf-key");
  std::ofstream(file) << "\n";
  CHECK_THROWS_AS(load_key_material(file), Error);
}

namespace {

struct AccessHarness {
  testsup::TempDir dir{"access"};
  store::DataStore store{dir.path() / "store"};
  model::SchemaCatalog schemas{dir.path() / "schemas"};
  DatasetCatalog catalog{store, schemas};

  AccessHarness() {
    schemas.publish(testsup::small_code_doc());
    store.save_run("run-1", Json{{"run_id", "run-1"}, {"succeeded", true}});
  }

  void publish(const std::string& environment, const std::string& dataset,
               const std::string& study, const std::string& csv, std::uint64_t rows,
               Json sidecar = Json{{"time_coverage", nullptr}}) {
    store::OutboundRequest req;
    req.environment = environment;
    req.dataset_id = dataset;
    req.study_id = study;
    req.code_schema_ref = {"daily_counts", 1};
    req.csv = csv;
    req.row_count = rows;
    req.sidecar = std::move(sidecar);
    req.generated_at = testsup::at("2024-03-10T00:00:00Z");
    req.run_id = "run-1";
    req.code_validated = true;
    store.publish_outbound(req);
  }
};

const char* kCountsCsv =
    "day,total\n"
    "2024-03-01T06:30:00Z,4\n"
    "2024-03-01T07:10:00Z,6\n"
    "2024-03-01T07:45:00Z,\n"
    "2024-03-02T00:00:00Z,10\n"
    "2024-03-02T23:59:59Z,-3\n"
    "2024-03-03T12:00:00Z,oops\n";

QueryRequest counts_query(Aggregate agg, GroupBy group) {
  QueryRequest req;
  req.dataset_id = "daily";
  req.field = "total";
  req.from = testsup::at("2024-03-01T00:00:00Z");
  req.to = testsup::at("2024-03-02T23:59:59Z");
  req.group_by = group;
  req.aggregate = agg;
  return req;
}

}  // namespace

TEST_CASE("dataset listing is scoped and sorted") {
  AccessHarness h;
  h.publish("dev", "daily", "teststudy", kCountsCsv, 6,
            Json{{"time_coverage", Json{{"from", "2024-03-01T06:30:00Z"},
                                        {"to", "2024-03-03T12:00:00Z"}}}});
  h.publish("prod", "daily", "teststudy", kCountsCsv, 6);
  h.publish("dev", "alpha", "otherstudy", "day,total\n", 0);

  auto mine = h.catalog.list_datasets(dev_token());
  REQUIRE(mine.size() == 1);
  CHECK(mine[0].dataset_id == "daily");
  CHECK(mine[0].environment == "dev");
  CHECK(mine[0].row_count == 6);
  REQUIRE(mine[0].coverage.has_value());
  CHECK(mine[0].coverage->first == testsup::at("2024-03-01T06:30:00Z"));
  CHECK(mine[0].coverage->second == testsup::at("2024-03-03T12:00:00Z"));

  AccessToken wide{{{"dev", "teststudy"}, {"prod", "teststudy"}, {"dev", "otherstudy"}},
                   testsup::far_future(),
                   ""};
  auto all = h.catalog.list_datasets(wide);
  REQUIRE(all.size() == 3);
  CHECK(all[0].dataset_id == "alpha");
  CHECK(all[1].dataset_id == "daily");
  CHECK(all[1].environment == "dev");
  CHECK(all[2].environment == "prod");
  CHECK_FALSE(all[2].coverage.has_value());

  CHECK(h.catalog.list_datasets(AccessToken{{}, testsup::far_future(), ""}).empty());
}

TEST_CASE("aggregates match hand computation") {
  AccessHarness h;
  h.publish("dev", "daily", "teststudy", kCountsCsv, 6);
  const auto token = dev_token();

  SUBCASE("count per day skips null and garbage cells") {
    auto series = h.catalog.query_series(counts_query(Aggregate::count, GroupBy::day), token);
    CHECK(series.row_count == 4);
    REQUIRE(series.points.size() == 2);
    CHECK(series.points[0].first == testsup::at("2024-03-01T00:00:00Z"));
    CHECK(series.points[0].second == Json(2));
    CHECK(series.points[1].first == testsup::at("2024-03-02T00:00:00Z"));
    CHECK(series.points[1].second == Json(2));
  }

  SUBCASE("sum per day is exact over integers") {
    auto series = h.catalog.query_series(counts_query(Aggregate::sum, GroupBy::day), token);
    REQUIRE(series.points.size() == 2);
    CHECK(series.points[0].second == Json(10));
    CHECK(series.points[1].second == Json(7));
    CHECK(series.points[0].second.is_number_integer());
  }

  SUBCASE("min and max honor negatives") {
    auto lo = h.catalog.query_series(counts_query(Aggregate::min, GroupBy::day), token);
    CHECK(lo.points[0].second == Json(4));
    CHECK(lo.points[1].second == Json(-3));
    auto hi = h.catalog.query_series(counts_query(Aggregate::max, GroupBy::day), token);
    CHECK(hi.points[0].second == Json(6));
    CHECK(hi.points[1].second == Json(10));
  }

  SUBCASE("mean per day") {
    auto series = h.catalog.query_series(counts_query(Aggregate::mean, GroupBy::day), token);
    CHECK(series.points[0].second.get<double>() == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(series.points[1].second.get<double>() == doctest::Approx(3.5).epsilon(1e-12));
  }

  SUBCASE("hour buckets are UTC aligned") {
    auto series = h.catalog.query_series(counts_query(Aggregate::count, GroupBy::hour), token);
    REQUIRE(series.points.size() == 4);
    CHECK(series.points[0].first == testsup::at("2024-03-01T06:00:00Z"));
    CHECK(series.points[1].first == testsup::at("2024-03-01T07:00:00Z"));
    CHECK(series.points[1].second == Json(1));  // the null row contributes nothing
    CHECK(series.points[2].first == testsup::at("2024-03-02T00:00:00Z"));
    CHECK(series.points[3].first == testsup::at("2024-03-02T23:00:00Z"));
  }

  SUBCASE("no grouping yields one bucket anchored at the range start") {
    auto series = h.catalog.query_series(counts_query(Aggregate::sum, GroupBy::none), token);
    REQUIRE(series.points.size() == 1);
    CHECK(series.points[0].first == testsup::at("2024-03-01T00:00:00Z"));
    CHECK(series.points[0].second == Json(17));
    CHECK(series.row_count == 4);
  }

  SUBCASE("range is inclusive on both ends") {
    auto req = counts_query(Aggregate::count, GroupBy::none);
    req.from = testsup::at("2024-03-02T00:00:00Z");
    req.to = testsup::at("2024-03-02T00:00:00Z");
    auto series = h.catalog.query_series(req, token);
    CHECK(series.row_count == 1);
    REQUIRE(series.points.size() == 1);
    CHECK(series.points[0].second == Json(1));
  }

  SUBCASE("an empty range returns no points") {
    auto req = counts_query(Aggregate::count, GroupBy::day);
    req.from = testsup::at("2030-01-01T00:00:00Z");
    req.to = testsup::at("2030-01-02T00:00:00Z");
    auto series = h.catalog.query_series(req, token);
    CHECK(series.row_count == 0);
    CHECK(series.points.empty());
  }

  SUBCASE("count works on non-numeric fields") {
    auto req = counts_query(Aggregate::count, GroupBy::none);
    req.field = "day";
    auto series = h.catalog.query_series(req, token);
    CHECK(series.row_count == 5);  // the null-total row has a day value
  }

  SUBCASE("numeric aggregates refuse non-numeric fields") {
    auto req = counts_query(Aggregate::sum, GroupBy::none);
    req.field = "day";
    CHECK(code_of([&] { h.catalog.query_series(req, token); }) == ErrorCode::unknown_field);
  }
}

TEST_CASE("float fields aggregate as doubles") {
  AccessHarness h;
  Json doc{{"schema_id", "float_series"},
           {"version", 1},
           {"kind", "code"},
           {"pipeline_id", "floats"},
           {"fields", Json::array({Json{{"name", "day"}, {"kind", "timestamp"}, {"required", true}},
                                   Json{{"name", "value"}, {"kind", "float"}}})},
           {"vocabulary_bindings", Json{{"day", "observation_day"}, {"value", "mean_value"}}}};
  h.schemas.publish(doc.dump());

  store::OutboundRequest req;
  req.environment = "dev";
  req.dataset_id = "floaty";
  req.study_id = "teststudy";
  req.code_schema_ref = {"float_series", 1};
  req.csv =
      "day,value\n"
      "2024-03-01T00:00:00Z,1.5\n"
      "2024-03-01T01:00:00Z,2.25\n"
      "2024-03-02T00:00:00Z,-0.5\n";
  req.row_count = 3;
  req.sidecar = Json{{"time_coverage", nullptr}};
  req.generated_at = testsup::at("2024-03-10T00:00:00Z");
  req.run_id = "run-1";
  req.code_validated = true;
  h.store.publish_outbound(req);

  QueryRequest q;
  q.dataset_id = "floaty";
  q.field = "value";
  q.from = testsup::at("2024-03-01T00:00:00Z");
  q.to = testsup::at("2024-03-02T23:59:59Z");
  q.aggregate = Aggregate::sum;
  auto series = h.catalog.query_series(q, dev_token());
  REQUIRE(series.points.size() == 1);
  CHECK(series.points[0].second.get<double>() == doctest::Approx(3.25).epsilon(1e-12));

  q.aggregate = Aggregate::mean;
  q.group_by = GroupBy::day;
  series = h.catalog.query_series(q, dev_token());
  REQUIRE(series.points.size() == 2);
  CHECK(series.points[0].second.get<double>() == doctest::Approx(1.875).epsilon(1e-12));
  CHECK(series.points[1].second.get<double>() == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("out-of-scope datasets are indistinguishable from absent ones") {
  AccessHarness h;
  h.publish("dev", "daily", "teststudy", kCountsCsv, 6);

  auto req = counts_query(Aggregate::count, GroupBy::none);
  std::string hidden_message;
  try {
    h.catalog.query_series(req, dev_token("otherstudy"));
    FAIL("expected unknown_dataset");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unknown_dataset);
    hidden_message = e.detail();
  }
  // The denial for an existing-but-unauthorized dataset reads exactly like
  // the one for a dataset that was never published.
  CHECK(hidden_message == "no dataset 'daily'");

  req.dataset_id = "ghost";
  try {
    h.catalog.query_series(req, dev_token());
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unknown_dataset);
    CHECK(e.detail() == "no dataset 'ghost'");
  }
}

TEST_CASE("query request validation") {
  AccessHarness h;
  h.publish("dev", "daily", "teststudy", kCountsCsv, 6);

  SUBCASE("unknown field") {
    auto req = counts_query(Aggregate::count, GroupBy::none);
    req.field = "nonexistent";
    CHECK(code_of([&] { h.catalog.query_series(req, dev_token()); }) ==
          ErrorCode::unknown_field);
  }
  SUBCASE("inverted range") {
    auto req = counts_query(Aggregate::count, GroupBy::none);
    std::swap(req.from, req.to);
    CHECK(code_of([&] { h.catalog.query_series(req, dev_token()); }) == ErrorCode::bad_range);
  }
  SUBCASE("json round trip") {
    auto req = counts_query(Aggregate::mean, GroupBy::hour);
    auto back = QueryRequest::from_json(req.to_json());
    CHECK(back.to_json() == req.to_json());
  }
  SUBCASE("document defects") {
    auto doc = counts_query(Aggregate::mean, GroupBy::hour).to_json();
    doc["surprise"] = 1;
    CHECK(code_of([&] { QueryRequest::from_json(doc); }) == ErrorCode::parse_error);

    doc = counts_query(Aggregate::mean, GroupBy::hour).to_json();
    doc["group_by"] = "fortnight";
    CHECK(code_of([&] { QueryRequest::from_json(doc); }) == ErrorCode::parse_error);

    doc = counts_query(Aggregate::mean, GroupBy::hour).to_json();
    doc["aggregate"] = "median";
    CHECK(code_of([&] { QueryRequest::from_json(doc); }) == ErrorCode::parse_error);

    doc = counts_query(Aggregate::mean, GroupBy::hour).to_json();
    doc["from"] = "yesterday";
    CHECK(code_of([&] { QueryRequest::from_json(doc); }) == ErrorCode::bad_range);

    doc = counts_query(Aggregate::mean, GroupBy::hour).to_json();
    doc["from"] = "2024-06-01T00:00:00Z";
    doc["to"] = "2024-05-01T00:00:00Z";
    CHECK(code_of([&] { QueryRequest::from_json(doc); }) == ErrorCode::bad_range);
  }
}

TEST_CASE("randomized queries agree with a brute-force scan") {
  AccessHarness h;
  std::mt19937_64 rng(987654);

  // Source of truth: generated rows, kept independent of the CSV parser.
  struct Row {
    std::int64_t ts_ms;
    std::optional<std::int64_t> value;
  };
  std::vector<Row> rows;
  const std::int64_t base = testsup::at("2024-03-01T00:00:00Z").millis();
  std::string csv = "day,total\n";
  for (int i = 0; i < 60; ++i) {
    Row row;
    row.ts_ms = base + static_cast<std::int64_t>(rng() % (4 * 86400000LL));
    row.ts_ms -= row.ts_ms % 1000;  // RFC 3339 rendering is second-precision here
    if (rng() % 8 != 0) row.value = static_cast<std::int64_t>(rng() % 2001) - 1000;
    rows.push_back(row);
    csv += Instant::from_millis(row.ts_ms).to_rfc3339() + "," +
           (row.value ? std::to_string(*row.value) : "") + "\n";
  }
  h.publish("dev", "daily", "teststudy", csv, rows.size());
  const auto token = dev_token();

  const Aggregate aggs[] = {Aggregate::count, Aggregate::mean, Aggregate::min, Aggregate::max,
                            Aggregate::sum};
  const GroupBy groups[] = {GroupBy::none, GroupBy::hour, GroupBy::day};

  for (int trial = 0; trial < 150; ++trial) {
    QueryRequest req;
    req.dataset_id = "daily";
    req.field = "total";
    std::int64_t a = base + static_cast<std::int64_t>(rng() % (5 * 86400000LL)) - 86400000;
    std::int64_t b = base + static_cast<std::int64_t>(rng() % (5 * 86400000LL)) - 86400000;
    if (a > b) std::swap(a, b);
    req.from = Instant::from_millis(a);
    req.to = Instant::from_millis(b);
    req.aggregate = aggs[rng() % 5];
    req.group_by = groups[rng() % 3];

    // Brute force per bucket.
    std::map<std::int64_t, std::vector<std::int64_t>> expect;
    for (const auto& row : rows) {
      if (row.ts_ms < a || row.ts_ms > b || !row.value) continue;
      std::int64_t bucket = a;
      if (req.group_by == GroupBy::hour) bucket = row.ts_ms - row.ts_ms % 3600000;
      if (req.group_by == GroupBy::day) bucket = row.ts_ms - row.ts_ms % 86400000;
      expect[bucket].push_back(*row.value);
    }

    auto series = h.catalog.query_series(req, token);
    CAPTURE(trial);
    CAPTURE(req.to_json().dump());

    std::uint64_t expected_rows = 0;
    for (const auto& [_, vals] : expect) expected_rows += vals.size();
    CHECK(series.row_count == expected_rows);
    REQUIRE(series.points.size() == expect.size());

    std::size_t i = 0;
    for (const auto& [bucket, vals] : expect) {
      CHECK(series.points[i].first.millis() == bucket);
      const Json& got = series.points[i].second;
      switch (req.aggregate) {
        case Aggregate::count: CHECK(got.get<std::uint64_t>() == vals.size()); break;
        case Aggregate::min:
          CHECK(got.get<std::int64_t>() == *std::min_element(vals.begin(), vals.end()));
          break;
        case Aggregate::max:
          CHECK(got.get<std::int64_t>() == *std::max_element(vals.begin(), vals.end()));
          break;
        case Aggregate::sum: {
          std::int64_t sum = 0;
          for (auto v : vals) sum += v;
          CHECK(got.get<std::int64_t>() == sum);
          break;
        }
        case Aggregate::mean: {
          long double sum = 0;
          for (auto v : vals) sum += static_cast<long double>(v);
          const double want = static_cast<double>(sum / static_cast<long double>(vals.size()));
          const double have = got.get<double>();
          CHECK(std::fabs(have - want) <= 1e-9 * std::max(1.0, std::fabs(want)));
          break;
        }
      }
      ++i;
    }
  }
}
