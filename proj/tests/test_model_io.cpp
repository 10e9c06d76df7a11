#include <doctest.h>

#include <filesystem>
#include <random>

#include <json.hpp>

#include "cfid/errors.hpp"
#include "cfid/model_io.hpp"

using namespace cfid;

namespace {

GenerativeModel random_model(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.01, 1.0);

  GenerativeModel m;
  m.hyper = {3, 4, 15.0, 0.1, {0.0, 5.0}, seed};
  m.projection.A = Eigen::MatrixXd::NullaryExpr(
      3, 8, [&](Eigen::Index, Eigen::Index) { return g(rng); });
  normalize_rows(m.projection.A);
  m.standardizer.mean = Vector8::NullaryExpr([&]() { return g(rng); });
  m.standardizer.std = Vector8::NullaryExpr([&]() { return u(rng) + 0.5; });
  for (int q = 0; q < 4; ++q) {
    Eigen::MatrixXd B = Eigen::MatrixXd::NullaryExpr(
        3, 3, [&](Eigen::Index, Eigen::Index) { return g(rng); });
    m.states.push_back(
        {Eigen::VectorXd::NullaryExpr(3, [&](Eigen::Index) { return g(rng); }),
         B * B.transpose() + 0.2 * Eigen::MatrixXd::Identity(3, 3)});
  }
  for (const char* id : {"D1", "D2", "D3"}) {
    Eigen::VectorXd w = Eigen::VectorXd::NullaryExpr(4, [&](Eigen::Index) { return u(rng); });
    m.driver_ids.emplace_back(id);
    m.profiles.push_back({w / w.sum()});
  }
  return m;
}

}  // namespace

TEST_CASE("model json round-trips every float bit-exactly") {
  const GenerativeModel m = random_model(99);
  const std::string text = model_to_json_string(m);
  const GenerativeModel r = model_from_json_string(text);

  CHECK((r.projection.A.array() == m.projection.A.array()).all());
  CHECK((r.standardizer.mean.array() == m.standardizer.mean.array()).all());
  CHECK((r.standardizer.std.array() == m.standardizer.std.array()).all());
  REQUIRE(r.states.size() == m.states.size());
  for (std::size_t q = 0; q < m.states.size(); ++q) {
    CHECK((r.states[q].mu.array() == m.states[q].mu.array()).all());
    CHECK((r.states[q].sigma.array() == m.states[q].sigma.array()).all());
  }
  CHECK(r.driver_ids == m.driver_ids);
  for (std::size_t k = 0; k < m.profiles.size(); ++k)
    CHECK((r.profiles[k].omega.array() == m.profiles[k].omega.array()).all());
  CHECK(r.hyper.M == m.hyper.M);
  CHECK(r.hyper.seed == m.hyper.seed);

  // serialization is canonical: a second dump is byte-identical
  CHECK(model_to_json_string(r) == text);
}

TEST_CASE("save/load through the filesystem") {
  const auto dir = std::filesystem::temp_directory_path() / "cfid_model_io_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "model.json";
  const GenerativeModel m = random_model(7);
  save_model(path, m);
  const GenerativeModel r = load_model(path);
  CHECK((r.projection.A.array() == m.projection.A.array()).all());
  std::filesystem::remove_all(dir);
}

TEST_CASE("schema version and format are enforced") {
  const GenerativeModel m = random_model(1);
  auto doc = nlohmann::json::parse(model_to_json_string(m));
  doc["version"] = 999;
  CHECK_THROWS_AS(model_from_json_string(doc.dump()), ValidationError);
  doc["version"] = kModelSchemaVersion;
  doc["format"] = "something-else";
  CHECK_THROWS_AS(model_from_json_string(doc.dump()), ValidationError);
  CHECK_THROWS_AS(model_from_json_string("{not json"), ValidationError);
  CHECK_THROWS_AS(load_model("/nonexistent/model.json"), ValidationError);
}

TEST_CASE("malformed documents are rejected with context") {
  const GenerativeModel m = random_model(2);
  auto doc = nlohmann::json::parse(model_to_json_string(m));
  doc.erase("states");
  CHECK_THROWS_AS(model_from_json_string(doc.dump()), ValidationError);

  auto doc2 = nlohmann::json::parse(model_to_json_string(m));
  doc2["profiles"]["D1"] = {0.5, 0.5};  // wrong length
  CHECK_THROWS_AS(model_from_json_string(doc2.dump()), ValidationError);
}
