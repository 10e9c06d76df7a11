#include "cfid/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cfid/csv_io.hpp"
#include "cfid/errors.hpp"

namespace cfid {

using nlohmann::json;

static json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

static json matrix_to_json(const Eigen::MatrixXd& m) {  // row-major
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

static Eigen::VectorXd vector_from_json(const json& a, const char* what) {
  if (!a.is_array()) throw ValidationError(std::string("model json: ") + what + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

static Eigen::MatrixXd matrix_from_json(const json& a, const char* what) {
  if (!a.is_array() || a.empty())
    throw ValidationError(std::string("model json: ") + what + " must be a non-empty array of rows");
  const std::size_t cols = a[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != cols)
      throw ValidationError(std::string("model json: ragged rows in ") + what);
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a[i][j].get<double>();
  }
  return m;
}

std::string model_to_json_string(const GenerativeModel& model) {
  json doc;
  doc["format"] = "cfid-model";
  doc["version"] = kModelSchemaVersion;
  doc["hyper"] = {{"M", model.hyper.M},
                  {"Q", model.hyper.Q},
                  {"window_T", model.hyper.window_T},
                  {"dt", model.hyper.dt},
                  {"tau_min", model.hyper.rt.tau_min},
                  {"tau_max", model.hyper.rt.tau_max},
                  {"seed", model.hyper.seed}};
  doc["standardizer"] = {{"mean", vector_to_json(model.standardizer.mean)},
                         {"std", vector_to_json(model.standardizer.std)}};
  doc["A"] = matrix_to_json(model.projection.A);
  json states = json::array();
  for (const auto& s : model.states)
    states.push_back({{"mu", vector_to_json(s.mu)}, {"sigma", matrix_to_json(s.sigma)}});
  doc["states"] = std::move(states);
  json profiles = json::object();
  for (std::size_t k = 0; k < model.driver_ids.size(); ++k)
    profiles[model.driver_ids[k]] = vector_to_json(model.profiles[k].omega);
  doc["profiles"] = std::move(profiles);
  return doc.dump(2) + "\n";
}

GenerativeModel model_from_json_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model json: parse error: ") + e.what());
  }
  try {
    if (doc.value("format", "") != "cfid-model")
      throw ValidationError("model json: not a cfid-model document");
    if (doc.at("version").get<int>() != kModelSchemaVersion)
      throw ValidationError("model json: unsupported schema version " +
                            doc.at("version").dump() + " (expected " +
                            std::to_string(kModelSchemaVersion) + ")");

    GenerativeModel m;
    const json& h = doc.at("hyper");
    m.hyper.M = h.at("M").get<int>();
    m.hyper.Q = h.at("Q").get<int>();
    m.hyper.window_T = h.at("window_T").get<double>();
    m.hyper.dt = h.at("dt").get<double>();
    m.hyper.rt.tau_min = h.at("tau_min").get<double>();
    m.hyper.rt.tau_max = h.at("tau_max").get<double>();
    m.hyper.seed = h.at("seed").get<std::uint64_t>();

    m.standardizer.mean = vector_from_json(doc.at("standardizer").at("mean"), "standardizer.mean");
    m.standardizer.std = vector_from_json(doc.at("standardizer").at("std"), "standardizer.std");
    m.projection.A = matrix_from_json(doc.at("A"), "A");

    for (const auto& s : doc.at("states"))
      m.states.push_back(
          {vector_from_json(s.at("mu"), "state.mu"), matrix_from_json(s.at("sigma"), "state.sigma")});

    for (const auto& [id, omega] : doc.at("profiles").items()) {
      m.driver_ids.push_back(id);
      m.profiles.push_back(DriverProfile{vector_from_json(omega, "profile")});
    }
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model json: malformed document: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const GenerativeModel& model) {
  atomic_write_file(path, model_to_json_string(model));
}

GenerativeModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open model file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json_string(buf.str());
}

}  // namespace cfid
