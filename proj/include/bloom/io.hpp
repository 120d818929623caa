#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "bloom/generators.hpp"
#include "bloom/kernel.hpp"

namespace bloom {

using Json = nlohmann::ordered_json;

namespace detail {

inline const Json& field(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(path + "." + key, "missing");
  return j.at(key);
}

inline double number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

inline RealVector real_array(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  RealVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

inline RealMatrix real_matrix(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a nonempty array of rows");
  const auto rows = j.size();
  const auto cols = j[0].is_array() ? j[0].size() : 0;
  RealMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    const auto p = path + "[" + std::to_string(i) + "]";
    const RealVector r = real_array(j[i], p);
    if (static_cast<std::size_t>(r.size()) != cols) throw ConfigError(p, "ragged row");
    m.row(static_cast<Eigen::Index>(i)) = r.transpose();
  }
  return m;
}

inline Json to_json(const RealVector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

inline Json to_json(const RealMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(RealVector(m.row(i).transpose())));
  return rows;
}

}  // namespace detail

/// Space document: `points`, `measure`, and either `metric_matrix` or
/// `coords` with `metric: {type: euclidean|snowflake, epsilon}`.
inline SpaceModel space_from_json(const Json& j, const std::string& path = "space") {
  const auto& pts = detail::field(j, "points", path);
  if (!pts.is_array()) throw ConfigError(path + ".points", "expected an array of ids");
  std::vector<std::string> ids;
  for (const auto& p : pts) ids.push_back(p.is_string() ? p.get<std::string>() : p.dump());
  RealVector mu = detail::real_array(detail::field(j, "measure", path), path + ".measure");
  const bool has_matrix = j.contains("metric_matrix");
  const bool has_coords = j.contains("coords");
  if (has_matrix == has_coords) throw ConfigError(path, "exactly one of metric_matrix or coords is required");
  if (has_matrix) {
    const auto& mm = j.at("metric_matrix");
    RealMatrix d;
    const auto n = static_cast<Eigen::Index>(ids.size());
    if (mm.is_array() && !mm.empty() && mm[0].is_number()) {
      const RealVector flat = detail::real_array(mm, path + ".metric_matrix");
      if (flat.size() != n * n) throw ValidationError("dimension", "metric_matrix has " + std::to_string(flat.size()) + " entries, expected n*n");
      d = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(flat.data(), n, n);
    } else {
      d = detail::real_matrix(mm, path + ".metric_matrix");
    }
    return SpaceModel(std::move(ids), std::move(mu), std::move(d));
  }
  RealMatrix c = detail::real_matrix(j.at("coords"), path + ".coords");
  std::string type = "euclidean";
  double eps = 0.0;
  if (j.contains("metric")) {
    const auto& m = j.at("metric");
    type = detail::field(m, "type", path + ".metric").get<std::string>();
    if (type == "snowflake") eps = detail::number(detail::field(m, "epsilon", path + ".metric"), path + ".metric.epsilon");
    else if (type != "euclidean") throw ConfigError(path + ".metric.type", "must be euclidean or snowflake");
  }
  if (c.rows() != static_cast<Eigen::Index>(ids.size())) throw ValidationError("dimension", "coordinate rows differ from point count");
  RealMatrix d = type == "snowflake" ? snowflake_metric(c, eps) : euclidean_metric(c);
  return SpaceModel(std::move(ids), std::move(mu), std::move(d), std::move(c));
}

inline Json space_to_json(const SpaceModel& s) {
  Json j;
  j["points"] = s.ids();
  j["measure"] = detail::to_json(s.measure());
  j["metric_matrix"] = detail::to_json(s.metric());
  return j;
}

inline Json read_json_file(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(file, "cannot open file");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(file, e.what());
  }
}

inline SpaceModel load_space(const std::string& file) { return space_from_json(read_json_file(file), file); }

inline KernelSpec kernel_from_json(const Json& j, const std::string& path = "kernel") {
  KernelSpec k;
  if (j.is_string()) {
    k.family = j.get<std::string>();
  } else {
    k.family = detail::field(j, "family", path).get<std::string>();
    if (j.contains("orientation")) k.orientation = j.at("orientation").get<std::string>();
    if (j.contains("axis")) k.axis = j.at("axis").get<int>();
    if (j.contains("transposed")) k.transposed = j.at("transposed").get<bool>();
    if (j.contains("perturbation")) {
      const auto& p = j.at("perturbation");
      Perturbation pert;
      if (p.contains("amplitude")) pert.amplitude = detail::number(p.at("amplitude"), path + ".perturbation.amplitude");
      if (p.contains("seed")) pert.seed = p.at("seed").get<std::uint64_t>();
      if (!(pert.amplitude >= 0.0 && pert.amplitude < 1.0))
        throw ConfigError(path + ".perturbation.amplitude", "must lie in [0,1)");
      k.perturbation = pert;
    }
  }
  if (!is_builtin_family(k.family)) throw ConfigError(path + ".family", "unknown kernel family '" + k.family + "'");
  if (k.orientation != "coordinate" && k.orientation != "constant")
    throw ConfigError(path + ".orientation", "must be coordinate or constant");
  if (k.axis < 0) throw ConfigError(path + ".axis", "must be nonnegative");
  return k;
}

inline Json kernel_to_json(const KernelSpec& k) {
  Json j;
  j["family"] = k.family;
  j["orientation"] = k.orientation;
  j["axis"] = k.axis;
  if (k.transposed) j["transposed"] = true;
  if (k.perturbation) j["perturbation"] = {{"amplitude", k.perturbation->amplitude}, {"seed", k.perturbation->seed}};
  return j;
}

/// Complex vectors serialise as [re, im] pairs; real ones as plain numbers.
inline Json vector_to_json(const ComplexVector& v) {
  Json out = Json::array();
  const bool real = is_real(v);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (real) out.push_back(v[i].real());
    else out.push_back(Json::array({v[i].real(), v[i].imag()}));
  }
  return out;
}

inline ComplexVector vector_from_json(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array");
  ComplexVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto p = path + "[" + std::to_string(i) + "]";
    if (j[i].is_array() && j[i].size() == 2) v[static_cast<Eigen::Index>(i)] = Complex(detail::number(j[i][0], p), detail::number(j[i][1], p));
    else v[static_cast<Eigen::Index>(i)] = detail::number(j[i], p);
  }
  return v;
}

inline Json point_set_json(const SpaceModel& s, const PointSet& p) {
  Json out = Json::array();
  for (int x : p) out.push_back(s.ids()[static_cast<std::size_t>(x)]);
  return out;
}

inline Json ball_json(const SpaceModel& s, const Ball& b) {
  if (b.members.empty()) return nullptr;
  return {{"center", s.ids()[static_cast<std::size_t>(b.center)]}, {"radius", b.radius}, {"size", b.members.size()},
          {"measure", b.measure}};
}

/// JSON number that survives non-finite values (null for ±inf / NaN).
inline Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace bloom
