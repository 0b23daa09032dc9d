#pragma once

// Internal helpers shared by the serialization code. Not installed.

#include <json.hpp>

#include <Eigen/Core>
#include <string>
#include <vector>

#include "mieo/error.hpp"

namespace mieo::detail {

using nlohmann::json;

inline json parse_json(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) fail_validation("invalid JSON in " + what);
  return j;
}

inline const json& require(const json& j, const std::string& key, const std::string& what) {
  auto it = j.find(key);
  if (it == j.end()) fail_validation(what + ": missing field '" + key + "'");
  return *it;
}

inline json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Eigen::VectorXd vector_from_json(const json& a, const std::string& what) {
  if (!a.is_array()) fail_validation(what + ": expected an array");
  Eigen::VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const json& a, const std::string& what) {
  if (!a.is_array()) fail_validation(what + ": expected an array of rows");
  const Eigen::Index n_rows = static_cast<Eigen::Index>(a.size());
  Eigen::Index n_cols = 0;
  if (n_rows > 0) n_cols = static_cast<Eigen::Index>(a[0].size());
  Eigen::MatrixXd m(n_rows, n_cols);
  for (Eigen::Index r = 0; r < n_rows; ++r) {
    const json& row = a[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(row.size()) != n_cols)
      fail_validation(what + ": ragged rows");
    for (Eigen::Index c = 0; c < n_cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

}  // namespace mieo::detail
