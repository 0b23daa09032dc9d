#include "mieo/schema.hpp"

#include <unordered_set>

#include "mieo/error.hpp"
#include "json_util.hpp"

namespace mieo {

FeatureSchema::FeatureSchema(std::vector<Column> columns) : columns_(std::move(columns)) {
  if (columns_.empty()) fail_validation("schema needs at least one column");
  std::unordered_set<std::string> seen;
  for (const auto& c : columns_) {
    if (c.name.empty()) fail_validation("schema column with empty name");
    if (!seen.insert(c.name).second) fail_validation("duplicate schema column '" + c.name + "'");
    if (c.kind == ColumnKind::binary) ++n_binary_;
  }
}

int FeatureSchema::index_of(const std::string& name) const {
  for (std::size_t j = 0; j < columns_.size(); ++j)
    if (columns_[j].name == name) return static_cast<int>(j);
  return -1;
}

std::string FeatureSchema::to_json() const {
  detail::json cols = detail::json::array();
  for (const auto& c : columns_) {
    cols.push_back({{"name", c.name},
                    {"kind", c.kind == ColumnKind::binary ? "binary" : "continuous"}});
  }
  return detail::json{{"columns", cols}}.dump(2);
}

FeatureSchema FeatureSchema::from_json_text(const std::string& text) {
  detail::json j = detail::parse_json(text, "schema");
  const auto& cols = detail::require(j, "columns", "schema");
  std::vector<Column> out;
  for (const auto& c : cols) {
    Column col;
    col.name = detail::require(c, "name", "schema column").get<std::string>();
    std::string kind = detail::require(c, "kind", "schema column").get<std::string>();
    if (kind == "binary") col.kind = ColumnKind::binary;
    else if (kind == "continuous") col.kind = ColumnKind::continuous;
    else fail_validation("schema column '" + col.name + "': unknown kind '" + kind + "'");
    out.push_back(std::move(col));
  }
  return FeatureSchema(std::move(out));
}

}  // namespace mieo
