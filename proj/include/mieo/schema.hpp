#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mieo {

enum class ColumnKind { binary, continuous };

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;

  bool operator==(const Column&) const = default;
};

// Ordered, typed column list shared by datasets, models and reports.
// Invariants: names unique, at least one column.
class FeatureSchema {
public:
  FeatureSchema() = default;
  explicit FeatureSchema(std::vector<Column> columns);

  std::size_t size() const { return columns_.size(); }
  std::size_t binary_count() const { return n_binary_; }
  std::size_t continuous_count() const { return columns_.size() - n_binary_; }

  const Column& at(std::size_t j) const { return columns_[j]; }
  const std::vector<Column>& columns() const { return columns_; }
  bool is_binary(std::size_t j) const { return columns_[j].kind == ColumnKind::binary; }

  // -1 when no column has that name
  int index_of(const std::string& name) const;

  bool operator==(const FeatureSchema&) const = default;

  std::string to_json() const;
  static FeatureSchema from_json_text(const std::string& text);

private:
  std::vector<Column> columns_;
  std::size_t n_binary_ = 0;
};

}  // namespace mieo
