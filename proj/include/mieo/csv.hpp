#pragma once

#include <string>
#include <vector>

#include "mieo/dataset.hpp"

namespace mieo {

// CSV convention: UTF-8, comma separated, first row is the header, an empty
// field is a missing value. Optional trailing `label` column with values 0,
// 1 or empty. Only the empty string encodes null; literal NA/null are parse
// errors. Doubles are written in shortest round-trip form, so a save/load
// cycle reproduces every cell bit-exactly.
TabularDataset load_csv(const std::string& path, const FeatureSchema& schema);
void save_csv(const TabularDataset& ds, const std::string& path);

// Same conventions for a plain numeric matrix with caller-chosen column
// names (embeddings, imputations). NaN cells become empty fields. A labels
// vector, when given, must match the row count and appends a label column.
void save_matrix_csv(const std::string& path, const std::vector<std::string>& names,
                     const Eigen::MatrixXd& values, const std::vector<Label>* labels = nullptr);

// Columns: event_type in {none, cvd, other_death}, event_time_years,
// followup_years. event_time_years may be empty when event_type is none.
std::vector<FollowupRecord> load_followup_csv(const std::string& path);

// Header + content inspection: a column whose present values are all 0/1 is
// binary, anything else continuous. A trailing `label` column is recognized
// and excluded from the schema.
FeatureSchema infer_schema_csv(const std::string& path);

// FNV-1a 64 digest of a file's bytes, as a 16-char lowercase hex string.
std::string file_digest(const std::string& path);

}  // namespace mieo
