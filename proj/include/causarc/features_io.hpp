#pragma once

#include <string>
#include <vector>

#include "causarc/data.hpp"
#include "causarc/matrix.hpp"

namespace causarc {

struct Model;

// Dense text matrix: one row per line, comma-separated, full double
// precision. Dimensions are inferred.
void write_matrix_csv(const Matrix& m, const std::string& path);
Matrix read_matrix_csv(const std::string& path);

// Raw float32 little-endian with header: 4-byte magic "CAFM", uint32 rows,
// uint32 cols.
void write_matrix_f32(const Matrix& m, const std::string& path);
Matrix read_matrix_f32(const std::string& path);

// Sniffs the magic and falls back to CSV.
Matrix read_matrix_any(const std::string& path);

// Writes per-sample feature files plus manifest.csv with columns
//   id,label,expl_tokens,path_T,path_V,path_A
// where expl_tokens is space-separated ids and paths are relative to the
// manifest. Features are the model's unimodal encoder outputs (width d).
void export_features(const Model& m, const Dataset& ds, const std::string& out_dir);

struct IngestResult {
  Dataset dataset;
  // One entry per problem (missing file, ragged row, width mismatch against
  // the first sample); offending samples are skipped.
  std::vector<std::string> errors;
};

IngestResult ingest_features(const std::string& manifest_path);

}  // namespace causarc
