#pragma once

#include "kronlik/core.hpp"
#include "kronlik/uniqueness.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace kronlik::io {

// Dataset text format:
//
//   # comment lines and trailing comments start with '#'
//   n p q [mean]
//   <p rows of q numbers: the known mean, present only with the "mean" flag>
//   <n matrices, each p rows of q numbers, row-major>
//
// Numbers are written in shortest round-trip form, so parse(serialize(d))
// reproduces every finite double bit for bit. A document whose first
// non-blank character is '{' is read as the JSON form instead.

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

void write_dataset(std::ostream& out, const MatrixDataset& data);
std::string dataset_to_text(const MatrixDataset& data);
MatrixDataset parse_dataset(const std::string& text);
MatrixDataset read_dataset_file(const std::filesystem::path& path);

std::string dataset_to_json(const MatrixDataset& data);

// Matrix text format: header "rows cols" followed by the entries row-major.
// JSON form: an array of rows.
std::string matrix_to_text(const Matrix& m);
Matrix parse_matrix(const std::string& text);
Matrix read_matrix_file(const std::filesystem::path& path);

std::string covariance_to_json(const KroneckerCovariance& cov);
KroneckerCovariance covariance_from_json(const std::string& text);

std::string report_to_json(const EstimateReport& report);
EstimateReport report_from_json(const std::string& text);

std::string uniqueness_to_json(const UniquenessReport& report);
UniquenessReport uniqueness_from_json(const std::string& text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

/// 64-bit FNV-1a digest, hex encoded; used to fingerprint inputs in manifests.
std::string digest(const std::string& bytes);

}  // namespace kronlik::io
