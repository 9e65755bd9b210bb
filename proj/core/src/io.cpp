#include "kronlik/io.hpp"

#include <json.hpp>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace kronlik::io {

using nlohmann::json;

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

namespace {

[[noreturn]] void parse_error(const std::string& what) { throw Error(ErrorCode::Parse, what); }

std::string strip_comment(std::string_view line) {
  const auto pos = line.find('#');
  return std::string(line.substr(0, pos));
}

std::vector<std::string> tokens_of(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string t; is >> t;) out.push_back(t);
  return out;
}

double parse_number(const std::string& tok) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (!tok.empty() && tok.front() == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) parse_error("not a number: '" + tok + "'");
  if (!std::isfinite(v)) parse_error("non-finite value: '" + tok + "'");
  return v;
}

long parse_count(const std::string& tok) {
  long v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || v <= 0) {
    parse_error("expected a positive integer, got '" + tok + "'");
  }
  return v;
}

// Header tokens of the first non-blank line plus every later token.
struct Document {
  std::vector<std::string> header;
  std::vector<std::string> body;
};

Document split_document(const std::string& text) {
  Document doc;
  std::istringstream is(text);
  bool have_header = false;
  for (std::string line; std::getline(is, line);) {
    auto toks = tokens_of(strip_comment(line));
    if (toks.empty()) continue;
    if (!have_header) {
      doc.header = std::move(toks);
      have_header = true;
    } else {
      doc.body.insert(doc.body.end(), toks.begin(), toks.end());
    }
  }
  if (!have_header) parse_error("empty document");
  return doc;
}

bool looks_like_json(const std::string& text) {
  for (const char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    return c == '{' || c == '[';
  }
  return false;
}

Matrix read_block(const std::vector<std::string>& toks, std::size_t& pos, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = parse_number(toks[pos++]);
  }
  return m;
}

void write_block(std::ostream& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from(const json& j) {
  if (!j.is_array() || j.empty() || !j.front().is_array() || j.front().empty()) {
    parse_error("matrix must be a non-empty array of rows");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) parse_error("ragged matrix rows");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

// JSON has no infinities; encode them as strings.
json real_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double real_from(const json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  parse_error("bad real value '" + s + "'");
}

template <typename Enum, std::size_t N>
Enum enum_from(const std::string& s, const std::array<Enum, N>& values) {
  for (const auto v : values) {
    if (to_string(v) == s) return v;
  }
  parse_error("unknown enumerator '" + s + "'");
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    parse_error(e.what());
  }
}

MatrixDataset dataset_from(const json& j) {
  std::vector<Matrix> obs;
  for (const auto& m : j.at("observations")) obs.push_back(matrix_from(m));
  std::optional<Matrix> mean;
  if (j.contains("known_mean") && !j.at("known_mean").is_null()) mean = matrix_from(j.at("known_mean"));
  MatrixDataset data(std::move(obs), std::move(mean));
  if (j.contains("n") && j.at("n").get<std::size_t>() != data.n()) parse_error("declared n differs from body");
  if (j.contains("p") && j.at("p").get<Eigen::Index>() != data.p()) parse_error("declared p differs from body");
  if (j.contains("q") && j.at("q").get<Eigen::Index>() != data.q()) parse_error("declared q differs from body");
  return data;
}

json covariance_json(const KroneckerCovariance& cov) {
  return {{"gamma", matrix_json(cov.gamma)}, {"psi", matrix_json(cov.psi)}, {"canonical", cov.canonical}};
}

KroneckerCovariance covariance_from(const json& j) {
  return {matrix_from(j.at("gamma")), matrix_from(j.at("psi")), j.value("canonical", false)};
}

}  // namespace

void write_dataset(std::ostream& out, const MatrixDataset& data) {
  out << data.n() << ' ' << data.p() << ' ' << data.q();
  if (data.known_mean()) out << " mean";
  out << '\n';
  if (data.known_mean()) {
    out << "# known mean\n";
    write_block(out, *data.known_mean());
  }
  for (std::size_t k = 0; k < data.n(); ++k) {
    out << "# X" << (k + 1) << '\n';
    write_block(out, data[k]);
  }
}

std::string dataset_to_text(const MatrixDataset& data) {
  std::ostringstream os;
  write_dataset(os, data);
  return os.str();
}

MatrixDataset parse_dataset(const std::string& text) {
  if (looks_like_json(text)) {
    try {
      return dataset_from(parse_json(text));
    } catch (const json::exception& e) {
      parse_error(e.what());
    }
  }
  const auto doc = split_document(text);
  if (doc.header.size() != 3 && !(doc.header.size() == 4 && doc.header[3] == "mean")) {
    parse_error("header must be 'n p q' or 'n p q mean'");
  }
  const auto n = static_cast<std::size_t>(parse_count(doc.header[0]));
  const auto p = static_cast<Eigen::Index>(parse_count(doc.header[1]));
  const auto q = static_cast<Eigen::Index>(parse_count(doc.header[2]));
  const bool has_mean = doc.header.size() == 4;
  const std::size_t cell = static_cast<std::size_t>(p * q);
  const std::size_t expected = (n + (has_mean ? 1 : 0)) * cell;
  if (doc.body.size() != expected) {
    parse_error("declared shape needs " + std::to_string(expected) + " numbers, found " +
                std::to_string(doc.body.size()));
  }
  std::size_t pos = 0;
  std::optional<Matrix> mean;
  if (has_mean) mean = read_block(doc.body, pos, p, q);
  std::vector<Matrix> obs;
  obs.reserve(n);
  for (std::size_t k = 0; k < n; ++k) obs.push_back(read_block(doc.body, pos, p, q));
  return MatrixDataset(std::move(obs), std::move(mean));
}

MatrixDataset read_dataset_file(const std::filesystem::path& path) { return parse_dataset(read_file(path)); }

std::string dataset_to_json(const MatrixDataset& data) {
  json j{{"n", data.n()}, {"p", data.p()}, {"q", data.q()}};
  json obs = json::array();
  for (const auto& x : data.observations()) obs.push_back(matrix_json(x));
  j["observations"] = std::move(obs);
  if (data.known_mean()) j["known_mean"] = matrix_json(*data.known_mean());
  return j.dump(2);
}

std::string matrix_to_text(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << ' ' << m.cols() << '\n';
  write_block(os, m);
  return os.str();
}

Matrix parse_matrix(const std::string& text) {
  if (looks_like_json(text)) {
    try {
      return matrix_from(parse_json(text));
    } catch (const json::exception& e) {
      parse_error(e.what());
    }
  }
  const auto doc = split_document(text);
  if (doc.header.size() != 2) parse_error("matrix header must be 'rows cols'");
  const auto rows = static_cast<Eigen::Index>(parse_count(doc.header[0]));
  const auto cols = static_cast<Eigen::Index>(parse_count(doc.header[1]));
  if (doc.body.size() != static_cast<std::size_t>(rows * cols)) {
    parse_error("matrix body has " + std::to_string(doc.body.size()) + " entries, expected " +
                std::to_string(rows * cols));
  }
  std::size_t pos = 0;
  return read_block(doc.body, pos, rows, cols);
}

Matrix read_matrix_file(const std::filesystem::path& path) { return parse_matrix(read_file(path)); }

std::string covariance_to_json(const KroneckerCovariance& cov) { return covariance_json(cov).dump(2); }

KroneckerCovariance covariance_from_json(const std::string& text) {
  try {
    return covariance_from(parse_json(text));
  } catch (const json::exception& e) {
    parse_error(e.what());
  }
}

std::string report_to_json(const EstimateReport& report) {
  json j{{"covariance", covariance_json(report.covariance)},
         {"log_likelihood", real_json(report.log_likelihood)},
         {"iterations", report.iterations},
         {"status", std::string(to_string(report.status))},
         {"residual", real_json(report.residual)}};
  j["zone"] = report.zone ? json(std::string(to_string(*report.zone))) : json(nullptr);
  json trace = json::array();
  for (const double v : report.trace) trace.push_back(real_json(v));
  j["trace"] = std::move(trace);
  return j.dump(2);
}

EstimateReport report_from_json(const std::string& text) {
  static constexpr std::array statuses{Status::Converged, Status::MaxIterations, Status::ExistenceRuledOut,
                                       Status::DegenerateUpdate};
  static constexpr std::array zones{ExistenceZone::RuledOut, ExistenceZone::Unknown, ExistenceZone::Guaranteed};
  try {
    const auto j = parse_json(text);
    EstimateReport r;
    r.covariance = covariance_from(j.at("covariance"));
    r.log_likelihood = real_from(j.at("log_likelihood"));
    r.iterations = j.at("iterations").get<std::size_t>();
    r.status = enum_from(j.at("status").get<std::string>(), statuses);
    r.residual = real_from(j.at("residual"));
    if (j.contains("zone") && !j.at("zone").is_null()) r.zone = enum_from(j.at("zone").get<std::string>(), zones);
    for (const auto& v : j.value("trace", json::array())) r.trace.push_back(real_from(v));
    return r;
  } catch (const json::exception& e) {
    parse_error(e.what());
  }
}

std::string uniqueness_to_json(const UniquenessReport& report) {
  json j{{"classification", std::string(to_string(report.classification))},
         {"w", {{"v1", report.w.v1}, {"v2", report.w.v2}, {"v3", report.w.v3}, {"discriminant", report.w.discriminant}}}};
  j["interval"] = report.interval ? json::array({report.interval->first, report.interval->second}) : json(nullptr);
  j["unique_point"] = report.unique_point
                          ? json{{"a", report.unique_point->first}, {"b", report.unique_point->second}}
                          : json(nullptr);
  j["family_loglik"] = report.family_loglik ? real_json(*report.family_loglik) : json(nullptr);
  return j.dump(2);
}

UniquenessReport uniqueness_from_json(const std::string& text) {
  static constexpr std::array classes{Classification::Unique, Classification::NonUnique, Classification::Borderline};
  try {
    const auto j = parse_json(text);
    UniquenessReport r;
    r.classification = enum_from(j.at("classification").get<std::string>(), classes);
    const auto& w = j.at("w");
    r.w.v1 = w.at("v1").get<double>();
    r.w.v2 = w.at("v2").get<double>();
    r.w.v3 = w.at("v3").get<double>();
    r.w.discriminant = w.at("discriminant").get<double>();
    if (!j.at("interval").is_null()) {
      r.interval = std::make_pair(j.at("interval").at(0).get<double>(), j.at("interval").at(1).get<double>());
    }
    if (!j.at("unique_point").is_null()) {
      r.unique_point =
          std::make_pair(j.at("unique_point").at("a").get<double>(), j.at("unique_point").at("b").get<double>());
    }
    if (!j.at("family_loglik").is_null()) r.family_loglik = real_from(j.at("family_loglik"));
    return r;
  } catch (const json::exception& e) {
    parse_error(e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << contents;
  if (!out) throw Error(ErrorCode::Io, "write to '" + path.string() + "' failed");
}

std::string digest(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf.data(), 16);
}

}  // namespace kronlik::io
