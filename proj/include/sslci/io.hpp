#pragma once

// Text formats read by the command-line tool.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sslci/generators.hpp"
#include "sslci/topic_model.hpp"

namespace sslci {

/// Malformed input file; the CLI maps it to exit code 2.
class ParseError : public Error {
 public:
  using Error::Error;
};

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Header "x1_size x2_size y_size", then n1*n2*ny probabilities with x1
/// slowest and y fastest. Totals within 1e-9 of one are renormalized.
inline DiscreteJoint parse_joint_text(const std::string& text) {
  std::istringstream in(text);
  long long n1 = 0, n2 = 0, ny = 0;
  if (!(in >> n1 >> n2 >> ny) || n1 < 1 || n2 < 1 || ny < 1)
    throw ParseError("joint file: header must be three positive sizes");
  DiscreteJoint j(static_cast<std::size_t>(n1), static_cast<std::size_t>(n2), static_cast<std::size_t>(ny));
  for (double& v : j.p) {
    if (!(in >> v)) throw ParseError("joint file: expected " + std::to_string(j.p.size()) + " probabilities");
    if (!std::isfinite(v) || v < 0.0) throw ParseError("joint file: probabilities must be finite and >= 0");
  }
  std::string extra;
  if (in >> extra) throw ParseError("joint file: trailing content '" + extra + "'");
  if (std::abs(j.total() - 1.0) > 1e-9) throw ParseError("joint file: probabilities do not sum to 1");
  j.normalize();
  return j;
}

struct TopicSpecFile {
  TopicModelSpec spec;
  std::uint64_t seed = 0;
  std::size_t samples = 0;  // documents drawn for a Monte Carlo summary
};

namespace detail {

inline std::vector<double> parse_number_list(const std::string& key, const std::string& raw) {
  std::vector<double> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t\r");
    if (b == std::string::npos) throw ParseError("topic spec: empty entry in '" + key + "'");
    const std::string t = item.substr(b, e - b + 1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) throw ParseError("topic spec: bad number '" + t + "' in '" + key + "'");
    out.push_back(v);
  }
  return out;
}

/// Rows separated by ';', entries by ','.
inline DenseMatrix parse_matrix(const std::string& key, const std::string& raw) {
  std::vector<std::vector<double>> rows;
  std::stringstream ss(raw);
  std::string row;
  while (std::getline(ss, row, ';')) rows.push_back(parse_number_list(key, row));
  if (rows.empty()) throw ParseError("topic spec: '" + key + "' is empty");
  DenseMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) throw ParseError("topic spec: ragged rows in '" + key + "'");
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return m;
}

inline DenseVector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const DenseVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

/// key=value lines: vocab, topics, doc_len, a (V rows of k entries),
/// tau_weights, tau_atoms (one row per atom) or dirichlet, w, noise_sigma,
/// seed, samples.
inline TopicSpecFile parse_topic_spec_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  static const std::vector<std::string> known = {"vocab", "topics",      "doc_len", "a",    "tau_weights", "tau_atoms",
                                                 "w",     "noise_sigma", "seed",    "samples", "dirichlet"};
  while (std::getline(ss, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("topic spec: expected key=value, got '" + line + "'");
    std::string key = line.substr(0, eq);
    key.erase(0, key.find_first_not_of(" \t"));
    key.erase(key.find_last_not_of(" \t") + 1);
    if (std::find(known.begin(), known.end(), key) == known.end()) throw ParseError("topic spec: unknown key '" + key + "'");
    kv[key] = line.substr(eq + 1);
  }
  const auto need = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ParseError("topic spec: missing key '" + key + "'");
    return it->second;
  };
  const auto scalar = [&](const std::string& key) {
    const std::vector<double> v = detail::parse_number_list(key, need(key));
    if (v.size() != 1) throw ParseError("topic spec: '" + key + "' must be a single number");
    return v[0];
  };

  TopicSpecFile out;
  TopicModelSpec& s = out.spec;
  const auto vocab = static_cast<Eigen::Index>(scalar("vocab"));
  const auto topics = static_cast<Eigen::Index>(scalar("topics"));
  s.doc_len = static_cast<std::size_t>(scalar("doc_len"));
  s.a = detail::parse_matrix("a", need("a"));
  if (s.a.rows() != vocab || s.a.cols() != topics) throw ParseError("topic spec: 'a' must be vocab x topics");
  s.w = detail::to_vector(detail::parse_number_list("w", need("w")));
  if (kv.count("noise_sigma")) s.noise_sigma = scalar("noise_sigma");
  if (kv.count("seed")) out.seed = static_cast<std::uint64_t>(scalar("seed"));
  if (kv.count("samples")) out.samples = static_cast<std::size_t>(scalar("samples"));
  if (kv.count("dirichlet")) {
    s.dirichlet_alpha = detail::to_vector(detail::parse_number_list("dirichlet", kv["dirichlet"]));
  } else {
    s.tau_weights = detail::to_vector(detail::parse_number_list("tau_weights", need("tau_weights")));
    s.tau_atoms = detail::parse_matrix("tau_atoms", need("tau_atoms"));
  }
  try {
    s.validate();
  } catch (const Error& e) {
    throw ParseError(std::string("topic spec: ") + e.what());
  }
  return out;
}

}  // namespace sslci
