#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <limits>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "peerinf/behavior.hpp"
#include "peerinf/errors.hpp"
#include "peerinf/graph.hpp"
#include "peerinf/netgen.hpp"

namespace peerinf::io {

/// Shortest text that round-trips the double exactly.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw IoError("not a number: '" + s + "'");
  return v;
}

inline long long parse_int(const std::string& s) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw IoError("not an integer: '" + s + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  return os;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  return is;
}

inline std::string read_text(const std::filesystem::path& path) {
  auto is = open_in(path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Edge list: one "i<TAB>j" per line, 0-indexed, i<j when undirected.
inline void write_edge_list(std::ostream& os, const AdjacencyMatrix& A) {
  for (const auto& [i, j] : A.edges()) os << i << '\t' << j << '\n';
}

inline void write_edge_list(const std::filesystem::path& path, const AdjacencyMatrix& A) {
  auto os = open_out(path);
  write_edge_list(os, A);
}

/// Reads an edge list. With n == 0 the node count is the largest index + 1.
inline AdjacencyMatrix read_edge_list(std::istream& is, std::size_t n = 0, bool directed = false) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::string line;
  std::size_t lineno = 0, max_index = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 2) throw IoError("edge list line " + std::to_string(lineno) + ": expected 'i<TAB>j'");
    const auto i = parse_int(fields[0]), j = parse_int(fields[1]);
    if (i < 0 || j < 0) throw IoError("edge list line " + std::to_string(lineno) + ": negative index");
    edges.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    max_index = std::max({max_index, static_cast<std::size_t>(i), static_cast<std::size_t>(j)});
  }
  if (n == 0) n = edges.empty() ? 0 : max_index + 1;
  AdjacencyMatrix A(n, directed);
  for (const auto& [i, j] : edges) A.add_edge(i, j);
  return A;
}

inline AdjacencyMatrix read_edge_list(const std::filesystem::path& path, std::size_t n = 0, bool directed = false) {
  auto is = open_in(path);
  return read_edge_list(is, n, directed);
}

// Labels: "node,<column>" with 1-based block labels.
inline void write_labels(const std::filesystem::path& path, const CommunityAssignment& a,
                         const std::string& column = "label") {
  auto os = open_out(path);
  os << "node," << column << '\n';
  for (std::size_t i = 0; i < a.size(); ++i) os << i << ',' << a.sigma[i] + 1 << '\n';
}

inline CommunityAssignment read_labels(const std::filesystem::path& path, int k = 0) {
  auto is = open_in(path);
  std::string line;
  std::getline(is, line);
  CommunityAssignment a;
  int max_label = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 2) throw IoError("labels file: expected 'node,label'");
    const auto node = parse_int(f[0]);
    if (node != static_cast<long long>(a.sigma.size())) throw IoError("labels file: nodes must be listed in order");
    const auto label = static_cast<int>(parse_int(f[1]));
    if (label < 1) throw IoError("labels file: labels are 1-based");
    a.sigma.push_back(label - 1);
    max_label = std::max(max_label, label);
  }
  a.k = k > 0 ? k : max_label;
  return a;
}

/// Matrix CSV with header "node,<prefix>1,...,<prefix>d".
inline void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m, const std::string& prefix) {
  auto os = open_out(path);
  os << "node";
  for (Eigen::Index c = 0; c < m.cols(); ++c) os << ',' << prefix << c + 1;
  os << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    os << i;
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << ',' << format_double(m(i, c));
    os << '\n';
  }
}

inline Eigen::MatrixXd read_matrix(const std::filesystem::path& path) {
  auto is = open_in(path);
  std::string line;
  std::getline(is, line);
  const auto header = split(line, ',');
  if (header.empty() || header[0] != "node") throw IoError(path.string() + ": expected a 'node,...' header");
  const auto cols = static_cast<Eigen::Index>(header.size() - 1);
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (static_cast<Eigen::Index>(f.size()) != cols + 1) throw IoError(path.string() + ": ragged row");
    std::vector<double> r;
    for (std::size_t c = 1; c < f.size(); ++c) r.push_back(parse_double(f[c]));
    rows.push_back(std::move(r));
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Eigen::Index c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(i), c) = rows[i][static_cast<std::size_t>(c)];
  return m;
}

inline void write_positions(const std::filesystem::path& path, const LatentPositions& p) {
  write_matrix(path, p.coords, "x");
}

// Panel: "node,t,y", rows ordered by node then t.
inline void write_panel(const std::filesystem::path& path, const BehaviorPanel& panel) {
  auto os = open_out(path);
  os << "node,t,y\n";
  for (Eigen::Index i = 0; i < panel.Y.rows(); ++i)
    for (Eigen::Index t = 0; t < panel.Y.cols(); ++t) os << i << ',' << t << ',' << format_double(panel.Y(i, t)) << '\n';
}

inline Eigen::MatrixXd read_panel(const std::filesystem::path& path) {
  auto is = open_in(path);
  std::string line;
  std::getline(is, line);
  if (line != "node,t,y") throw IoError(path.string() + ": expected header 'node,t,y'");
  std::vector<std::tuple<long long, long long, double>> cells;
  long long max_node = -1, max_t = -1;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 3) throw IoError(path.string() + ": expected 3 fields");
    cells.emplace_back(parse_int(f[0]), parse_int(f[1]), parse_double(f[2]));
    max_node = std::max(max_node, std::get<0>(cells.back()));
    max_t = std::max(max_t, std::get<1>(cells.back()));
  }
  Eigen::MatrixXd Y = Eigen::MatrixXd::Constant(max_node + 1, max_t + 1, std::numeric_limits<double>::quiet_NaN());
  for (const auto& [i, t, y] : cells) {
    if (i < 0 || t < 0) throw IoError(path.string() + ": negative index");
    Y(i, t) = y;
  }
  if (!Y.allFinite()) throw IoError(path.string() + ": panel has missing cells");
  return Y;
}

}  // namespace peerinf::io
