#include "gsplab/graph_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gsplab/errors.hpp"

namespace gsplab {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view text, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError("expected a number, got '" + std::string(text) + "'", line);
  }
  return v;
}

std::size_t parse_index(std::string_view text, std::size_t line) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError("expected a node index, got '" + std::string(text) + "'", line);
  }
  return v;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

struct Edge {
  std::size_t i, j;
  double w;
};

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

ShiftOperator read_edge_list_csv(std::istream& in, std::optional<std::size_t> nodes) {
  std::vector<Edge> edges;
  std::optional<std::size_t> declared = nodes;
  std::string line;
  std::size_t line_no = 0;
  std::size_t max_index = 0;
  bool any = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      constexpr std::string_view key = "# nodes:";
      if (!nodes && view.starts_with(key)) declared = parse_index(trim(view.substr(key.size())), line_no);
      continue;
    }
    const auto fields = split(view, ',');
    if (fields.size() != 3) throw ParseError("expected 'i,j,w'", line_no);
    if (fields[0] == "i") continue;
    Edge e{parse_index(fields[0], line_no), parse_index(fields[1], line_no),
           parse_double(fields[2], line_no)};
    max_index = std::max({max_index, e.i, e.j});
    any = true;
    edges.push_back(e);
  }
  const std::size_t n = declared ? *declared : (any ? max_index + 1 : 0);
  if (any && max_index >= n) throw ValidationError("edge index exceeds declared node count");
  Matrix m(n, n);
  for (const Edge& e : edges) {
    m(e.i, e.j) = e.w;
    m(e.j, e.i) = e.w;
  }
  return ShiftOperator(std::move(m));
}

ShiftOperator read_edge_list_csv(const std::filesystem::path& path, std::optional<std::size_t> nodes) {
  auto in = open_in(path);
  return read_edge_list_csv(in, nodes);
}

void write_edge_list_csv(std::ostream& out, const ShiftOperator& s) {
  const Matrix& m = s.matrix();
  out << "# nodes: " << m.rows() << "\n";
  out << "i,j,w\n";
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i; j < m.cols(); ++j)
      if (m(i, j) != 0.0) out << i << ',' << j << ',' << format_double(m(i, j)) << '\n';
}

void write_edge_list_csv(const std::filesystem::path& path, const ShiftOperator& s) {
  auto out = open_out(path);
  write_edge_list_csv(out, s);
}

Matrix read_dense_csv(std::istream& in) {
  std::vector<double> data;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto fields = split(view, ',');
    if (rows == 0) cols = fields.size();
    if (fields.size() != cols) throw ParseError("ragged row", line_no);
    for (auto f : fields) data.push_back(parse_double(f, line_no));
    ++rows;
  }
  return Matrix(rows, cols, std::move(data));
}

Matrix read_dense_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_dense_csv(in);
}

void write_dense_csv(std::ostream& out, const Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

void write_dense_csv(const std::filesystem::path& path, const Matrix& m) {
  auto out = open_out(path);
  write_dense_csv(out, m);
}

}  // namespace gsplab
