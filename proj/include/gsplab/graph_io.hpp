#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "gsplab/graph.hpp"

namespace gsplab {

/// Edge-list CSV: one "i,j,w" row per undirected edge with i <= j, 0-based.
/// Lines starting with '#' are comments; "# nodes: N" fixes the node count
/// so isolated trailing nodes survive a round trip. An optional "i,j,w"
/// header row is accepted.
ShiftOperator read_edge_list_csv(std::istream& in, std::optional<std::size_t> nodes = {});
ShiftOperator read_edge_list_csv(const std::filesystem::path& path,
                                 std::optional<std::size_t> nodes = {});
void write_edge_list_csv(std::ostream& out, const ShiftOperator& s);
void write_edge_list_csv(const std::filesystem::path& path, const ShiftOperator& s);

/// Dense CSV: n rows of n comma-separated values.
Matrix read_dense_csv(std::istream& in);
Matrix read_dense_csv(const std::filesystem::path& path);
void write_dense_csv(std::ostream& out, const Matrix& m);
void write_dense_csv(const std::filesystem::path& path, const Matrix& m);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace gsplab
