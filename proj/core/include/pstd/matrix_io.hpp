#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "pstd/linalg.hpp"

namespace pstd {

// Plain-text matrix file: a "rows cols" header line followed by `rows` lines
// of row-major values printed with 17 significant digits.
void write_matrix(std::ostream& out, const MatrixXd& m);
MatrixXd read_matrix(std::istream& in);

void save_matrix(const std::filesystem::path& file, const MatrixXd& m);
MatrixXd load_matrix(const std::filesystem::path& file);

/// Versioned text container holding named scalars/strings and matrices.
///
///   pstd-container 1
///   entry <key> <value>
///   matrix <name> <rows> <cols>
///   <row-major values>
///   end
struct Container {
  static constexpr int kVersion = 1;

  std::map<std::string, std::string> entries;
  std::map<std::string, MatrixXd> matrices;

  const std::string& entry(const std::string& key) const;
  const MatrixXd& matrix(const std::string& name) const;
  bool has_matrix(const std::string& name) const {
    return matrices.count(name) != 0;
  }
};

void write_container(std::ostream& out, const Container& c);
Container read_container(std::istream& in);

}  // namespace pstd
