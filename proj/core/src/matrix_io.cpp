#include "pstd/matrix_io.hpp"

#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "pstd/error.hpp"

namespace pstd {

void write_matrix(std::ostream& out, const MatrixXd& m) {
  out << m.rows() << ' ' << m.cols() << '\n';
  out << std::setprecision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << m(i, j);
    }
    out << '\n';
  }
}

MatrixXd read_matrix(std::istream& in) {
  Index rows = -1, cols = -1;
  if (!(in >> rows >> cols) || rows < 0 || cols < 0) {
    fail(ErrorCode::kParse, "matrix: bad shape header");
  }
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      if (!(in >> m(i, j))) {
        fail(ErrorCode::kParse, "matrix: truncated values");
      }
    }
  }
  return m;
}

void save_matrix(const std::filesystem::path& file, const MatrixXd& m) {
  std::ofstream out(file);
  require(static_cast<bool>(out), ErrorCode::kIo,
          "cannot write " + file.string());
  write_matrix(out, m);
}

MatrixXd load_matrix(const std::filesystem::path& file) {
  std::ifstream in(file);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot read " + file.string());
  return read_matrix(in);
}

const std::string& Container::entry(const std::string& key) const {
  auto it = entries.find(key);
  require(it != entries.end(), ErrorCode::kParse, "container: missing " + key);
  return it->second;
}

const MatrixXd& Container::matrix(const std::string& name) const {
  auto it = matrices.find(name);
  require(it != matrices.end(), ErrorCode::kParse,
          "container: missing matrix " + name);
  return it->second;
}

void write_container(std::ostream& out, const Container& c) {
  out << "pstd-container " << Container::kVersion << '\n';
  for (const auto& [key, value] : c.entries) {
    out << "entry " << key << ' ' << value << '\n';
  }
  for (const auto& [name, m] : c.matrices) {
    out << "matrix " << name << ' ';
    write_matrix(out, m);
  }
  out << "end\n";
}

Container read_container(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "pstd-container") {
    fail(ErrorCode::kParse, "container: bad magic");
  }
  require(version == Container::kVersion, ErrorCode::kParse,
          "container: unsupported version " + std::to_string(version));
  Container c;
  std::string tag;
  while (in >> tag) {
    if (tag == "end") return c;
    std::string name;
    if (!(in >> name)) break;
    if (tag == "entry") {
      std::string value;
      in >> value;
      c.entries[name] = value;
    } else if (tag == "matrix") {
      c.matrices[name] = read_matrix(in);
    } else {
      fail(ErrorCode::kParse, "container: unknown tag " + tag);
    }
  }
  fail(ErrorCode::kParse, "container: missing end marker");
}

}  // namespace pstd
