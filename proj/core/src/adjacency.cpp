#include "hope/adjacency.hpp"

#include "hope/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace hope {

Tensor normalize_adjacency(const Tensor& raw) {
  if (raw.rank() != 2 || raw.rows() != raw.cols()) {
    throw DimensionError("normalize_adjacency: expected a square matrix, got " + raw.shape_string());
  }
  raw.check_finite("adjacency");
  const std::size_t n = raw.rows();
  std::vector<double> inv_sqrt_degree(n);
  for (std::size_t i = 0; i < n; ++i) {
    double degree = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (raw(i, j) < 0.0) throw DomainError("normalize_adjacency: negative entry at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
      degree += raw(i, j);
    }
    inv_sqrt_degree[i] = 1.0 / std::sqrt(degree);
  }
  Tensor out = Tensor::zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double a_hat = raw(i, j) + (i == j ? 1.0 : 0.0);
      out(i, j) = inv_sqrt_degree[i] * a_hat * inv_sqrt_degree[j];
    }
  }
  return out;
}

bool is_symmetric(const Tensor& m, double tol) {
  if (m.rank() != 2 || m.rows() != m.cols()) return false;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = i + 1; j < m.cols(); ++j) {
      if (std::abs(m(i, j) - m(j, i)) > tol) return false;
    }
  }
  return true;
}

void write_adjacency_csv(std::ostream& out, const Tensor& adjacency) {
  if (adjacency.rank() != 2 || adjacency.rows() != adjacency.cols()) {
    throw DimensionError("write_adjacency_csv: expected a square matrix");
  }
  const std::size_t n = adjacency.rows();
  out << n << '\n';
  char buf[40];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", adjacency(i, j));
      if (j) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

void write_adjacency_csv(const std::filesystem::path& path, const Tensor& adjacency) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_adjacency_csv(out, adjacency);
}

Tensor read_adjacency_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("adjacency csv: missing header line");
  std::size_t n = 0;
  try {
    n = std::stoul(line);
  } catch (const std::exception&) {
    throw DataError("adjacency csv line 1: expected the node count, got '" + line + "'");
  }
  Tensor out = Tensor::zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw DataError("adjacency csv: missing row " + std::to_string(i));
    std::istringstream row(line);
    std::string cell;
    std::size_t j = 0;
    while (std::getline(row, cell, ',')) {
      if (j >= n) throw DataError("adjacency csv line " + std::to_string(i + 2) + ": too many values");
      try {
        out(i, j++) = std::stod(cell);
      } catch (const std::exception&) {
        throw DataError("adjacency csv line " + std::to_string(i + 2) + ": bad value '" + cell + "'");
      }
    }
    if (j != n) throw DataError("adjacency csv line " + std::to_string(i + 2) + ": expected " + std::to_string(n) + " values");
  }
  return out;
}

Tensor read_adjacency_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_adjacency_csv(in);
}

} // namespace hope
