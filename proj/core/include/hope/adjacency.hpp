#pragma once

#include "hope/tensor.hpp"

#include <filesystem>
#include <iosfwd>

namespace hope {

/// Renormalized propagation matrix D^-1/2 (A + I) D^-1/2, where D is the
/// diagonal of row sums of A + I.
///
/// Only meant for fixed, non-negative graphs (skeleton priors). Learned
/// adjacencies are used as raw kernels and never pass through here.
/// Throws DomainError on negative entries, DimensionError if not square.
Tensor normalize_adjacency(const Tensor& raw);

bool is_symmetric(const Tensor& m, double tol = 0.0);

// CSV layout: first line holds n, then n lines of n comma-separated values
// printed with round-trip precision.
void write_adjacency_csv(std::ostream& out, const Tensor& adjacency);
void write_adjacency_csv(const std::filesystem::path& path, const Tensor& adjacency);
Tensor read_adjacency_csv(std::istream& in);
Tensor read_adjacency_csv(const std::filesystem::path& path);

} // namespace hope
