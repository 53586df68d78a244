#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace carlin {

enum class Boundary { Periodic, Box };

/// Tensor-product grid for one coordinate copy: m dims, g points per dim.
/// Periodic dims cover [lower, upper) with spacing (upper-lower)/g; box dims
/// cover [lower, upper] with spacing (upper-lower)/(g-1) and one-sided
/// stencils at the edges.
struct GridSpec {
  int dims = 1;    // m
  int points = 1;  // g, shared by all dims
  std::vector<double> lower, upper;
  std::vector<Boundary> boundary;

  GridSpec() = default;
  GridSpec(int m, int g, std::vector<double> lo, std::vector<double> hi,
           std::vector<Boundary> bc);

  static GridSpec uniform(int m, int g, double lo, double hi, Boundary bc);

  double spacing(int dim) const {
    const double len = upper[dim] - lower[dim];
    return boundary[dim] == Boundary::Periodic ? len / points
                                               : len / (points - 1);
  }
  double coord(int dim, int idx) const {
    return lower[dim] + idx * spacing(dim);
  }
  /// g^m, the number of grid points of one copy.
  std::int64_t cells() const {
    std::int64_t c = 1;
    for (int d = 0; d < dims; ++d) c *= points;
    return c;
  }
};

}  // namespace carlin
