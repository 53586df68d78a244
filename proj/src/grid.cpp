#include "carlin/grid.hpp"

namespace carlin {

GridSpec::GridSpec(int m, int g, std::vector<double> lo, std::vector<double> hi,
                   std::vector<Boundary> bc)
    : dims(m), points(g), lower(std::move(lo)), upper(std::move(hi)),
      boundary(std::move(bc)) {
  if (dims < 1) throw std::invalid_argument("GridSpec: dims must be >= 1");
  if (points < 1) throw std::invalid_argument("GridSpec: points must be >= 1");
  if (static_cast<int>(lower.size()) != dims ||
      static_cast<int>(upper.size()) != dims ||
      static_cast<int>(boundary.size()) != dims)
    throw std::invalid_argument("GridSpec: per-dim arrays must have length m");
  for (int d = 0; d < dims; ++d) {
    if (!(upper[d] > lower[d]))
      throw std::invalid_argument("GridSpec: dim " + std::to_string(d) +
                                  " has empty extent");
    if (boundary[d] == Boundary::Box && points < 2)
      throw std::invalid_argument("GridSpec: box dim needs >= 2 points");
  }
}

GridSpec GridSpec::uniform(int m, int g, double lo, double hi, Boundary bc) {
  return GridSpec(m, g, std::vector<double>(m, lo), std::vector<double>(m, hi),
                  std::vector<Boundary>(m, bc));
}

}  // namespace carlin
