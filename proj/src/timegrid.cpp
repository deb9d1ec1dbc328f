#include "coflow/timegrid.hpp"

#include <stdexcept>

namespace coflow {

IntervalGrid IntervalGrid::build(const Rat& horizon, const Rat& eta) {
  if (horizon < 0) throw std::invalid_argument("horizon must be >= 0");
  if (eta <= 0) throw std::invalid_argument("eta must be > 0");

  IntervalGrid grid;
  grid.eta_ = eta;
  grid.horizon_ = horizon;

  const Rat growth = 1 + eta;
  Rat power = 1;  // (1+eta)^L
  int L = 0;
  while (power < horizon + 1) {
    power *= growth;
    ++L;
  }
  grid.count_ = L;

  grid.left_.push_back(0);
  grid.right_.push_back(1);
  grid.length_.push_back(1);
  grid.notational_.push_back(Rat(1, 2));
  Rat lo = 1;  // (1+eta)^{l-1}
  for (int l = 1; l <= L; ++l) {
    Rat hi = lo * growth;
    grid.left_.push_back(lo);
    grid.right_.push_back(hi);
    grid.length_.push_back(hi - lo);
    grid.notational_.push_back(lo);
    lo = hi;
  }
  for (int l = 0; l <= L; ++l) {
    grid.length_d_.push_back(to_double(grid.length_[l]));
    grid.notational_d_.push_back(to_double(grid.notational_[l]));
  }
  return grid;
}

int IntervalGrid::first_eligible(const Rat& release) const {
  for (int l = 0; l <= count_; ++l)
    if (eligible(l, release)) return l;
  throw std::invalid_argument("release beyond the grid horizon");
}

std::vector<int> IntervalGrid::eligible_intervals(const Rat& release) const {
  std::vector<int> out;
  for (int l = first_eligible(release); l <= count_; ++l) out.push_back(l);
  return out;
}

}  // namespace coflow
