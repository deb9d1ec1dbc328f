#pragma once

#include <vector>

#include "coflow/rational.hpp"

namespace coflow {

// Geometric discretization of [0, (1+eta)^L]: I_0 = [0,1] and
// I_l = ((1+eta)^{l-1}, (1+eta)^l]. All endpoints are exact rationals;
// double mirrors are provided for the floating pipeline.
class IntervalGrid {
 public:
  // L is the smallest integer with (1+eta)^L >= T+1.
  static IntervalGrid build(const Rat& horizon, const Rat& eta);

  const Rat& eta() const { return eta_; }
  const Rat& horizon() const { return horizon_; }
  int count() const { return count_; }  // L; intervals are 0..L

  const Rat& left(int l) const { return left_[l]; }
  const Rat& right(int l) const { return right_[l]; }
  const Rat& length(int l) const { return length_[l]; }
  double length_d(int l) const { return length_d_[l]; }

  // The written form "(1+eta)^{l-1}", with the l=0 convention of 1/2.
  // Used by LP coefficients, eligibility and the estimators.
  const Rat& notational_left(int l) const { return notational_[l]; }
  double notational_left_d(int l) const { return notational_d_[l]; }

  // Actual left endpoint of I_l; this is the priority stamp t_ijk, so
  // l=0 maps to 0, not to the notational 1/2.
  const Rat& priority_stamp(int l) const { return left_[l]; }

  // Interval l is eligible for release r iff notational_left(l) >= r.
  // Eligibility is upward closed in l.
  bool eligible(int l, const Rat& release) const {
    return notational_[l] >= release;
  }
  int first_eligible(const Rat& release) const;
  std::vector<int> eligible_intervals(const Rat& release) const;

 private:
  Rat eta_;
  Rat horizon_;
  int count_ = 0;
  std::vector<Rat> left_, right_, length_, notational_;
  std::vector<double> length_d_, notational_d_;
};

}  // namespace coflow
