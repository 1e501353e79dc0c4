#pragma once

#include <ostream>
#include <vector>

#include "stk/errors.hpp"
#include "stk/quadrature.hpp"

namespace stk {

/// B-spline basis on a clamped uniform knot vector over [a, b].
///
/// End conditions are imposed by dropping boundary functions: the last two
/// for zero value and slope at the right end, the first and last for zero
/// values at both ends. Every retained function then satisfies the
/// conditions identically.
class SplineBasis {
 public:
  enum class EndConditions { none, zero_value_slope_right, zero_value_both };

  SplineBasis(int degree, int n_elems, double a, double b, EndConditions ec)
      : degree_(degree), n_elems_(n_elems), a_(a), b_(b), ec_(ec) {
    if (degree != 2 && degree != 3)
      throw ArgumentError("SplineBasis: degree must be 2 or 3");
    if (n_elems < 1) throw ArgumentError("SplineBasis: need at least one element");
    if (!(b > a)) throw ArgumentError("SplineBasis: empty interval");

    const double h = (b - a) / n_elems;
    knots_.assign(degree, a);
    for (int i = 0; i <= n_elems; ++i) knots_.push_back(a + i * h);
    knots_.insert(knots_.end(), degree, b);

    const int full = num_full();
    int lo = 0, hi = full;
    switch (ec) {
      case EndConditions::none:
        break;
      case EndConditions::zero_value_slope_right:
        hi = full - 2;
        break;
      case EndConditions::zero_value_both:
        lo = 1;
        hi = full - 1;
        break;
    }
    if (hi - lo < 1)
      throw ArgumentError("SplineBasis: too few basis functions left after end conditions");
    for (int i = lo; i < hi; ++i) active_.push_back(i);
  }

  int degree() const { return degree_; }
  int num_elems() const { return n_elems_; }
  int num_full() const { return n_elems_ + degree_; }
  int num_active() const { return static_cast<int>(active_.size()); }
  double a() const { return a_; }
  double b() const { return b_; }
  double h() const { return (b_ - a_) / n_elems_; }
  EndConditions end_conditions() const { return ec_; }
  const std::vector<int>& active_indices() const { return active_; }

  /// Value (deriv=0) or derivative (deriv=1,2) of full-basis function i.
  double eval_full(int i, double x, int deriv = 0) const {
    if (i < 0 || i >= num_full()) throw ArgumentError("SplineBasis: basis index out of range");
    return eval_b(i, degree_, deriv, x);
  }

  /// Same for the j-th retained function.
  double eval(int j, double x, int deriv = 0) const {
    if (j < 0 || j >= num_active()) throw ArgumentError("SplineBasis: active index out of range");
    return eval_b(active_[j], degree_, deriv, x);
  }

  /// Retained functions whose support intersects element e, as (active index,
  /// full index) pairs. Full-basis support on element e is i in [e, e+degree].
  std::vector<std::pair<int, int>> active_on_element(int e) const {
    std::vector<std::pair<int, int>> out;
    for (int j = 0; j < num_active(); ++j) {
      const int i = active_[j];
      if (i >= e && i <= e + degree_) out.emplace_back(j, i);
    }
    return out;
  }

  double elem_left(int e) const { return a_ + e * h(); }
  double elem_right(int e) const { return a_ + (e + 1) * h(); }

 private:
  double basis0(int i, double x) const {
    const double t0 = knots_[i], t1 = knots_[i + 1];
    if (t0 <= x && x < t1) return 1.0;
    if (x == b_ && t0 < t1 && t1 == b_) return 1.0;  // last interval closed
    return 0.0;
  }

  double eval_b(int i, int k, int deriv, double x) const {
    if (k == 0) return deriv == 0 ? basis0(i, x) : 0.0;
    if (deriv > 0) {
      double out = 0.0;
      const double d1 = knots_[i + k] - knots_[i];
      const double d2 = knots_[i + k + 1] - knots_[i + 1];
      if (d1 > 0.0) out += eval_b(i, k - 1, deriv - 1, x) / d1;
      if (d2 > 0.0) out -= eval_b(i + 1, k - 1, deriv - 1, x) / d2;
      return k * out;
    }
    double out = 0.0;
    const double d1 = knots_[i + k] - knots_[i];
    const double d2 = knots_[i + k + 1] - knots_[i + 1];
    if (d1 > 0.0) out += (x - knots_[i]) / d1 * eval_b(i, k - 1, 0, x);
    if (d2 > 0.0) out += (knots_[i + k + 1] - x) / d2 * eval_b(i + 1, k - 1, 0, x);
    return out;
  }

  int degree_;
  int n_elems_;
  double a_, b_;
  EndConditions ec_;
  std::vector<double> knots_;
  std::vector<int> active_;
};

/// Debug dump of one retained basis function, sampled uniformly.
inline void write_basis_csv(const SplineBasis& basis, int active_index, std::ostream& os,
                            int samples_per_elem = 8) {
  os << "t,value,d1,d2\n";
  const int n = basis.num_elems() * samples_per_elem;
  for (int s = 0; s <= n; ++s) {
    const double t = basis.a() + (basis.b() - basis.a()) * s / n;
    os << t << "," << basis.eval(active_index, t, 0) << "," << basis.eval(active_index, t, 1)
       << "," << basis.eval(active_index, t, 2) << "\n";
  }
}

}  // namespace stk
