#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdual {

// Closed interval; all variable boxes in a Model are finite.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double v, double tol = 0.0) const {
    return v >= lo - tol && v <= hi + tol;
  }
  bool empty(double tol = 0.0) const { return lo > hi + tol; }
};

// Thrown on invalid instance data; `path` points into the offending JSON.
class ModelError : public std::runtime_error {
 public:
  ModelError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Sparse exponent vector: {0:2, 3:1} is x0^2 * x3. Zero exponents are never
// stored, so the default Monomial is the constant 1.
class Monomial {
 public:
  Monomial() = default;

  static Monomial variable(int index, int exponent = 1) {
    Monomial m;
    m.set(index, exponent);
    return m;
  }

  void set(int index, int exponent) {
    if (exponent == 0)
      exps_.erase(index);
    else
      exps_[index] = exponent;
  }

  int exponent_of(int index) const {
    auto it = exps_.find(index);
    return it == exps_.end() ? 0 : it->second;
  }

  int degree() const {
    int d = 0;
    for (const auto& [_, e] : exps_) d += e;
    return d;
  }

  bool is_constant() const { return exps_.empty(); }
  bool is_univariate() const { return exps_.size() == 1; }
  int max_var() const { return exps_.empty() ? -1 : exps_.rbegin()->first; }

  const std::map<int, int>& exponents() const { return exps_; }

  double evaluate(std::span<const double> point) const;

  Monomial times(const Monomial& other) const {
    Monomial r = *this;
    for (const auto& [v, e] : other.exps_) r.set(v, r.exponent_of(v) + e);
    return r;
  }

  auto operator<=>(const Monomial&) const = default;

 private:
  std::map<int, int> exps_;
};

// Sparse multivariate polynomial, monomial -> coefficient. Zero coefficients
// are dropped eagerly so equality of term maps is equality of polynomials.
class Polynomial {
 public:
  Polynomial() = default;

  void add_term(const Monomial& mono, double coef) {
    if (coef == 0.0) return;
    auto [it, inserted] = terms_.try_emplace(mono, coef);
    if (!inserted) {
      it->second += coef;
      if (it->second == 0.0) terms_.erase(it);
    }
  }

  void add_scaled(const Polynomial& other, double scale) {
    for (const auto& [mono, coef] : other.terms_) add_term(mono, scale * coef);
  }

  double evaluate(std::span<const double> point) const;

  double coefficient(const Monomial& mono) const {
    auto it = terms_.find(mono);
    return it == terms_.end() ? 0.0 : it->second;
  }

  int degree() const {
    int d = 0;
    for (const auto& [mono, _] : terms_) d = std::max(d, mono.degree());
    return d;
  }

  bool is_zero() const { return terms_.empty(); }
  int max_var() const {
    int v = -1;
    for (const auto& [mono, _] : terms_) v = std::max(v, mono.max_var());
    return v;
  }

  const std::map<Monomial, double>& terms() const { return terms_; }

  bool operator==(const Polynomial&) const = default;

 private:
  std::map<Monomial, double> terms_;
};

// One row of Ax <= b (or A'x <= b'): sparse coefficients against a rhs.
struct LinearConstraint {
  std::vector<std::pair<int, double>> coeffs;
  double rhs = 0.0;
};

// The polynomial MINLP: min c'x over Ax <= b, boxes, integrality, and
// nonlinear rows g_i(x) <= 0, optionally refined by A'x <= b' and an
// objective cutoff c'x <= primal_cutoff.
struct Model {
  int n = 0;
  std::vector<double> objective;
  std::vector<Interval> boxes;
  std::vector<char> integer_flags;
  std::vector<LinearConstraint> linear_rows;
  std::vector<LinearConstraint> refined_rows;
  std::vector<Polynomial> nonlinear;
  std::optional<double> primal_cutoff;

  int num_nonlinear() const { return static_cast<int>(nonlinear.size()); }
  int num_integers() const {
    int p = 0;
    for (char f : integer_flags) p += (f != 0);
    return p;
  }

  // Throws ModelError on any invariant violation.
  void validate() const;
};

// K nonnegative aggregation rows, each of length m, stored row-major.
struct AggregationMatrix {
  int K = 0;
  int m = 0;
  std::vector<double> entries;

  static AggregationMatrix zero(int K, int m) {
    return AggregationMatrix{K, m, std::vector<double>(size_t(K) * m, 0.0)};
  }

  std::span<const double> row(int k) const {
    return {entries.data() + size_t(k) * m, size_t(m)};
  }
  std::span<double> row(int k) {
    return {entries.data() + size_t(k) * m, size_t(m)};
  }
  double& at(int k, int i) { return entries[size_t(k) * m + i]; }
  double at(int k, int i) const { return entries[size_t(k) * m + i]; }

  // Appends a zero row; used when warm-starting K+1 from a K solution.
  AggregationMatrix padded() const {
    AggregationMatrix r = *this;
    r.K += 1;
    r.entries.resize(size_t(r.K) * m, 0.0);
    return r;
  }

  bool is_zero() const {
    for (double v : entries)
      if (v != 0.0) return false;
    return true;
  }
};

// Sum_i lambda_i * g_i as a single polynomial. Entries must be >= 0 and
// lambda must have one entry per nonlinear row.
Polynomial aggregate(const Model& model, std::span<const double> lambda_row);

// JSON instance format, see README. Throws ModelError with a document path.
Model parse_model(const std::string& json_text);
std::string serialize_model(const Model& model);

}  // namespace sdual
