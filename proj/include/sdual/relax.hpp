#pragma once

#include <map>
#include <vector>

#include "sdual/lp.hpp"
#include "sdual/model.hpp"

namespace sdual {

enum class AtomKind { Bilinear, Square, Power };

// One reformulation step: result = a*b (bilinear) or result = a^exponent.
// Variable indices live in the extended space [originals | auxiliaries].
struct Atom {
  AtomKind kind;
  int result;
  int a;
  int b = -1;        // bilinear only
  int exponent = 0;  // square: 2, power: >= 3
  Monomial product;  // canonical monomial in original variables
};

// Registry of auxiliary variables for every nonlinear monomial appearing in
// a set of polynomials, after recursive binarization into two-factor atoms.
// Structure depends only on the monomials, not on coefficients, so one
// reformulation serves every aggregation of the same constraint set.
class Reformulation {
 public:
  Reformulation(int n_original, std::vector<Atom> atoms, std::map<Monomial, int> aux)
      : n_orig_(n_original), atoms_(std::move(atoms)), aux_(std::move(aux)) {}

  int num_original() const { return n_orig_; }
  int num_extended() const { return n_orig_ + static_cast<int>(atoms_.size()); }
  const std::vector<Atom>& atoms() const { return atoms_; }

  // Extended variable index for a monomial of degree >= 2, or -1.
  int aux_for(const Monomial& mono) const {
    auto it = aux_.find(mono);
    return it == aux_.end() ? -1 : it->second;
  }

  // Rewrites a polynomial as a linear expression over extended variables.
  // Returns sparse coefficients plus the constant term.
  std::pair<std::vector<std::pair<int, double>>, double> linearize(const Polynomial& poly) const;

  // Interval bounds for all extended variables derived from original boxes.
  std::vector<Interval> derive_boxes(const std::vector<Interval>& original_boxes) const;

 private:
  int n_orig_;
  std::vector<Atom> atoms_;
  std::map<Monomial, int> aux_;
};

// Deterministic decomposition (lexicographic by variable index) of every
// monomial of degree >= 2 across the given polynomials.
Reformulation build_reformulation(const std::vector<Polynomial>& polys,
                                  const std::vector<Interval>& boxes);

// Envelope cuts for every atom over the given boxes. Rows are in extended
// variable space. emit_cuts derives auxiliary boxes itself; the _extended
// variant takes them precomputed.
std::vector<LpRow> emit_cuts(const Reformulation& reform,
                             const std::vector<Interval>& local_original_boxes);
std::vector<LpRow> emit_cuts_extended(const Reformulation& reform,
                                      const std::vector<Interval>& extended_boxes);

// Interval helpers shared with the spatial solver.
Interval interval_mul(Interval a, Interval b);
Interval interval_pow(Interval a, int exponent);
Interval outward(Interval a);

}  // namespace sdual
