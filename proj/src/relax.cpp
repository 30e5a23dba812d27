#include "sdual/relax.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <functional>

namespace sdual {

namespace {

double int_pow(double base, int exp) {
  double r = 1.0;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace

Interval outward(Interval a) {
  const double pad_lo = 1e-12 * std::max(1.0, std::fabs(a.lo));
  const double pad_hi = 1e-12 * std::max(1.0, std::fabs(a.hi));
  return Interval{a.lo - pad_lo, a.hi + pad_hi};
}

Interval interval_mul(Interval a, Interval b) {
  const double c[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
  return outward(Interval{std::min({c[0], c[1], c[2], c[3]}), std::max({c[0], c[1], c[2], c[3]})});
}

Interval interval_pow(Interval a, int exponent) {
  if (exponent % 2 == 1)
    return outward(Interval{int_pow(a.lo, exponent), int_pow(a.hi, exponent)});
  const double plo = int_pow(a.lo, exponent);
  const double phi = int_pow(a.hi, exponent);
  Interval r{std::min(plo, phi), std::max(plo, phi)};
  if (a.lo <= 0.0 && a.hi >= 0.0) r.lo = 0.0;
  return outward(r);
}

std::pair<std::vector<std::pair<int, double>>, double> Reformulation::linearize(
    const Polynomial& poly) const {
  std::map<int, double> coeffs;
  double constant = 0.0;
  for (const auto& [mono, coef] : poly.terms()) {
    if (mono.is_constant()) {
      constant += coef;
    } else if (mono.degree() == 1) {
      coeffs[mono.exponents().begin()->first] += coef;
    } else {
      const int aux = aux_for(mono);
      if (aux < 0) throw std::invalid_argument("linearize: monomial not in reformulation");
      coeffs[aux] += coef;
    }
  }
  std::vector<std::pair<int, double>> out(coeffs.begin(), coeffs.end());
  return {std::move(out), constant};
}

std::vector<Interval> Reformulation::derive_boxes(
    const std::vector<Interval>& original_boxes) const {
  std::vector<Interval> ext = original_boxes;
  ext.resize(size_t(num_extended()));
  for (const Atom& atom : atoms_) {
    const Interval fa = ext[size_t(atom.a)];
    Interval box;
    switch (atom.kind) {
      case AtomKind::Bilinear:
        box = interval_mul(fa, ext[size_t(atom.b)]);
        break;
      case AtomKind::Square:
        box = interval_pow(fa, 2);
        break;
      case AtomKind::Power:
        box = interval_pow(fa, atom.exponent);
        break;
    }
    ext[size_t(atom.result)] = box;
  }
  return ext;
}

Reformulation build_reformulation(const std::vector<Polynomial>& polys,
                                  const std::vector<Interval>& boxes) {
  int n = static_cast<int>(boxes.size());
  for (const Polynomial& p : polys) n = std::max(n, p.max_var() + 1);

  std::vector<Atom> atoms;
  std::map<Monomial, int> aux;

  // returns the extended index representing `mono` (a variable for degree 1)
  std::function<int(const Monomial&)> ensure = [&](const Monomial& mono) -> int {
    const int deg = mono.degree();
    assert(deg >= 1);
    if (deg == 1) return mono.exponents().begin()->first;
    auto it = aux.find(mono);
    if (it != aux.end()) return it->second;

    if (mono.is_univariate()) {
      const auto [var, e] = *mono.exponents().begin();
      const int result = n + static_cast<int>(atoms.size());
      Atom atom{e == 2 ? AtomKind::Square : AtomKind::Power, result, var, -1, e, mono};
      atoms.push_back(atom);
      aux.emplace(mono, result);
      return result;
    }

    // multivariate: per-variable power factors, then a left-to-right
    // bilinear chain in variable order
    std::vector<int> factors;
    std::vector<Monomial> factor_monos;
    for (const auto& [var, e] : mono.exponents()) {
      Monomial part = Monomial::variable(var, e);
      factors.push_back(ensure(part));
      factor_monos.push_back(part);
    }
    int acc = factors[0];
    Monomial acc_mono = factor_monos[0];
    for (size_t k = 1; k < factors.size(); ++k) {
      acc_mono = acc_mono.times(factor_monos[k]);
      auto found = aux.find(acc_mono);
      if (found != aux.end()) {
        acc = found->second;
        continue;
      }
      const int result = n + static_cast<int>(atoms.size());
      atoms.push_back(Atom{AtomKind::Bilinear, result, acc, factors[k], 0, acc_mono});
      aux.emplace(acc_mono, result);
      acc = result;
    }
    return acc;
  };

  for (const Polynomial& poly : polys)
    for (const auto& [mono, _] : poly.terms())
      if (mono.degree() >= 2) ensure(mono);

  return Reformulation(n, std::move(atoms), std::move(aux));
}

namespace {

// cuts are shifted outward by a tiny margin where construction is numeric
double margin(double scale) { return 1e-11 * std::max(1.0, std::fabs(scale)); }

void add_cut(std::vector<LpRow>& cuts, std::vector<std::pair<int, double>> coeffs, Relation rel,
             double rhs) {
  cuts.push_back(LpRow{std::move(coeffs), rel, rhs});
}

// w >= f(t) + f'(t)(x - t)   <=>   -f'(t)*x + w >= f(t) - f'(t)*t
void tangent_cut(std::vector<LpRow>& cuts, int x, int w, double t, int e, bool under,
                 double extra_margin = 0.0) {
  const double ft = int_pow(t, e);
  const double dft = e * int_pow(t, e - 1);
  const double rhs = ft - dft * t;
  if (under)
    add_cut(cuts, {{x, -dft}, {w, 1.0}}, Relation::GreaterEq, rhs - extra_margin);
  else
    add_cut(cuts, {{x, -dft}, {w, 1.0}}, Relation::LessEq, rhs + extra_margin);
}

// secant of x^e between l and u: w <= or >= f(l) + s(x - l)
void secant_cut(std::vector<LpRow>& cuts, int x, int w, double l, double u, int e, bool under) {
  const double fl = int_pow(l, e);
  const double fu = int_pow(u, e);
  const double s = (fu - fl) / (u - l);
  const double rhs = fl - s * l;
  if (under)
    add_cut(cuts, {{x, -s}, {w, 1.0}}, Relation::GreaterEq, rhs);
  else
    add_cut(cuts, {{x, -s}, {w, 1.0}}, Relation::LessEq, rhs);
}

// Tangency point r in [0, hi] of the line anchored at (anchor, anchor^e)
// touching x^e; phi is strictly decreasing in r on the relevant range.
double odd_tangency(double anchor, double hi, int e) {
  auto phi = [&](double r) {
    return int_pow(r, e) + e * int_pow(r, e - 1) * (anchor - r) - int_pow(anchor, e);
  };
  double lo = 0.0;
  if (phi(hi) > 0.0) return hi;  // tangency beyond the box
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (phi(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

void emit_bilinear(std::vector<LpRow>& cuts, const Atom& atom, Interval bx, Interval by) {
  const int x = atom.a, y = atom.b, w = atom.result;
  if (bx.width() <= 0.0 && by.width() <= 0.0) {
    add_cut(cuts, {{w, 1.0}}, Relation::Equal, bx.lo * by.lo);
    return;
  }
  if (bx.width() <= 0.0) {
    add_cut(cuts, {{w, 1.0}, {y, -bx.lo}}, Relation::Equal, 0.0);
    return;
  }
  if (by.width() <= 0.0) {
    add_cut(cuts, {{w, 1.0}, {x, -by.lo}}, Relation::Equal, 0.0);
    return;
  }
  // w >= lx*y + ly*x - lx*ly ; w >= ux*y + uy*x - ux*uy
  add_cut(cuts, {{x, -by.lo}, {y, -bx.lo}, {w, 1.0}}, Relation::GreaterEq, -bx.lo * by.lo);
  add_cut(cuts, {{x, -by.hi}, {y, -bx.hi}, {w, 1.0}}, Relation::GreaterEq, -bx.hi * by.hi);
  // w <= ux*y + ly*x - ux*ly ; w <= lx*y + uy*x - lx*uy
  add_cut(cuts, {{x, -by.lo}, {y, -bx.hi}, {w, 1.0}}, Relation::LessEq, -bx.hi * by.lo);
  add_cut(cuts, {{x, -by.hi}, {y, -bx.lo}, {w, 1.0}}, Relation::LessEq, -bx.lo * by.hi);
}

void emit_even_power(std::vector<LpRow>& cuts, const Atom& atom, Interval b, int e) {
  const int x = atom.a, w = atom.result;
  if (b.width() <= 0.0) {
    add_cut(cuts, {{w, 1.0}}, Relation::Equal, int_pow(b.lo, e));
    return;
  }
  // convex: tangents below at both endpoints and the midpoint, secant above
  tangent_cut(cuts, x, w, b.lo, e, /*under=*/true);
  tangent_cut(cuts, x, w, b.mid(), e, /*under=*/true);
  tangent_cut(cuts, x, w, b.hi, e, /*under=*/true);
  secant_cut(cuts, x, w, b.lo, b.hi, e, /*under=*/false);
}

void emit_odd_power(std::vector<LpRow>& cuts, const Atom& atom, Interval b, int e) {
  const int x = atom.a, w = atom.result;
  if (b.width() <= 0.0) {
    add_cut(cuts, {{w, 1.0}}, Relation::Equal, int_pow(b.lo, e));
    return;
  }
  if (b.lo >= 0.0) {  // convex on the box
    tangent_cut(cuts, x, w, b.lo, e, true);
    tangent_cut(cuts, x, w, b.mid(), e, true);
    tangent_cut(cuts, x, w, b.hi, e, true);
    secant_cut(cuts, x, w, b.lo, b.hi, e, false);
    return;
  }
  if (b.hi <= 0.0) {  // concave on the box
    tangent_cut(cuts, x, w, b.lo, e, false);
    tangent_cut(cuts, x, w, b.mid(), e, false);
    tangent_cut(cuts, x, w, b.hi, e, false);
    secant_cut(cuts, x, w, b.lo, b.hi, e, true);
    return;
  }
  // box straddles the inflection at zero
  const double eps = margin(std::max(std::fabs(int_pow(b.lo, e)), std::fabs(int_pow(b.hi, e))));
  const double ru = odd_tangency(b.lo, b.hi, e);  // under side, tangency in [0, hi]
  if (ru >= b.hi) {
    secant_cut(cuts, x, w, b.lo, b.hi, e, true);
  } else {
    // tangents at r >= ru are valid under-estimators over the whole box
    tangent_cut(cuts, x, w, ru, e, true, eps);
    tangent_cut(cuts, x, w, 0.5 * (ru + b.hi), e, true, eps);
    tangent_cut(cuts, x, w, b.hi, e, true, eps);
  }
  const double ro = -odd_tangency(-b.hi, -b.lo, e);  // over side, tangency in [lo, 0]
  if (ro <= b.lo) {
    secant_cut(cuts, x, w, b.lo, b.hi, e, false);
  } else {
    tangent_cut(cuts, x, w, ro, e, false, eps);
    tangent_cut(cuts, x, w, 0.5 * (ro + b.lo), e, false, eps);
    tangent_cut(cuts, x, w, b.lo, e, false, eps);
  }
}

}  // namespace

std::vector<LpRow> emit_cuts_extended(const Reformulation& reform,
                                      const std::vector<Interval>& extended_boxes) {
  std::vector<LpRow> cuts;
  for (const Atom& atom : reform.atoms()) {
    const Interval ba = extended_boxes[size_t(atom.a)];
    switch (atom.kind) {
      case AtomKind::Bilinear:
        emit_bilinear(cuts, atom, ba, extended_boxes[size_t(atom.b)]);
        break;
      case AtomKind::Square:
        emit_even_power(cuts, atom, ba, 2);
        break;
      case AtomKind::Power:
        if (atom.exponent % 2 == 0)
          emit_even_power(cuts, atom, ba, atom.exponent);
        else
          emit_odd_power(cuts, atom, ba, atom.exponent);
        break;
    }
  }
  return cuts;
}

std::vector<LpRow> emit_cuts(const Reformulation& reform,
                             const std::vector<Interval>& local_original_boxes) {
  return emit_cuts_extended(reform, reform.derive_boxes(local_original_boxes));
}

}  // namespace sdual
