#include "sdual/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace sdual {

namespace {

double int_pow(double base, int exp) {
  double r = 1.0;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace

double Monomial::evaluate(std::span<const double> point) const {
  double r = 1.0;
  for (const auto& [v, e] : exps_) r *= int_pow(point[size_t(v)], e);
  return r;
}

double Polynomial::evaluate(std::span<const double> point) const {
  double r = 0.0;
  for (const auto& [mono, coef] : terms_) r += coef * mono.evaluate(point);
  return r;
}

void Model::validate() const {
  if (n < 1) throw ModelError("/n", "variable count must be positive");
  if (static_cast<int>(objective.size()) != n)
    throw ModelError("/objective", "dimension mismatch: expected " + std::to_string(n) + " entries");
  if (static_cast<int>(boxes.size()) != n)
    throw ModelError("/boxes", "dimension mismatch: expected " + std::to_string(n) + " entries");
  if (static_cast<int>(integer_flags.size()) != n)
    throw ModelError("/integer", "integer flag vector has wrong length");
  for (int j = 0; j < n; ++j) {
    const Interval& b = boxes[size_t(j)];
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi))
      throw ModelError("/boxes/" + std::to_string(j), "unbounded variable");
    if (b.lo > b.hi)
      throw ModelError("/boxes/" + std::to_string(j), "empty box");
  }
  for (double c : objective)
    if (!std::isfinite(c)) throw ModelError("/objective", "non-finite coefficient");
  auto check_rows = [&](const std::vector<LinearConstraint>& rows, const std::string& name) {
    for (size_t r = 0; r < rows.size(); ++r) {
      if (!std::isfinite(rows[r].rhs))
        throw ModelError("/" + name + "/" + std::to_string(r), "non-finite rhs");
      for (const auto& [j, a] : rows[r].coeffs) {
        if (j < 0 || j >= n)
          throw ModelError("/" + name + "/" + std::to_string(r), "dimension mismatch: variable index " + std::to_string(j));
        if (!std::isfinite(a))
          throw ModelError("/" + name + "/" + std::to_string(r), "non-finite coefficient");
      }
    }
  };
  check_rows(linear_rows, "linear");
  check_rows(refined_rows, "refined");
  if (nonlinear.empty()) throw ModelError("/nonlinear", "no nonlinear constraints");
  for (size_t i = 0; i < nonlinear.size(); ++i) {
    if (nonlinear[i].max_var() >= n)
      throw ModelError("/nonlinear/" + std::to_string(i), "dimension mismatch: variable index " + std::to_string(nonlinear[i].max_var()));
    for (const auto& [mono, coef] : nonlinear[i].terms()) {
      if (!std::isfinite(coef))
        throw ModelError("/nonlinear/" + std::to_string(i), "non-finite coefficient");
      for (const auto& [v, e] : mono.exponents())
        if (e < 1) throw ModelError("/nonlinear/" + std::to_string(i), "non-positive exponent");
    }
  }
  if (primal_cutoff && !std::isfinite(*primal_cutoff))
    throw ModelError("/primal_cutoff", "non-finite cutoff");
}

Polynomial aggregate(const Model& model, std::span<const double> lambda_row) {
  const size_t m = model.nonlinear.size();
  if (lambda_row.size() != m)
    throw std::invalid_argument("aggregate: lambda has length " + std::to_string(lambda_row.size()) +
                                ", model has m=" + std::to_string(m));
  for (double v : lambda_row)
    if (!(v >= 0.0)) throw std::invalid_argument("aggregate: negative entry");
  Polynomial out;
  for (size_t i = 0; i < m; ++i)
    if (lambda_row[i] != 0.0) out.add_scaled(model.nonlinear[i], lambda_row[i]);
  return out;
}

namespace {

using nlohmann::json;

int parse_var_index(const std::string& key, int n, const std::string& path) {
  size_t pos = 0;
  int j = -1;
  try {
    j = std::stoi(key, &pos);
  } catch (const std::exception&) {
    throw ModelError(path, "bad variable index '" + key + "'");
  }
  if (pos != key.size()) throw ModelError(path, "bad variable index '" + key + "'");
  if (j < 0 || j >= n) throw ModelError(path, "dimension mismatch: variable index " + key);
  return j;
}

double require_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ModelError(path, "expected a number");
  return v.get<double>();
}

std::vector<LinearConstraint> parse_rows(const json& arr, int n, const std::string& name) {
  std::vector<LinearConstraint> rows;
  if (arr.is_null()) return rows;
  if (!arr.is_array()) throw ModelError("/" + name, "expected an array");
  for (size_t r = 0; r < arr.size(); ++r) {
    const std::string path = "/" + name + "/" + std::to_string(r);
    const json& row = arr[r];
    if (!row.is_object() || !row.contains("coeffs") || !row.contains("rhs"))
      throw ModelError(path, "expected {\"coeffs\": {...}, \"rhs\": number}");
    LinearConstraint c;
    c.rhs = require_number(row["rhs"], path + "/rhs");
    if (!row["coeffs"].is_object()) throw ModelError(path + "/coeffs", "expected an object");
    for (const auto& [key, val] : row["coeffs"].items()) {
      int j = parse_var_index(key, n, path + "/coeffs");
      c.coeffs.emplace_back(j, require_number(val, path + "/coeffs/" + key));
    }
    std::sort(c.coeffs.begin(), c.coeffs.end());
    rows.push_back(std::move(c));
  }
  return rows;
}

}  // namespace

Model parse_model(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::out_of_range&) {
    throw ModelError("/", "unbounded variable or coefficient overflow");
  } catch (const json::exception& e) {
    throw ModelError("/", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ModelError("/", "expected a JSON object");
  if (!doc.contains("n") || !doc["n"].is_number_integer())
    throw ModelError("/n", "expected an integer");

  Model model;
  model.n = doc["n"].get<int>();
  if (model.n < 1) throw ModelError("/n", "variable count must be positive");

  if (!doc.contains("objective") || !doc["objective"].is_array())
    throw ModelError("/objective", "expected an array");
  for (size_t j = 0; j < doc["objective"].size(); ++j)
    model.objective.push_back(require_number(doc["objective"][j], "/objective/" + std::to_string(j)));

  if (!doc.contains("boxes") || !doc["boxes"].is_array())
    throw ModelError("/boxes", "expected an array");
  // box endpoints may be written as null or "inf"/"-inf"; both fail the
  // finite-box requirement with a precise path
  auto bound_value = [](const json& v, const std::string& path, double sign) -> double {
    if (v.is_number()) return v.get<double>();
    if (v.is_null()) return sign * std::numeric_limits<double>::infinity();
    if (v.is_string()) {
      const std::string s = v.get<std::string>();
      if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
      if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    throw ModelError(path, "expected a number");
  };
  for (size_t j = 0; j < doc["boxes"].size(); ++j) {
    const std::string path = "/boxes/" + std::to_string(j);
    const json& b = doc["boxes"][j];
    if (!b.is_array() || b.size() != 2) throw ModelError(path, "expected [lo, hi]");
    Interval iv{bound_value(b[0], path, -1.0), bound_value(b[1], path, 1.0)};
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi))
      throw ModelError(path, "unbounded variable");
    model.boxes.push_back(iv);
  }

  model.integer_flags.assign(size_t(model.n), 0);
  if (doc.contains("integer")) {
    if (!doc["integer"].is_array()) throw ModelError("/integer", "expected an array of indices");
    for (size_t k = 0; k < doc["integer"].size(); ++k) {
      const json& v = doc["integer"][k];
      if (!v.is_number_integer())
        throw ModelError("/integer/" + std::to_string(k), "expected an integer index");
      int j = v.get<int>();
      if (j < 0 || j >= model.n)
        throw ModelError("/integer/" + std::to_string(k), "dimension mismatch: variable index " + std::to_string(j));
      model.integer_flags[size_t(j)] = 1;
    }
  }

  model.linear_rows = parse_rows(doc.value("linear", json(nullptr)), model.n, "linear");
  model.refined_rows = parse_rows(doc.value("refined", json(nullptr)), model.n, "refined");

  if (!doc.contains("nonlinear") || !doc["nonlinear"].is_array())
    throw ModelError("/nonlinear", "expected an array");
  if (doc["nonlinear"].empty()) throw ModelError("/nonlinear", "no nonlinear constraints");
  for (size_t i = 0; i < doc["nonlinear"].size(); ++i) {
    const std::string gpath = "/nonlinear/" + std::to_string(i);
    const json& g = doc["nonlinear"][i];
    if (!g.is_object() || !g.contains("terms") || !g["terms"].is_array())
      throw ModelError(gpath, "expected {\"terms\": [...]}");
    Polynomial poly;
    for (size_t t = 0; t < g["terms"].size(); ++t) {
      const std::string tpath = gpath + "/terms/" + std::to_string(t);
      const json& term = g["terms"][t];
      if (!term.is_object() || !term.contains("coef"))
        throw ModelError(tpath, "expected {\"exps\": {...}, \"coef\": number}");
      Monomial mono;
      if (term.contains("exps")) {
        if (!term["exps"].is_object()) throw ModelError(tpath + "/exps", "expected an object");
        for (const auto& [key, val] : term["exps"].items()) {
          int j = parse_var_index(key, model.n, tpath + "/exps");
          if (!val.is_number_integer() || val.get<int>() < 1)
            throw ModelError(tpath + "/exps/" + key, "exponent must be a positive integer");
          mono.set(j, val.get<int>());
        }
      }
      poly.add_term(mono, require_number(term["coef"], tpath + "/coef"));
    }
    model.nonlinear.push_back(std::move(poly));
  }

  if (doc.contains("primal_cutoff") && !doc["primal_cutoff"].is_null())
    model.primal_cutoff = require_number(doc["primal_cutoff"], "/primal_cutoff");

  model.validate();
  return model;
}

std::string serialize_model(const Model& model) {
  json doc;
  doc["n"] = model.n;
  doc["objective"] = model.objective;
  json boxes = json::array();
  for (const Interval& b : model.boxes) boxes.push_back({b.lo, b.hi});
  doc["boxes"] = boxes;
  json ints = json::array();
  for (int j = 0; j < model.n; ++j)
    if (model.integer_flags[size_t(j)]) ints.push_back(j);
  doc["integer"] = ints;
  auto rows_to_json = [](const std::vector<LinearConstraint>& rows) {
    json arr = json::array();
    for (const LinearConstraint& c : rows) {
      json coeffs = json::object();
      for (const auto& [j, a] : c.coeffs) coeffs[std::to_string(j)] = a;
      arr.push_back({{"coeffs", coeffs}, {"rhs", c.rhs}});
    }
    return arr;
  };
  doc["linear"] = rows_to_json(model.linear_rows);
  doc["refined"] = rows_to_json(model.refined_rows);
  json nl = json::array();
  for (const Polynomial& g : model.nonlinear) {
    json terms = json::array();
    for (const auto& [mono, coef] : g.terms()) {
      json exps = json::object();
      for (const auto& [v, e] : mono.exponents()) exps[std::to_string(v)] = e;
      terms.push_back({{"exps", exps}, {"coef", coef}});
    }
    nl.push_back({{"terms", terms}});
  }
  doc["nonlinear"] = nl;
  if (model.primal_cutoff) doc["primal_cutoff"] = *model.primal_cutoff;
  return doc.dump(2);
}

}  // namespace sdual
