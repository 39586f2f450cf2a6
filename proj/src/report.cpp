#include "invsdp/report.hpp"

#include <cmath>

#include "invsdp/parse.hpp"

namespace invsdp {

namespace {

std::string rel_name(Rel r) { return r == Rel::Eq ? "==" : "<="; }

Json point_json(const std::map<std::string, double>& p) {
  Json j = Json::object();
  for (const auto& [k, v] : p) j[k] = v;
  return j;
}

Json box_json(const Box& b) { return Json{{"lo", b.lo}, {"hi", b.hi}}; }

Json rationals(const std::vector<Rational>& v) {
  Json j = Json::array();
  for (const auto& q : v) j.push_back(q.str());
  return j;
}

}  // namespace

Json verdict_json(const Verdict& v) {
  Json j;
  j["level"] = level_name(v.level);
  Json conds = Json::array();
  for (const auto& c : v.conditions) {
    Json cj{{"id", c.id}, {"level", level_name(c.level)}, {"detail", c.detail}};
    if (c.counterexample) cj["counterexample"] = point_json(c.counterexample->point);
    if (c.defect) cj["defect"] = *c.defect;
    conds.push_back(std::move(cj));
  }
  j["per_condition"] = std::move(conds);
  if (v.counterexample)
    j["counterexample"] = Json{{"condition", v.counterexample->condition},
                               {"point", point_json(v.counterexample->point)},
                               {"violation", v.counterexample->violation}};
  if (v.defect) j["defect"] = *v.defect;
  return j;
}

Json constraints_json(const std::vector<Constraint>& inv) {
  Json arr = Json::array();
  for (const auto& c : inv) arr.push_back(Json{{"poly", c.poly.to_string()}, {"relation", rel_name(c.rel)}});
  return Json{{"constraints", std::move(arr)}};
}

Json cluster_json(const UnderApprox& u, const std::vector<std::string>& params) {
  Json j;
  j["degree"] = u.degree;
  j["relax_order"] = u.order;
  j["solved"] = u.solved;
  j["feasible"] = u.feasible;
  j["status"] = u.status;
  if (!u.message.empty()) j["message"] = u.message;
  j["objective"] = u.objective;
  j["residual"] = u.residual;
  j["sdp_rows"] = u.sdp_rows;
  j["params"] = params;
  VarList pv = make_vars(params);
  Json coeffs = Json::object();
  for (const auto& [m, c] : u.h_rounded.terms())
    coeffs[Polynomial::term(pv, m, 1.0).to_string()] = c;
  j["h_coefficients"] = std::move(coeffs);
  j["box"] = box_json(u.box);
  if (u.witness) {
    const auto& w = *u.witness;
    Json wj{{"a", w.a}, {"exact", rationals(w.exact)}, {"h_value", w.h_value},
            {"invariant", constraints_json(w.invariant)["constraints"]}};
    if (!w.inner_invariant.empty()) wj["inner_invariant"] = constraints_json(w.inner_invariant)["constraints"];
    j["witness"] = std::move(wj);
  }
  j["verification"] = u.witness && u.witness->verified ? Json(level_name(*u.witness->verified)) : Json(nullptr);
  j["timings"] = Json{{"total_seconds", u.seconds}};
  return j;
}

Json partition_json(const PartitionResult& p, const std::vector<std::string>& params) {
  Json leaves = Json::array();
  for (const auto& u : p.leaves) leaves.push_back(cluster_json(u, params));
  Json splits = Json::array();
  for (const auto& s : p.splits) {
    Json sj{{"box", box_json(s.box)}, {"v", s.v}, {"v_lo", s.v_lo}, {"v_hi", s.v_hi}};
    // Infinity has no JSON spelling.
    sj["dv"] = std::isfinite(s.dv) ? Json(s.dv) : Json(nullptr);
    splits.push_back(std::move(sj));
  }
  return Json{{"leaves", std::move(leaves)}, {"splits", std::move(splits)}};
}

Json mask_json(const MaskResult& r, const Template& tpl) {
  Json j;
  j["status"] = r.found ? "found" : "not_found";
  j["core"] = r.split.core;
  j["noncore"] = r.split.noncore;
  Json assign = Json::object();
  for (std::size_t i = 0; i < r.params.size(); ++i) assign[(*tpl.params)[i]] = r.params[i].str();
  j["assignment"] = std::move(assign);
  Json eqs = Json::array(), ineqs = Json::array();
  for (const auto& c : r.invariant) {
    if (c.rel == Rel::Le) {
      ineqs.push_back(c.poly.to_string() + " <= 0");
      continue;
    }
    // Masked equalities read z - I(y) == 0; print them solved for z.
    std::string text = c.poly.to_string() + " == 0";
    for (const auto& z : tpl.noncore) {
      auto zi = var_index(c.poly.vars(), z);
      if (!zi || c.poly.degree_in({*zi}) != 1) continue;
      QPolynomial zp = QPolynomial::variable(c.poly.vars(), z);
      QPolynomial rest = zp - c.poly;
      if (rest.depends_on(*zi)) continue;
      text = z + " == " + rest.to_string();
      break;
    }
    eqs.push_back(text);
  }
  j["invariant_equalities"] = std::move(eqs);
  j["invariant_inequalities"] = std::move(ineqs);
  j["relax_order"] = r.found ? Json(r.order) : Json(nullptr);
  j["verification"] = r.found || !r.verdict.conditions.empty() ? verdict_json(r.verdict) : Json(nullptr);
  Json attempts = Json::array();
  for (const auto& a : r.attempts) {
    Json aj{{"order", a.order}, {"status", a.status}, {"slack", a.slack}, {"residual", a.residual}};
    aj["verification"] = a.verified ? Json(level_name(*a.verified)) : Json(nullptr);
    if (!a.note.empty()) aj["note"] = a.note;
    attempts.push_back(std::move(aj));
  }
  j["attempts"] = std::move(attempts);
  j["timings"] = Json{{"total_seconds", r.seconds}};
  return j;
}

std::vector<Constraint> constraints_from_json(const Json& j, const VarList& vars) {
  if (!j.contains("constraints") || !j["constraints"].is_array())
    throw StructuralError("invariant JSON needs a 'constraints' array");
  std::vector<Constraint> out;
  for (const auto& c : j["constraints"]) {
    QPolynomial p = parse_polynomial(c.at("poly").get<std::string>(), vars);
    std::string rel = c.value("relation", "<=");
    if (rel == "==")
      out.push_back({p, Rel::Eq});
    else if (rel == "<=")
      out.push_back({p, Rel::Le});
    else if (rel == ">=")
      out.push_back({-p, Rel::Le});
    else
      throw StructuralError("unknown relation '" + rel + "'");
  }
  return out;
}

Polynomial h_from_json(const Json& u, const std::vector<std::string>& params) {
  VarList pv = make_vars(params);
  Polynomial h(pv);
  const Json& coeffs = u.at("h_coefficients");
  for (auto it = coeffs.begin(); it != coeffs.end(); ++it)
    h += to_float(parse_polynomial(it.key(), pv)) * it.value().get<double>();
  return h;
}

Json strip_timings(Json j) {
  if (j.is_object()) {
    j.erase("timings");
    for (auto it = j.begin(); it != j.end(); ++it) *it = strip_timings(*it);
  } else if (j.is_array()) {
    for (auto& v : j) v = strip_timings(v);
  }
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace invsdp
