// Reader and printer for the loop program language:
//
//   vars x, y bound 2;
//   pre { x^2 + y^2 - 1 <= 0; }
//   while (x^2 - 0.81 <= 0) {
//     case (true) { x := 0.95x - 0.095y^2; y := 0.95y + 0.19x*y; }
//   }
//   post { 0.25 - x^2 - (y - 1.5)^2 <= 0; }
//   template expr (a, b) { x^2 + 10a*y^2 + 10b <= 0; }
//
// Other template forms: `template poly(x, y; 2) box 10;` and
// `template masked { core x, r; eq y = poly(x, r; 2); ineq { -x <= 0; } }`.
// A case body may end with `while (...) { ... } template ...;`, one level deep.

#include <fstream>
#include <set>
#include <sstream>

#include "invsdp/program.hpp"

namespace invsdp {

namespace {

struct Cmp {
  QPolynomial poly;  // poly <= 0 or poly == 0
  Rel rel;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lx_(text) {}

  ProgramFile run() {
    expect_keyword("vars");
    std::vector<std::string> names;
    std::set<std::string> seen;
    do {
      Token t = lx_.expect_ident();
      if (is_reserved(t.text)) throw ParseError("'" + t.text + "' is reserved", t.line, t.col);
      if (!seen.insert(t.text).second) throw ParseError("variable '" + t.text + "' declared twice", t.line, t.col);
      names.push_back(t.text);
      lx_.accept(",");
    } while (lx_.peek().kind == Token::Ident && !lx_.is("bound"));
    vars_ = make_vars(names);
    auto prog = std::make_shared<LoopProgram>();
    prog->vars = vars_;
    if (lx_.accept("bound")) {
      Token t = lx_.peek();
      QPolynomial n = parse_expr(lx_, vars_);
      if (!n.is_constant() || n.constant_term().sign() <= 0)
        throw ParseError("bound must be a positive constant", t.line, t.col);
      prog->bound = n.constant_term();
    }
    lx_.expect(";");
    bound_ = prog->bound;

    std::shared_ptr<const Template> tpl;
    bool have_pre = false, have_loop = false, have_post = false;
    while (!lx_.at_end()) {
      Token t = lx_.peek();
      if (lx_.accept("pre")) {
        if (have_pre) throw ParseError("second pre block", t.line, t.col);
        have_pre = true;
        prog->pre = constraint_block();
      } else if (lx_.accept("post")) {
        if (have_post) throw ParseError("second post block", t.line, t.col);
        have_post = true;
        prog->post = constraint_block();
      } else if (lx_.accept("while")) {
        if (have_loop) throw ParseError("second top-level loop", t.line, t.col);
        have_loop = true;
        loop_body(*prog, true);
      } else if (lx_.accept("template")) {
        if (tpl) throw ParseError("second template", t.line, t.col);
        tpl = std::make_shared<Template>(template_decl("a"));
      } else {
        lx_.fail("expected pre, while, post or template but found '" + t.text + "'");
      }
    }
    if (!have_loop) lx_.fail("program has no loop");
    try {
      prog->validate();
    } catch (const StructuralError& e) {
      lx_.fail(e.what());
    }
    return {prog, tpl};
  }

 private:
  static bool is_reserved(const std::string& s) {
    static const std::set<std::string> words = {"vars", "bound", "pre",  "post", "while", "case",  "template",
                                                "true", "poly",  "expr", "box",  "masked", "core", "eq", "ineq"};
    return words.count(s) > 0;
  }

  void expect_keyword(const std::string& k) {
    if (!lx_.accept(k)) lx_.fail("expected '" + k + "'");
  }

  Cmp comparison(const VarList& ring) {
    QPolynomial lhs = parse_expr(lx_, ring);
    Token op = lx_.next();
    if (op.kind != Token::Punct || (op.text != "<=" && op.text != ">=" && op.text != "=="))
      throw ParseError("expected '<=', '>=' or '==' but found '" + op.text + "'", op.line, op.col);
    QPolynomial rhs = parse_expr(lx_, ring);
    if (op.text == ">=") return {rhs - lhs, Rel::Le};
    return {lhs - rhs, op.text == "==" ? Rel::Eq : Rel::Le};
  }

  std::vector<Constraint> constraint_block() {
    lx_.expect("{");
    std::vector<Constraint> out;
    while (!lx_.accept("}")) {
      if (lx_.accept("true")) {
        lx_.expect(";");
        continue;
      }
      Cmp c = comparison(vars_);
      lx_.expect(";");
      out.push_back({c.poly, c.rel});
    }
    return out;
  }

  // `true` or comparisons joined by && or ','. Equalities become two
  // inequalities since guards and case conditions are read as g <= 0.
  std::vector<QPolynomial> condition_list() {
    lx_.expect("(");
    std::vector<QPolynomial> out;
    if (lx_.accept("true")) {
      lx_.expect(")");
      return out;
    }
    do {
      Cmp c = comparison(vars_);
      out.push_back(c.poly);
      if (c.rel == Rel::Eq) out.push_back(-c.poly);
    } while (lx_.accept("&&") || lx_.accept(","));
    lx_.expect(")");
    return out;
  }

  void loop_body(LoopProgram& loop, bool outer) {
    loop.guard = condition_list();
    // `while (true)` keeps the constant guard -1 <= 0, so its negation is the
    // unsatisfiable -1 >= 0 rather than an empty disjunction.
    if (loop.guard.empty()) loop.guard.push_back(QPolynomial::constant(vars_, Rational(-1)));
    lx_.expect("{");
    if (lx_.is("case")) {
      while (lx_.accept("case")) {
        Branch b;
        b.conditions = condition_list();
        std::vector<QPolynomial> kept;
        for (auto& c : b.conditions)
          if (!(c.is_constant() && c.constant_term().sign() <= 0)) kept.push_back(c);
        b.conditions = kept;
        lx_.expect("{");
        body(b, outer);
        loop.branches.push_back(std::move(b));
      }
      lx_.expect("}");
    } else {
      Branch b;
      body(b, outer);
      loop.branches.push_back(std::move(b));
    }
  }

  // Statements up to and including the closing brace.
  void body(Branch& b, bool outer) {
    while (!lx_.accept("}")) {
      Token t = lx_.peek();
      if (lx_.accept("while")) {
        if (!outer) throw ParseError("loops nest at most one level deep", t.line, t.col);
        auto inner = std::make_shared<LoopProgram>();
        inner->vars = vars_;
        inner->bound = bound_;
        loop_body(*inner, false);
        Token tt = lx_.peek();
        if (!lx_.accept("template")) throw ParseError("nested loop needs its own template", tt.line, tt.col);
        b.inner_template = std::make_shared<Template>(template_decl("b"));
        b.inner = inner;
        fill_identity(b);
        lx_.expect("}");
        return;
      }
      Token v = lx_.expect_ident();
      if (!var_index(vars_, v.text)) throw ParseError("assignment to unknown variable '" + v.text + "'", v.line, v.col);
      if (b.assign.count(v.text)) throw ParseError("variable '" + v.text + "' assigned twice", v.line, v.col);
      lx_.expect(":=");
      b.assign.emplace(v.text, parse_expr(lx_, vars_));
      lx_.expect(";");
    }
    fill_identity(b);
  }

  void fill_identity(Branch& b) {
    for (const auto& v : *vars_)
      if (!b.assign.count(v)) b.assign.emplace(v, QPolynomial::variable(vars_, v));
  }

  std::vector<std::string> ident_list(const std::string& stop) {
    std::vector<std::string> out;
    while (!lx_.is(stop)) {
      out.push_back(lx_.expect_ident().text);
      if (!lx_.accept(",")) break;
    }
    return out;
  }

  int small_int() {
    Token t = lx_.next();
    if (t.kind != Token::Number || t.text.find_first_not_of("0123456789") != std::string::npos || t.text.size() > 3)
      throw ParseError("expected a small non-negative integer", t.line, t.col);
    return std::stoi(t.text);
  }

  template <class F>
  auto structural(const Token& at, F&& f) {
    try {
      return f();
    } catch (const StructuralError& e) {
      throw ParseError(e.what(), at.line, at.col);
    }
  }

  Template template_decl(const std::string& prefix) {
    Token at = lx_.peek();
    if (lx_.accept("poly")) {
      lx_.expect("(");
      auto over = ident_list(";");
      lx_.expect(";");
      int d = small_int();
      lx_.expect(")");
      Rational w(1);
      if (lx_.accept("box")) {
        Token t = lx_.peek();
        QPolynomial c = parse_expr(lx_, vars_);
        if (!c.is_constant() || c.constant_term().sign() <= 0)
          throw ParseError("box halfwidth must be a positive constant", t.line, t.col);
        w = c.constant_term();
      }
      lx_.expect(";");
      return structural(at, [&] { return make_polynomial_template(vars_, over, d, w, prefix); });
    }
    if (lx_.accept("expr")) {
      lx_.expect("(");
      auto params = ident_list(")");
      lx_.expect(")");
      for (const auto& p : params)
        if (is_reserved(p)) throw ParseError("'" + p + "' is reserved", at.line, at.col);
      VarList ring = structural(at, [&] {
        VarList r = union_vars(make_vars(params), vars_);
        if (r->size() != params.size() + vars_->size()) throw StructuralError("parameter clashes with a variable");
        return r;
      });
      lx_.expect("{");
      std::vector<QPolynomial> polys;
      while (!lx_.accept("}")) {
        Token t = lx_.peek();
        Cmp c = comparison(ring);
        if (c.rel != Rel::Le) throw ParseError("template polynomials must be inequalities", t.line, t.col);
        lx_.expect(";");
        polys.push_back(c.poly);
      }
      lx_.accept(";");
      return structural(at, [&] {
        std::vector<QPolynomial> own;
        for (const auto& p : polys) own.push_back(p.embed(ring));
        return make_expr_template(vars_, params, own);
      });
    }
    if (lx_.accept("masked")) {
      lx_.expect("{");
      expect_keyword("core");
      auto core = ident_list(";");
      lx_.expect(";");
      std::vector<std::pair<std::string, int>> eqs;
      std::vector<QPolynomial> ineqs;
      while (!lx_.accept("}")) {
        if (lx_.accept("eq")) {
          Token z = lx_.expect_ident();
          lx_.expect("=");
          expect_keyword("poly");
          lx_.expect("(");
          auto over = ident_list(";");
          lx_.expect(";");
          int d = small_int();
          lx_.expect(")");
          lx_.expect(";");
          if (std::set<std::string>(over.begin(), over.end()) != std::set<std::string>(core.begin(), core.end()))
            throw ParseError("equality must range over exactly the core variables", z.line, z.col);
          eqs.emplace_back(z.text, d);
        } else if (lx_.accept("ineq")) {
          for (const auto& c : constraint_block()) {
            if (c.rel != Rel::Le) lx_.fail("template inequalities must use <= or >=");
            ineqs.push_back(c.poly);
          }
        } else {
          lx_.fail("expected eq, ineq or '}'");
        }
      }
      lx_.accept(";");
      return structural(at, [&] { return make_masked_template(vars_, core, eqs, ineqs, prefix); });
    }
    lx_.fail("expected poly, expr or masked");
  }

  Lexer lx_;
  VarList vars_;
  std::optional<Rational> bound_;
};

// Always writes an explicit '*' so variables such as e1 never merge with a
// numeric literal.
std::string dsl(const QPolynomial& p) {
  if (p.is_zero()) return "0";
  std::vector<std::pair<Monomial, Rational>> order(p.terms().begin(), p.terms().end());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    return std::lexicographical_compare(b.first.exponents().begin(), b.first.exponents().end(),
                                        a.first.exponents().begin(), a.first.exponents().end());
  });
  std::string s;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& [m, c0] = order[k];
    Rational c = c0;
    bool neg = c.sign() < 0;
    if (neg) c = -c;
    s += k == 0 ? (neg ? "-" : "") : (neg ? " - " : " + ");
    std::string mono;
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (!m[i]) continue;
      if (!mono.empty()) mono += "*";
      mono += (*p.vars())[i];
      if (m[i] > 1) mono += "^" + std::to_string(m[i]);
    }
    if (mono.empty())
      s += c.str();
    else if (c == Rational(1))
      s += mono;
    else
      s += c.str() + "*" + mono;
  }
  return s;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
  return s;
}

std::string conditions(const std::vector<QPolynomial>& cs) {
  bool trivial = cs.empty() || (cs.size() == 1 && cs[0].is_constant() && cs[0].constant_term() == Rational(-1));
  if (trivial) return "true";
  std::string s;
  for (std::size_t i = 0; i < cs.size(); ++i) s += (i ? " && " : "") + dsl(cs[i]) + " <= 0";
  return s;
}

void print_constraints(std::ostringstream& os, const char* head, const std::vector<Constraint>& cs) {
  os << head << " {";
  for (const auto& c : cs) os << ' ' << dsl(c.poly) << (c.rel == Rel::Eq ? " == 0;" : " <= 0;");
  os << (cs.empty() ? "}\n" : " }\n");
}

void print_loop(std::ostringstream& os, const LoopProgram& p, const std::string& indent) {
  os << indent << "while (" << conditions(p.guard) << ") {\n";
  for (const auto& b : p.branches) {
    os << indent << "  case (" << conditions(b.conditions) << ") {\n";
    for (const auto& v : *p.vars) {
      const auto& e = b.assign.at(v);
      if (e == QPolynomial::variable(p.vars, v)) continue;
      os << indent << "    " << v << " := " << dsl(e) << ";\n";
    }
    if (b.inner) {
      print_loop(os, *b.inner, indent + "    ");
      os << indent << "    " << print_template(*b.inner_template, p.vars) << '\n';
    }
    os << indent << "  }\n";
  }
  os << indent << "}\n";
}

}  // namespace

std::string print_template(const Template& t, const VarList& vars) {
  std::ostringstream os;
  os << "template ";
  if (t.kind == TemplateKind::Masked) {
    os << "masked { core " << join(t.core) << ";";
    for (std::size_t r = 0; r < t.noncore.size(); ++r)
      os << " eq " << t.noncore[r] << " = poly(" << join(t.core) << "; " << t.eq_degrees[r] << ");";
    if (!t.ineqs.empty()) {
      os << " ineq {";
      for (const auto& q : t.ineqs) os << ' ' << dsl(q.embed(vars)) << " <= 0;";
      os << " }";
    }
    os << " }";
  } else if (t.explicit_form) {
    os << "expr (" << join(*t.params) << ") {";
    for (const auto& c : t.inv) os << ' ' << dsl(c.poly) << " <= 0;";
    os << " }";
  } else {
    os << "poly(" << join(t.over) << "; " << t.degree << ")";
    if (t.halfwidth != Rational(1)) os << " box " << t.halfwidth.str();
    os << ";";
  }
  return os.str();
}

std::string print_program(const ProgramFile& f) {
  const LoopProgram& p = *f.program;
  std::ostringstream os;
  os << "vars " << join(*p.vars);
  if (p.bound) os << " bound " << p.bound->str();
  os << ";\n";
  print_constraints(os, "pre", p.pre);
  print_loop(os, p, "");
  print_constraints(os, "post", p.post);
  if (f.tpl) os << print_template(*f.tpl, p.vars) << '\n';
  return os.str();
}

ProgramFile parse_program(std::string_view text) { return Parser(text).run(); }

ProgramFile load_program(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_program(ss.str());
}

}  // namespace invsdp
