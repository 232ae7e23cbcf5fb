#include "gfqi/expr.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <unordered_map>

namespace gfqi {

Expr make_node(ExprKind kind, std::vector<Expr> children, int exponent) {
  auto n = std::make_shared<ExprNode>();
  n->kind = kind;
  n->children = std::move(children);
  n->exponent = exponent;
  return Expr(std::move(n));
}

namespace {

Expr unary(ExprKind k, const Expr& a) { return make_node(k, {a}, 0); }

double ipow(double b, int n) { return std::pow(b, static_cast<double>(n)); }

double apply_unary(ExprKind k, double a) {
  switch (k) {
    case ExprKind::sqrt:
      if (a < 0.0) throw DomainError("sqrt of negative argument " + format_double(a));
      return std::sqrt(a);
    case ExprKind::sin: return std::sin(a);
    case ExprKind::cos: return std::cos(a);
    case ExprKind::exp: return std::exp(a);
    case ExprKind::bump: return bump_value(a);
    default: break;
  }
  return 0.0;
}

const char* op_name(ExprKind k) {
  switch (k) {
    case ExprKind::sum: return "+";
    case ExprKind::product: return "*";
    case ExprKind::power: return "pow";
    case ExprKind::sqrt: return "sqrt";
    case ExprKind::sin: return "sin";
    case ExprKind::cos: return "cos";
    case ExprKind::exp: return "exp";
    case ExprKind::bump: return "bump";
    default: return "";
  }
}

}  // namespace

Expr::Expr() : Expr(constant(0.0)) {}

Expr Expr::constant(double value) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::constant;
  n->value = value;
  return Expr(std::move(n));
}

Expr Expr::variable(std::string name) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::variable;
  n->name = std::move(name);
  return Expr(std::move(n));
}

ExprKind Expr::kind() const { return node_->kind; }
double Expr::value() const { return node_->value; }
const std::string& Expr::name() const { return node_->name; }
int Expr::exponent() const { return node_->exponent; }
const std::vector<Expr>& Expr::children() const { return node_->children; }

double bump_value(double x) {
  if (!(std::fabs(x) < 1.0)) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - x * x));
}

Expr sum(std::vector<Expr> terms) {
  if (terms.empty()) return Expr::constant(0.0);
  if (terms.size() == 1) return terms.front();
  return make_node(ExprKind::sum, std::move(terms), 0);
}

Expr product(std::vector<Expr> factors) {
  if (factors.empty()) return Expr::constant(1.0);
  if (factors.size() == 1) return factors.front();
  return make_node(ExprKind::product, std::move(factors), 0);
}

Expr pow(const Expr& base, int exponent) { return make_node(ExprKind::power, {base}, exponent); }
Expr sqrt(const Expr& a) { return unary(ExprKind::sqrt, a); }
Expr sin(const Expr& a) { return unary(ExprKind::sin, a); }
Expr cos(const Expr& a) { return unary(ExprKind::cos, a); }
Expr exp(const Expr& a) { return unary(ExprKind::exp, a); }
Expr bump(const Expr& a) { return unary(ExprKind::bump, a); }

Expr operator+(const Expr& a, const Expr& b) { return sum({a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return sum({a, product({Expr::constant(-1.0), b})}); }
Expr operator*(const Expr& a, const Expr& b) { return product({a, b}); }
Expr operator-(const Expr& a) { return product({Expr::constant(-1.0), a}); }
Expr operator+(const Expr& a, double b) { return a + Expr::constant(b); }
Expr operator+(double a, const Expr& b) { return Expr::constant(a) + b; }
Expr operator-(const Expr& a, double b) { return a + Expr::constant(-b); }
Expr operator-(double a, const Expr& b) { return Expr::constant(a) - b; }
Expr operator*(const Expr& a, double b) { return a * Expr::constant(b); }
Expr operator*(double a, const Expr& b) { return Expr::constant(a) * b; }

double eval(const Expr& e, const Assignment& point) {
  switch (e.kind()) {
    case ExprKind::constant: return e.value();
    case ExprKind::variable: {
      auto it = point.find(e.name());
      if (it == point.end()) throw UnboundVariable(e.name());
      return it->second;
    }
    case ExprKind::sum: {
      double s = 0.0;
      bool first = true;
      for (const auto& c : e.children()) {
        double v = eval(c, point);
        s = first ? v : s + v;
        first = false;
      }
      return s;
    }
    case ExprKind::product: {
      double p = 1.0;
      bool zero = false, first = true;
      for (const auto& c : e.children()) {
        double v = eval(c, point);
        if (v == 0.0) zero = true;
        p = first ? v : p * v;
        first = false;
      }
      return zero ? 0.0 : p;
    }
    case ExprKind::power: return ipow(eval(e.children()[0], point), e.exponent());
    default: return apply_unary(e.kind(), eval(e.children()[0], point));
  }
}

Expr diff(const Expr& e, std::string_view var) {
  std::unordered_map<const ExprNode*, Expr> memo;
  auto rec = [&](auto&& self, const Expr& x) -> Expr {
    if (auto it = memo.find(x.id()); it != memo.end()) return it->second;
    Expr d;
    const auto& ch = x.children();
    switch (x.kind()) {
      case ExprKind::constant: d = Expr::constant(0.0); break;
      case ExprKind::variable: d = Expr::constant(x.name() == var ? 1.0 : 0.0); break;
      case ExprKind::sum: {
        std::vector<Expr> terms;
        for (const auto& c : ch) terms.push_back(self(self, c));
        d = sum(std::move(terms));
        break;
      }
      case ExprKind::product: {
        std::vector<Expr> terms;
        for (std::size_t i = 0; i < ch.size(); ++i) {
          Expr di = self(self, ch[i]);
          if (di.is_constant(0.0)) continue;
          std::vector<Expr> f = ch;
          f[i] = di;
          terms.push_back(product(std::move(f)));
        }
        d = sum(std::move(terms));
        break;
      }
      case ExprKind::power: {
        int n = x.exponent();
        Expr dc = self(self, ch[0]);
        d = n == 0 ? Expr::constant(0.0)
                   : product({Expr::constant(n), pow(ch[0], n - 1), dc});
        break;
      }
      case ExprKind::sqrt:
        d = product({Expr::constant(0.5), pow(x, -1), self(self, ch[0])});
        break;
      case ExprKind::sin: d = product({cos(ch[0]), self(self, ch[0])}); break;
      case ExprKind::cos:
        d = product({Expr::constant(-1.0), sin(ch[0]), self(self, ch[0])});
        break;
      case ExprKind::exp: d = product({x, self(self, ch[0])}); break;
      case ExprKind::bump: {
        const Expr& a = ch[0];
        Expr one_minus = sum({Expr::constant(1.0), product({Expr::constant(-1.0), pow(a, 2)})});
        d = product({Expr::constant(-2.0), a, pow(one_minus, -2), x, self(self, a)});
        break;
      }
    }
    d = simplify(d);
    memo.emplace(x.id(), d);
    return d;
  };
  return rec(rec, e);
}

Expr substitute(const Expr& e, const Bindings& bindings) {
  if (bindings.empty()) return e;
  std::unordered_map<const ExprNode*, Expr> memo;
  auto rec = [&](auto&& self, const Expr& x) -> Expr {
    if (auto it = memo.find(x.id()); it != memo.end()) return it->second;
    Expr r = x;
    if (x.kind() == ExprKind::variable) {
      if (auto it = bindings.find(x.name()); it != bindings.end()) r = it->second;
    } else if (x.kind() != ExprKind::constant) {
      std::vector<Expr> ch;
      bool changed = false;
      for (const auto& c : x.children()) {
        ch.push_back(self(self, c));
        changed = changed || ch.back().id() != c.id();
      }
      if (changed) r = make_node(x.kind(), std::move(ch), x.exponent());
    }
    memo.emplace(x.id(), r);
    return r;
  };
  return rec(rec, e);
}

namespace {

// One bottom-up pass. Only rewrites that leave left-to-right evaluation
// bit-identical are applied.
Expr simplify_pass(const Expr& e, std::unordered_map<const ExprNode*, Expr>& memo) {
  if (auto it = memo.find(e.id()); it != memo.end()) return it->second;
  Expr r = e;
  switch (e.kind()) {
    case ExprKind::constant:
    case ExprKind::variable: break;
    case ExprKind::sum:
    case ExprKind::product: {
      const bool is_sum = e.kind() == ExprKind::sum;
      const double unit = is_sum ? 0.0 : 1.0;
      std::vector<Expr> ch;
      for (const auto& c : e.children()) ch.push_back(simplify_pass(c, memo));
      if (!is_sum) {
        for (const auto& c : ch)
          if (c.is_constant(0.0)) {
            r = Expr::constant(0.0);
            memo.emplace(e.id(), r);
            return r;
          }
      }
      if (!ch.empty() && ch[0].kind() == e.kind()) {
        std::vector<Expr> flat = ch[0].children();
        flat.insert(flat.end(), ch.begin() + 1, ch.end());
        ch = std::move(flat);
      }
      std::size_t lead = 0;
      double acc = unit;
      while (lead < ch.size() && ch[lead].is_constant()) {
        acc = lead == 0 ? ch[0].value() : (is_sum ? acc + ch[lead].value() : acc * ch[lead].value());
        ++lead;
      }
      std::vector<Expr> out;
      if (lead > 0 && (lead == ch.size() || acc != unit)) out.push_back(Expr::constant(acc));
      for (std::size_t i = lead; i < ch.size(); ++i)
        if (!ch[i].is_constant(unit)) out.push_back(ch[i]);
      if (out.empty()) r = Expr::constant(unit);
      else if (out.size() == 1) r = out[0];
      else r = make_node(e.kind(), std::move(out), 0);
      break;
    }
    case ExprKind::power: {
      Expr c = simplify_pass(e.children()[0], memo);
      int n = e.exponent();
      if (n == 0) r = Expr::constant(1.0);
      else if (n == 1) r = c;
      else if (c.is_constant()) r = Expr::constant(ipow(c.value(), n));
      else if (c.id() != e.children()[0].id()) r = pow(c, n);
      break;
    }
    default: {
      Expr c = simplify_pass(e.children()[0], memo);
      if (c.is_constant() && !(e.kind() == ExprKind::sqrt && c.value() < 0.0))
        r = Expr::constant(apply_unary(e.kind(), c.value()));
      else if (c.id() != e.children()[0].id())
        r = unary(e.kind(), c);
      break;
    }
  }
  memo.emplace(e.id(), r);
  return r;
}

}  // namespace

Expr simplify(const Expr& e) {
  Expr cur = e;
  for (int pass = 0; pass < 32; ++pass) {
    std::unordered_map<const ExprNode*, Expr> memo;
    Expr next = simplify_pass(cur, memo);
    if (next.id() == cur.id()) break;
    cur = next;
  }
  return cur;
}

std::set<std::string> free_variables(const Expr& e) {
  std::set<std::string> out;
  std::unordered_map<const ExprNode*, bool> seen;
  auto rec = [&](auto&& self, const Expr& x) -> void {
    if (!seen.emplace(x.id(), true).second) return;
    if (x.kind() == ExprKind::variable) out.insert(x.name());
    for (const auto& c : x.children()) self(self, c);
  };
  rec(rec, e);
  return out;
}

std::size_t node_count(const Expr& e) {
  std::size_t n = 1;
  for (const auto& c : e.children()) n += node_count(c);
  return n;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string to_prefix(const Expr& e) {
  std::string out;
  auto rec = [&](auto&& self, const Expr& x) -> void {
    switch (x.kind()) {
      case ExprKind::constant: out += format_double(x.value()); return;
      case ExprKind::variable: out += x.name(); return;
      default: break;
    }
    out += '(';
    out += op_name(x.kind());
    for (const auto& c : x.children()) {
      out += ' ';
      self(self, c);
    }
    if (x.kind() == ExprKind::power) out += ' ' + std::to_string(x.exponent());
    out += ')';
  };
  rec(rec, e);
  return out;
}

namespace {

class PrefixParser {
 public:
  explicit PrefixParser(std::string_view s) : s_(s) {}

  Expr parse_all() {
    Expr e = parse();
    skip_ws();
    if (pos_ != s_.size()) throw ParseError("unexpected trailing input", pos_);
    return e;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  std::string_view atom() {
    std::size_t start = pos_;
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) &&
           s_[pos_] != '(' && s_[pos_] != ')')
      ++pos_;
    return s_.substr(start, pos_ - start);
  }

  static bool is_identifier(std::string_view a) {
    if (a.empty() || !(std::isalpha(static_cast<unsigned char>(a[0])) || a[0] == '_')) return false;
    for (char c : a)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
  }

  static bool to_number(std::string_view a, double& v) {
    std::string tmp(a);
    char* end = nullptr;
    v = std::strtod(tmp.c_str(), &end);
    return !tmp.empty() && end == tmp.c_str() + tmp.size();
  }

  Expr parse() {
    skip_ws();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
    if (s_[pos_] == ')') throw ParseError("unexpected ')'", pos_);
    if (s_[pos_] != '(') {
      std::size_t at = pos_;
      std::string_view a = atom();
      double v;
      if (to_number(a, v)) return Expr::constant(v);
      if (is_identifier(a)) return Expr::variable(std::string(a));
      throw ParseError("bad atom '" + std::string(a) + "'", at);
    }
    std::size_t open = pos_++;
    skip_ws();
    std::size_t op_at = pos_;
    std::string op(atom());
    if (op.empty()) throw ParseError("missing operator", op_at);
    std::vector<Expr> args;
    int exponent = 0;
    for (;;) {
      skip_ws();
      if (pos_ >= s_.size()) throw ParseError("unclosed '('", open);
      if (s_[pos_] == ')') {
        ++pos_;
        break;
      }
      if (op == "pow" && args.size() == 1) {
        std::size_t at = pos_;
        std::string_view a = atom();
        double v;
        if (!to_number(a, v) || v != std::floor(v) || std::fabs(v) > 1e6)
          throw ParseError("pow exponent must be an integer", at);
        exponent = static_cast<int>(v);
        args.push_back(Expr::constant(v));
        continue;
      }
      args.push_back(parse());
    }
    auto need = [&](std::size_t n) {
      if (args.size() != n)
        throw ParseError("operator '" + op + "' expects " + std::to_string(n) + " operand(s)", op_at);
    };
    if (op == "+") {
      if (args.empty()) throw ParseError("'+' needs operands", op_at);
      return make_node(ExprKind::sum, std::move(args), 0);
    }
    if (op == "*") {
      if (args.empty()) throw ParseError("'*' needs operands", op_at);
      return make_node(ExprKind::product, std::move(args), 0);
    }
    if (op == "-") {
      if (args.size() == 1) return -args[0];
      need(2);
      return args[0] - args[1];
    }
    if (op == "pow") {
      need(2);
      return pow(args[0], exponent);
    }
    static const std::pair<const char*, ExprKind> unaries[] = {
        {"sqrt", ExprKind::sqrt}, {"sin", ExprKind::sin}, {"cos", ExprKind::cos},
        {"exp", ExprKind::exp},   {"bump", ExprKind::bump}};
    for (const auto& [name, kind] : unaries)
      if (op == name) {
        need(1);
        return unary(kind, args[0]);
      }
    throw ParseError("unknown operator '" + op + "'", op_at);
  }
};

}  // namespace

Expr parse_prefix(std::string_view text) { return PrefixParser(text).parse_all(); }

CompiledExpr::CompiledExpr(const Expr& e, const std::vector<std::string>& slots)
    : CompiledExpr(std::vector<Expr>{e}, slots) {}

CompiledExpr::CompiledExpr(const std::vector<Expr>& outputs, const std::vector<std::string>& slots) {
  std::unordered_map<const ExprNode*, int> index;
  auto rec = [&](auto&& self, const Expr& x) -> int {
    if (auto it = index.find(x.id()); it != index.end()) return it->second;
    std::vector<int> kids;
    for (const auto& c : x.children()) kids.push_back(self(self, c));
    Op op{x.kind(), x.value(), -1, x.exponent(), static_cast<int>(args_.size()),
          static_cast<int>(kids.size()), 0};
    if (x.kind() == ExprKind::variable) {
      for (std::size_t i = 0; i < slots.size(); ++i)
        if (slots[i] == x.name()) op.slot = static_cast<int>(i);
      if (op.slot < 0) throw UnboundVariable(x.name());
      op.deps = std::uint64_t{1} << std::min(op.slot, 63);
    }
    for (int k : kids) op.deps |= ops_[k].deps;
    args_.insert(args_.end(), kids.begin(), kids.end());
    ops_.push_back(op);
    int id = static_cast<int>(ops_.size()) - 1;
    index.emplace(x.id(), id);
    return id;
  };
  for (const auto& e : outputs) outputs_.push_back(rec(rec, e));
  static std::atomic<std::uint64_t> next_id{1};
  id_ = next_id++;
}

namespace {

// Registers of recently used tapes. Ops whose slots did not change since the
// previous call on the same tape keep their values.
struct RegCache {
  std::uint64_t id = 0;
  bool valid = false;
  std::vector<double> regs;
  std::vector<double> last;
  std::uint64_t stamp = 0;
};

RegCache& cache_for(std::uint64_t id) {
  thread_local std::array<RegCache, 16> caches;
  thread_local std::uint64_t clock = 0;
  ++clock;
  RegCache* oldest = &caches[0];
  for (auto& c : caches) {
    if (c.id == id) {
      c.stamp = clock;
      return c;
    }
    if (c.stamp < oldest->stamp) oldest = &c;
  }
  oldest->id = id;
  oldest->valid = false;
  oldest->stamp = clock;
  return *oldest;
}

}  // namespace

void CompiledExpr::eval_all(std::span<const double> values, std::span<double> out) const {
  RegCache& cache = cache_for(id_);
  std::vector<double>& regs = cache.regs;
  const bool full = !cache.valid || cache.last.size() != values.size() || regs.size() != ops_.size();
  std::uint64_t changed = 0;
  if (!full) {
    for (std::size_t i = 0; i < values.size(); ++i)
      if (!(cache.last[i] == values[i]) || std::isnan(values[i]))
        changed |= std::uint64_t{1} << std::min<std::size_t>(i, 63);
  }
  cache.valid = false;
  cache.last.assign(values.begin(), values.end());
  regs.resize(ops_.size());
  for (std::size_t i = 0; i < ops_.size(); ++i) {
    const Op& op = ops_[i];
    if (!full && !(op.deps & changed)) continue;
    const int* a = args_.data() + op.first;
    double v = 0.0;
    switch (op.kind) {
      case ExprKind::constant: v = op.value; break;
      case ExprKind::variable: v = values[op.slot]; break;
      case ExprKind::sum:
        v = regs[a[0]];
        for (int j = 1; j < op.count; ++j) v += regs[a[j]];
        break;
      case ExprKind::product: {
        bool zero = regs[a[0]] == 0.0;
        v = regs[a[0]];
        for (int j = 1; j < op.count; ++j) {
          zero = zero || regs[a[j]] == 0.0;
          v *= regs[a[j]];
        }
        if (zero) v = 0.0;
        break;
      }
      case ExprKind::power: v = ipow(regs[a[0]], op.exponent); break;
      default: v = apply_unary(op.kind, regs[a[0]]); break;
    }
    regs[i] = v;
  }
  cache.valid = true;
  for (std::size_t k = 0; k < outputs_.size(); ++k) out[k] = regs[outputs_[k]];
}

double CompiledExpr::operator()(std::span<const double> values) const {
  double out = 0.0;
  eval_all(values, std::span<double>(&out, 1));
  return out;
}

}  // namespace gfqi
