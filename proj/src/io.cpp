#include "gfqi/io.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <vector>

#include "gfqi/invariants.hpp"

namespace gfqi {

namespace {

constexpr const char* kGfMagic = "gfqi-gf";
constexpr const char* kFrontMagic = "gfqi-front";
constexpr int kVersion = 1;

std::string num(double v) { return format_double(v); }

// Whitespace-separated tokens with their offsets, line by line.
class Reader {
 public:
  explicit Reader(std::string_view s) : s_(s) {}

  bool done() {
    skip_blank_lines();
    return pos_ >= s_.size();
  }

  // Next non-empty line split into tokens.
  std::vector<std::string_view> line() {
    skip_blank_lines();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of file", pos_);
    line_start_ = pos_;
    std::size_t end = s_.find('\n', pos_);
    if (end == std::string_view::npos) end = s_.size();
    std::string_view l = s_.substr(pos_, end - pos_);
    pos_ = end < s_.size() ? end + 1 : end;
    std::vector<std::string_view> tok;
    offsets_.clear();
    std::size_t i = 0;
    while (i < l.size()) {
      while (i < l.size() && (l[i] == ' ' || l[i] == '\t' || l[i] == '\r')) ++i;
      std::size_t j = i;
      while (j < l.size() && l[j] != ' ' && l[j] != '\t' && l[j] != '\r') ++j;
      if (j > i) {
        tok.push_back(l.substr(i, j - i));
        offsets_.push_back(line_start_ + i);
      }
      i = j;
    }
    raw_ = l;
    return tok;
  }

  // Rest of the line after the first token, verbatim.
  std::string_view rest_after_key() const {
    std::size_t i = raw_.find_first_of(" \t");
    if (i == std::string_view::npos) return {};
    return raw_.substr(i + 1);
  }
  std::size_t rest_offset() const {
    std::size_t i = raw_.find_first_of(" \t");
    return line_start_ + (i == std::string_view::npos ? raw_.size() : i + 1);
  }
  std::size_t offset(std::size_t tok) const { return tok < offsets_.size() ? offsets_[tok] : line_start_; }
  std::size_t line_offset() const { return line_start_; }

 private:
  void skip_blank_lines() {
    for (;;) {
      std::size_t i = pos_;
      while (i < s_.size() && (s_[i] == ' ' || s_[i] == '\t' || s_[i] == '\r')) ++i;
      if (i < s_.size() && s_[i] == '\n') {
        pos_ = i + 1;
        continue;
      }
      if (i < s_.size() && s_[i] == '#') {
        std::size_t e = s_.find('\n', i);
        pos_ = e == std::string_view::npos ? s_.size() : e + 1;
        continue;
      }
      return;
    }
  }
  std::string_view s_;
  std::size_t pos_ = 0, line_start_ = 0;
  std::string_view raw_;
  std::vector<std::size_t> offsets_;
};

double to_double(std::string_view t, std::size_t at) {
  std::string s(t);
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw ParseError("bad number '" + s + "'", at);
  return v;
}

int to_int(std::string_view t, std::size_t at) {
  int v = 0;
  auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size())
    throw ParseError("bad integer '" + std::string(t) + "'", at);
  return v;
}

std::vector<std::string_view> expect(Reader& r, std::string_view key, std::size_t n) {
  auto t = r.line();
  if (t.empty() || t[0] != key) throw ParseError("expected '" + std::string(key) + "'", r.line_offset());
  if (t.size() != n + 1)
    throw ParseError("'" + std::string(key) + "' takes " + std::to_string(n) + " value(s)", r.line_offset());
  return t;
}

void check_header(Reader& r, const char* magic) {
  auto t = r.line();
  if (t.size() != 2 || t[0] != magic) throw ParseError(std::string("missing '") + magic + "' header", 0);
  int v = to_int(t[1], r.offset(1));
  if (v != kVersion) throw ParseError("unsupported format version " + std::to_string(v), r.offset(1));
}

}  // namespace

std::string write_gf(const GFQI& F, std::optional<double> sigma) {
  std::ostringstream o;
  o << kGfMagic << ' ' << kVersion << '\n';
  std::string name = F.name.empty() ? "-" : F.name;
  std::replace(name.begin(), name.end(), '\n', ' ');
  o << "name " << name << '\n';
  o << "base_dim " << F.base_dim << '\n';
  o << "fiber_dim " << F.fiber_dim << '\n';
  o << "R_base " << num(F.R_base) << '\n';
  o << "R_fiber " << num(F.R_fiber) << '\n';
  o << "fiber_compact " << (F.fiber_compact ? 1 : 0) << '\n';
  if (sigma) o << "sigma " << num(*sigma) << '\n';
  o << "Q " << F.Q.dim() << '\n';
  for (int i = 0; i < F.Q.dim(); ++i) {
    for (int j = 0; j < F.Q.dim(); ++j) o << (j ? " " : "") << num(F.Q.matrix()(i, j));
    o << '\n';
  }
  o << "f " << to_prefix(F.f) << '\n';
  o << "end\n";
  return o.str();
}

GfFile read_gf(std::string_view text, const ValidationOptions& opt) {
  Reader r(text);
  check_header(r, kGfMagic);
  auto t = r.line();
  if (t.size() < 2 || t[0] != "name") throw ParseError("expected 'name'", r.line_offset());
  std::string name(r.rest_after_key());
  while (!name.empty() && (name.back() == ' ' || name.back() == '\t' || name.back() == '\r')) name.pop_back();
  if (name == "-") name.clear();
  t = expect(r, "base_dim", 1);
  int m = to_int(t[1], r.offset(1));
  if (m != 1 && m != 2) throw ParseError("base_dim must be 1 or 2", r.offset(1));
  t = expect(r, "fiber_dim", 1);
  int k = to_int(t[1], r.offset(1));
  if (k < 1) throw ParseError("fiber_dim must be positive", r.offset(1));
  t = expect(r, "R_base", 1);
  double Rb = to_double(t[1], r.offset(1));
  t = expect(r, "R_fiber", 1);
  double Rf = to_double(t[1], r.offset(1));
  t = expect(r, "fiber_compact", 1);
  int fc = to_int(t[1], r.offset(1));
  std::optional<double> sigma;
  t = r.line();
  if (!t.empty() && t[0] == "sigma") {
    if (t.size() != 2) throw ParseError("'sigma' takes 1 value", r.line_offset());
    sigma = to_double(t[1], r.offset(1));
    t = r.line();
  }
  if (t.size() != 2 || t[0] != "Q") throw ParseError("expected 'Q <dim>'", r.line_offset());
  int d = to_int(t[1], r.offset(1));
  if (d != k) throw ParseError("Q dimension must equal fiber_dim", r.offset(1));
  Eigen::MatrixXd A(d, d);
  for (int i = 0; i < d; ++i) {
    auto row = r.line();
    if (static_cast<int>(row.size()) != d) throw ParseError("Q row needs " + std::to_string(d) + " entries", r.line_offset());
    for (int j = 0; j < d; ++j) A(i, j) = to_double(row[j], r.offset(j));
  }
  t = r.line();
  if (t.empty() || t[0] != "f") throw ParseError("expected 'f <expression>'", r.line_offset());
  Expr f;
  std::size_t at = r.rest_offset();
  try {
    f = parse_prefix(r.rest_after_key());
  } catch (const ParseError& e) {
    std::string what = e.what();
    what = what.substr(0, what.rfind(" at offset"));
    throw ParseError("expression: " + what, at + e.offset);
  }
  t = r.line();
  if (t.size() != 1 || t[0] != "end") throw ParseError("expected 'end'", r.line_offset());
  if (!r.done()) throw ParseError("trailing content after 'end'", r.line_offset());
  auto vars = free_variables(f);
  auto allowed = fiber_vars(k);
  allowed.push_back("q");
  if (m == 2) allowed.push_back("t");
  for (const auto& v : vars)
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end())
      throw ParseError("expression uses unknown variable '" + v + "'", at);

  GfFile out;
  out.gf = make_gfqi(f, QuadraticForm(A), m, k, Rb, Rf, opt, fc != 0);
  out.gf.name = name;
  out.sigma = sigma;
  return out;
}

std::string write_front(const FrontDiagram& D) {
  std::ostringstream o;
  o << kFrontMagic << ' ' << kVersion << '\n';
  o << "window " << num(D.x_min) << ' ' << num(D.x_max) << '\n';
  o << "branches " << D.branches.size() << '\n';
  for (const auto& b : D.branches) {
    std::size_t kw = b.samples.empty() ? 0 : b.samples.front().w.size();
    o << "branch " << b.index << ' ' << b.left_cusp << ' ' << b.right_cusp << ' ' << b.samples.size() << ' '
      << kw << '\n';
    for (const auto& s : b.samples) {
      o << num(s.x) << ' ' << num(s.u) << ' ' << num(s.y);
      for (std::size_t i = 0; i < kw; ++i) o << ' ' << num(i < s.w.size() ? s.w[i] : 0.0);
      o << '\n';
    }
  }
  o << "cusps " << D.cusps.size() << '\n';
  for (const auto& c : D.cusps) {
    o << "cusp " << num(c.x) << ' ' << num(c.u) << ' ' << (c.side == CuspSide::left ? "left" : "right") << ' '
      << c.upper << ' ' << c.lower << ' ' << c.w.size();
    for (double v : c.w) o << ' ' << num(v);
    o << '\n';
  }
  o << "crossings " << D.crossings.size() << '\n';
  for (const auto& c : D.crossings)
    o << "crossing " << num(c.x) << ' ' << num(c.u) << ' ' << c.a << ' ' << c.b << ' ' << c.over << '\n';
  try {
    KnotInvariants k = classify(D);
    o << "invariants " << k.components << ' ' << k.crossings << ' ' << k.cusps << ' ' << k.writhe << ' ' << k.tb
      << ' ' << k.rotation << ' ' << (k.has_zigzag ? 1 : 0) << '\n';
  } catch (const StructureError&) {
    o << "invariants none\n";
  }
  o << "end\n";
  return o.str();
}

FrontDiagram read_front(std::string_view text) {
  Reader r(text);
  check_header(r, kFrontMagic);
  FrontDiagram D;
  auto t = expect(r, "window", 2);
  D.x_min = to_double(t[1], r.offset(1));
  D.x_max = to_double(t[2], r.offset(2));
  t = expect(r, "branches", 1);
  int nb = to_int(t[1], r.offset(1));
  auto check_ref = [&](int id, int n, std::size_t at) {
    if (id < -1 || id >= n) throw ParseError("reference " + std::to_string(id) + " out of range", at);
  };
  for (int i = 0; i < nb; ++i) {
    t = expect(r, "branch", 5);
    Branch b;
    b.index = to_int(t[1], r.offset(1));
    b.left_cusp = to_int(t[2], r.offset(2));
    b.right_cusp = to_int(t[3], r.offset(3));
    int ns = to_int(t[4], r.offset(4)), kw = to_int(t[5], r.offset(5));
    if (ns < 0 || kw < 0) throw ParseError("negative count", r.offset(4));
    for (int s = 0; s < ns; ++s) {
      auto v = r.line();
      if (static_cast<int>(v.size()) != 3 + kw) throw ParseError("sample needs " + std::to_string(3 + kw) + " values", r.line_offset());
      FrontSample p;
      p.x = to_double(v[0], r.offset(0));
      p.u = to_double(v[1], r.offset(1));
      p.y = to_double(v[2], r.offset(2));
      for (int j = 0; j < kw; ++j) p.w.push_back(to_double(v[3 + j], r.offset(3 + j)));
      b.samples.push_back(std::move(p));
    }
    D.branches.push_back(std::move(b));
  }
  t = expect(r, "cusps", 1);
  int nc = to_int(t[1], r.offset(1));
  for (int i = 0; i < nc; ++i) {
    t = r.line();
    if (t.size() < 7 || t[0] != "cusp") throw ParseError("expected 'cusp'", r.line_offset());
    Cusp c;
    c.x = to_double(t[1], r.offset(1));
    c.u = to_double(t[2], r.offset(2));
    if (t[3] == "left") c.side = CuspSide::left;
    else if (t[3] == "right") c.side = CuspSide::right;
    else throw ParseError("cusp side must be left or right", r.offset(3));
    c.upper = to_int(t[4], r.offset(4));
    c.lower = to_int(t[5], r.offset(5));
    check_ref(c.upper, nb, r.offset(4));
    check_ref(c.lower, nb, r.offset(5));
    int kw = to_int(t[6], r.offset(6));
    if (kw < 0 || static_cast<int>(t.size()) != 7 + kw) throw ParseError("cusp witness size mismatch", r.offset(6));
    for (int j = 0; j < kw; ++j) c.w.push_back(to_double(t[7 + j], r.offset(7 + j)));
    D.cusps.push_back(std::move(c));
  }
  for (const auto& b : D.branches) {
    check_ref(b.left_cusp, nc, r.line_offset());
    check_ref(b.right_cusp, nc, r.line_offset());
  }
  t = expect(r, "crossings", 1);
  int nx = to_int(t[1], r.offset(1));
  for (int i = 0; i < nx; ++i) {
    t = expect(r, "crossing", 5);
    Crossing c;
    c.x = to_double(t[1], r.offset(1));
    c.u = to_double(t[2], r.offset(2));
    c.a = to_int(t[3], r.offset(3));
    c.b = to_int(t[4], r.offset(4));
    c.over = to_int(t[5], r.offset(5));
    check_ref(c.a, nb, r.offset(3));
    check_ref(c.b, nb, r.offset(4));
    check_ref(c.over, nb, r.offset(5));
    D.crossings.push_back(c);
  }
  t = r.line();
  if (t.empty() || t[0] != "invariants") throw ParseError("expected 'invariants'", r.line_offset());
  if (!(t.size() == 2 && t[1] == "none") && t.size() != 8)
    throw ParseError("invariants block needs 7 values or 'none'", r.line_offset());
  for (std::size_t i = 1; i < t.size() && t.size() == 8; ++i) to_int(t[i], r.offset(i));
  t = r.line();
  if (t.size() != 1 || t[0] != "end") throw ParseError("expected 'end'", r.line_offset());
  if (!r.done()) throw ParseError("trailing content after 'end'", r.line_offset());
  return D;
}

}  // namespace gfqi
