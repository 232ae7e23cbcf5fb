#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gfqi/catalog.hpp"
#include "gfqi/constructions.hpp"
#include "gfqi/invariants.hpp"
#include "gfqi/io.hpp"
#include "gfqi/svg.hpp"

using namespace gfqi;

namespace {

// exit code 2
struct UsageError : Error {
  using Error::Error;
};

std::string read_text(const std::string& path) {
  if (path == "-") {
    std::stringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + path + "'");
  out << text;
}

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool is_front_text(const std::string& text) { return text.rfind("gfqi-front", 0) == 0; }

struct Common {
  int grid = 400;
  int t_grid = 64;
  std::vector<std::string> tol;
  std::string svg;
  std::uint64_t seed = 1;

  TracerConfig config() const {
    TracerConfig cfg;
    cfg.grid = grid;
    for (const auto& kv : tol) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw UsageError("--tol expects name=value, got '" + kv + "'");
      double v;
      try {
        std::size_t used = 0;
        v = std::stod(kv.substr(eq + 1), &used);
        if (used != kv.size() - eq - 1) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw UsageError("bad value in --tol " + kv);
      }
      try {
        cfg.set(kv.substr(0, eq), v);
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
    }
    return cfg;
  }

  ValidationOptions validation() const {
    ValidationOptions v;
    v.seed = seed;
    return v;
  }

  GfFile load_gf(const std::string& path) const { return read_gf(read_text(path), validation()); }
};

GFQI load_base1(const Common& c, const std::string& path) {
  GfFile f = c.load_gf(path);
  if (f.gf.base_dim != 1) throw UsageError("'" + path + "' is a cobordism file; expected base_dim 1");
  return f.gf;
}

CobordismGF load_cobordism(const Common& c, const std::string& path) {
  GfFile f = c.load_gf(path);
  if (f.gf.base_dim != 2) throw UsageError("'" + path + "' has base_dim 1; expected a cobordism file");
  return make_cobordism(f.gf, f.sigma.value_or(1.0));
}

void emit_front(const Common& c, const FrontDiagram& D, const std::string& out) {
  write_text(out, write_front(D));
  if (!c.svg.empty()) write_text(c.svg, render_svg(D));
}

void add_common(CLI::App* sub, Common& c, bool t_grid = false) {
  sub->add_option("--grid", c.grid, "base columns for tracing")->check(CLI::PositiveNumber);
  if (t_grid) sub->add_option("--t-grid", c.t_grid, "t samples")->check(CLI::PositiveNumber);
  sub->add_option("--tol", c.tol, "tolerance override name=value")->take_all();
  sub->add_option("--seed", c.seed, "seed for validation sampling");
}

std::string events_text(const std::vector<MomentEvent>& ev) {
  std::string s = "events " + std::to_string(ev.size()) + "\n";
  for (const auto& e : ev) {
    s += "event " + g17(e.q) + " " + g17(e.t);
    for (int i = 0; i < e.w.size(); ++i) s += " " + g17(e.w[i]);
    s += e.resolved ? " resolved " : " unresolved ";
    s += g17(e.residual) + "\n";
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generating families quadratic at infinity: fronts, constructions, cobordisms"};
  app.require_subcommand(1);
  Common c;
  std::string in, in2, out, op;
  double t0 = 0.0, height = 2.0, eps = 0.15, width = 1.5;
  bool have_t = false, no_verify = false;
  int q_grid = 64;
  SvgOptions svgopt;

  auto* trace = app.add_subcommand("trace", "trace the front of a gf file");
  trace->add_option("input", in, "gf file, - for stdin")->required();
  trace->add_option("-o,--output", out, "front file (default stdout)");
  trace->add_option("--svg", c.svg, "also render to this SVG file");
  add_common(trace, c);

  auto* construct = app.add_subcommand("construct", "build a gf from others");
  construct->add_option("op", op, "mirror, consum, smilesum, spin, thm29path, lh, prop34")
      ->required()
      ->check(CLI::IsMember({"mirror", "consum", "smilesum", "spin", "thm29path", "lh", "prop34"}));
  construct->add_option("inputs", in, "first gf file");
  construct->add_option("second", in2, "second gf file (consum, smilesum)");
  construct->add_option("-o,--output", out, "gf file (default stdout)");
  auto* topt = construct->add_option("--t", t0, "thm29path: evaluate at this t instead of writing the family");
  construct->add_option("--height", height, "lh, prop34: string spacing H");
  construct->add_option("--eps", eps, "prop34: final spacing");
  construct->add_option("--width", width, "lh: half-width of the plateau");
  construct->add_flag("--no-verify", no_verify, "prop34: skip the moment check");
  add_common(construct, c, true);

  auto* slice = app.add_subcommand("slice", "restrict a cobordism gf to one t");
  slice->add_option("input", in, "cobordism gf file")->required();
  slice->add_option("t0", t0, "slice parameter in [0, 1]")->required();
  slice->add_option("-o,--output", out, "gf file (default stdout)");
  add_common(slice, c);

  auto* detect = app.add_subcommand("detect-moments", "find the moments of a cobordism gf");
  detect->add_option("input", in, "cobordism gf file")->required();
  detect->add_option("-o,--output", out, "event list (default stdout)");
  detect->add_option("--q-grid", q_grid, "q cells")->check(CLI::PositiveNumber);
  add_common(detect, c, true);

  auto* inv = app.add_subcommand("invariants", "classify a gf file or a front file");
  inv->add_option("input", in, "gf or front file")->required();
  add_common(inv, c);

  auto* cat = app.add_subcommand("catalog", "list the catalog, or write one entry");
  cat->add_option("name", in, "entry name");
  cat->add_option("-o,--output", out, "gf or front file (default stdout)");

  auto* render = app.add_subcommand("render", "render a front file as SVG");
  render->add_option("input", in, "front file")->required();
  render->add_option("-o,--output", out, "SVG file (default stdout)");
  render->add_option("--width", svgopt.width)->check(CLI::PositiveNumber);
  render->add_option("--height", svgopt.height)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int r = app.exit(e);
    return r == 0 ? 0 : 2;
  }
  have_t = topt->count() > 0;

  try {
    if (*trace) {
      emit_front(c, trace_front(load_base1(c, in), c.config()), out);
    } else if (*construct) {
      const TracerConfig cfg = c.config();
      auto need = [&](const std::string& p, const char* what) {
        if (p.empty()) throw UsageError(op + " needs " + what);
      };
      if (op == "mirror") {
        need(in, "an input gf");
        write_text(out, write_gf(mirror_gf(load_base1(c, in))));
      } else if (op == "consum" || op == "smilesum") {
        need(in, "two input gfs");
        need(in2, "two input gfs");
        GFQI a = load_base1(c, in), b = load_base1(c, in2);
        write_text(out, write_gf(op == "consum" ? connect_sum(a, b) : smile_sum(a, b)));
      } else if (op == "spin") {
        need(in, "an input gf");
        CobordismGF S = spin_gf(load_base1(c, in));
        write_text(out, write_gf(S.G, S.sigma));
      } else if (op == "thm29path") {
        need(in, "an input gf");
        GFQI F = load_base1(c, in);
        if (have_t) {
          if (!(t0 >= 0.0 && t0 <= 1.0)) throw UsageError("--t must lie in [0, 1]");
          write_text(out, write_gf(theorem29_path(F, t0)));
        } else {
          write_text(out, write_gf(theorem29_family(F).family));
        }
      } else if (op == "lh") {
        write_text(out, write_gf(lh_family(height, width)));
      } else {
        need(in, "an input gf");
        GfqiPath P = prop34_homotopy(load_base1(c, in), height, eps, !no_verify, cfg);
        write_text(out, write_gf(P.family));
      }
    } else if (*slice) {
      if (!(t0 >= 0.0 && t0 <= 1.0)) throw UsageError("slice parameter must lie in [0, 1]");
      write_text(out, write_gf(slice_gf(load_cobordism(c, in), t0)));
    } else if (*detect) {
      MomentOptions mo;
      mo.q_grid = q_grid;
      mo.t_grid = c.t_grid;
      write_text(out, events_text(detect_cobordism_moments(load_cobordism(c, in), c.config(), mo)));
    } else if (*inv) {
      std::string text = read_text(in);
      FrontDiagram D;
      if (is_front_text(text)) {
        D = read_front(text);
      } else {
        GfFile f = read_gf(text, c.validation());
        if (f.gf.base_dim != 1) throw UsageError("invariants needs a base_dim 1 gf or a front file");
        D = trace_front(f.gf, c.config());
      }
      write_text("", to_string(classify(D)) + "\n");
    } else if (*cat) {
      if (in.empty()) {
        std::string s;
        for (const auto& e : catalog())
          s += e.name + (e.kind == CatalogKind::gfqi ? " gfqi " : " front ") + to_string(e.expected) + "\n";
        write_text("", s);
      } else {
        const CatalogEntry* e;
        try {
          e = &catalog_entry(in);
        } catch (const Error& err) {
          throw UsageError(err.what());
        }
        write_text(out, e->gf ? write_gf(*e->gf) : write_front(*e->front));
      }
    } else if (*render) {
      write_text(out, render_svg(read_front(read_text(in)), svgopt));
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "gfqi: %s\n", e.what());
    return 2;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "gfqi: parse error: %s\n", e.what());
    return 2;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "gfqi: invalid gf: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "gfqi: %s\n", e.what());
    return 1;
  }
  return 0;
}
