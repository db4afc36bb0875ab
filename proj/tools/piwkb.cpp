#include <piwkb/piwkb.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

using namespace piwkb;

enum Exit { ok = 0, usage = 1, partial = 2, numerical = 3 };

struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Opens `path` for writing, or hands back stdout for "" and "-".
class Sink {
public:
  explicit Sink(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_.open(path);
    if (!file_) throw usage_error("cannot open " + path + " for writing");
  }
  std::ostream& get() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
  std::ofstream file_;
};

CubicPotential read_potential(const std::string& a, const std::string& b) {
  try {
    return {parse_complex(a), parse_complex(b)};
  } catch (const error& e) {
    throw usage_error(e.what());
  }
}

std::string sig4(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

std::string sig4(cplx z) {
  if (z.imag() == 0) return sig4(z.real());
  return sig4(z.real()) + (z.imag() < 0 ? " - " : " + ") + sig4(std::abs(z.imag())) + "i";
}

struct TraceFlags {
  double rtol = 1e-10;
  double r_max_factor = 10.0;
  double launch = 1e-4;
  double trap = 1e-4;

  void attach(CLI::App* c) {
    c->add_option("--trace-rtol", rtol, "relative tolerance of the line tracer")->check(CLI::PositiveNumber);
    c->add_option("--rmax-factor", r_max_factor, "exit radius in units of 1 + max|turning point|")
        ->check(CLI::PositiveNumber);
    c->add_option("--launch", launch, "launch offset, relative to turning point separation")
        ->check(CLI::PositiveNumber);
    c->add_option("--trap", trap, "capture radius, relative to turning point separation")->check(CLI::PositiveNumber);
  }
  TraceOptions options(bool anti = false) const {
    TraceOptions o;
    o.rtol = rtol;
    o.r_max_factor = r_max_factor;
    o.launch = launch;
    o.trap = trap;
    o.anti_stokes = anti;
    return o;
  }
};

// classify ---------------------------------------------------------------

struct ClassifyArgs {
  std::string a = "0", b = "0", json_out, svg_out;
  bool compact = false;
  TraceFlags trace;
};

int run_classify(const ClassifyArgs& x) {
  auto p = read_potential(x.a, x.b);
  Sink out(x.json_out);
  try {
    auto g = classify(p, x.trace.options());
    out.get() << to_json(g).dump(2) << '\n';
    if (!x.svg_out.empty()) {
      Sink svg(x.svg_out);
      write_svg(svg.get(), g.trace, {600, 0, x.compact});
    }
    return ok;
  } catch (const ambiguity_error& e) {
    json j{{"class_code", nullptr},
           {"ambiguous", true},
           {"candidates", {to_string(e.nearest), to_string(e.second)}},
           {"reason", e.what()}};
    out.get() << j.dump(2) << '\n';
    return partial;
  }
}

// trace ------------------------------------------------------------------

struct TraceArgs {
  std::string a = "0", b = "0", out_path, svg_out;
  bool anti = false, compact = false;
  TraceFlags trace;
};

int run_trace(const TraceArgs& x) {
  auto p = read_potential(x.a, x.b);
  auto t = trace_stokes_lines(p, x.trace.options(x.anti));
  json lines = json::array();
  for (auto& l : t.lines) {
    json pts = json::array();
    for (auto z : l.points) pts.push_back(to_json(z));
    lines.push_back({{"source", l.source},
                     {"end", l.end.kind == EndKind::ray ? "ray" : "turning_point"},
                     {"end_index", l.end.index},
                     {"points", pts}});
  }
  json tp = json::array();
  for (auto& v : t.tps.points) tp.push_back({{"value", to_json(v.value)}, {"multiplicity", v.multiplicity}});
  Sink out(x.out_path);
  out.get() << json{{"anti_stokes", t.anti_stokes}, {"turning_points", tp}, {"lines", lines}}.dump(2) << '\n';
  if (!x.svg_out.empty()) {
    Sink svg(x.svg_out);
    write_svg(svg.get(), t, {600, 0, x.compact});
  }
  return ok;
}

// poles ------------------------------------------------------------------

struct PolesArgs {
  int n_max = 2, m_max = 2;
  double tol = 1e-10;
  double step = 0.25;
  bool no_rho = false;
  std::string csv_out;
};

int run_poles(const PolesArgs& x) {
  BsbOptions o;
  o.tol = x.tol;
  o.continuation_step = x.step;
  o.compute_rho = !x.no_rho;
  auto cells = solve_lattice(x.n_max, x.m_max, o);
  Sink out(x.csv_out);
  write_lattice_csv(out.get(), cells);
  double min_arg = std::numeric_limits<double>::infinity();
  int failed = 0;
  for (auto& c : cells) {
    if (c.solution)
      min_arg = std::min(min_arg, std::abs(std::arg(c.solution->a)));
    else {
      ++failed;
      std::cerr << "cell (" << c.index.n << "," << c.index.m << ") failed: " << c.failure << '\n';
    }
  }
  std::cerr << "solved " << cells.size() - failed << "/" << cells.size() << " cells; min |arg a| = " << sig4(min_arg)
            << " (4pi/5 = " << sig4(4 * pi / 5) << ")\n";
  return failed ? partial : ok;
}

// verify -----------------------------------------------------------------

struct VerifyArgs {
  std::string a = "0", b = "0", out_path;
  double radius = 0, rtol = 1e-12, threshold = 1e-6;
  bool no_extended = false;
};

int run_verify(const VerifyArgs& x) {
  auto p = read_potential(x.a, x.b);
  MonodromyOptions o;
  o.rtol = x.rtol;
  o.atol = 1e-2 * x.rtol;
  o.extended = !x.no_extended;
  o.admissibility_target = x.threshold;
  auto s = stokes_multipliers(p, x.radius, x.rtol, o);
  Sink out(x.out_path);
  out.get() << to_json(s, x.threshold).dump(2) << '\n';
  return s.max_admissibility() <= x.threshold ? ok : partial;
}

// table2 -----------------------------------------------------------------

int run_table2(double tol) {
  auto poles = real_poles(2, true, tol);
  auto mu = [](const CubicPotential& p) { return (p.a * p.a * p.a / (p.b * p.b)).real(); };
  struct Row {
    const char* name;
    double wkb;
    double numeric; // NaN when no reference value exists
  };
  const double none = std::numeric_limits<double>::quiet_NaN();
  const Row rows[] = {
      {"a1", poles[0].a.real(), -2.38}, {"b1", poles[0].b.real(), -0.062}, {"mu1", mu(poles[0]), -3510},
      {"a2", poles[1].a.real(), -5.66}, {"b2", poles[1].b.real(), none},   {"mu2", mu(poles[1]), none},
  };
  std::printf("%-5s %12s %12s %9s\n", "", "WKB", "numeric", "error %");
  for (auto& r : rows) {
    if (std::isnan(r.numeric))
      std::printf("%-5s %12s %12s %9s\n", r.name, sig4(r.wkb).c_str(), "unknown", "unknown");
    else
      std::printf("%-5s %12s %12s %9s\n", r.name, sig4(r.wkb).c_str(), sig4(r.numeric).c_str(),
                  sig4(100 * std::abs((r.wkb - r.numeric) / r.numeric)).c_str());
  }
  return ok;
}

// constants --------------------------------------------------------------

int run_constants(double tol, bool as_json) {
  auto c = real_orbit_constants(tol);
  if (as_json) {
    std::cout << json{{"mu_star", c.mu_star}, {"a_star", c.a_star}, {"b_star", c.b_star}}.dump(2) << '\n';
  } else {
    std::cout << "mu* = " << sig4(c.mu_star) << "\na*  = " << sig4(c.a_star) << "\nb*  = " << sig4(c.b_star) << '\n';
  }
  return ok;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Poles of the tritronquee solution of Painleve I by complex WKB"};
  app.set_config("--config", "", "key=value / TOML file; flags given on the command line win");
  app.require_subcommand(1);

  ClassifyArgs ca;
  auto* c = app.add_subcommand("classify", "classify the Stokes complex of V = 4l^3 - 2al - 28b");
  c->add_option("--a", ca.a, "a, e.g. -2.34 or 1+2i");
  c->add_option("--b", ca.b, "b");
  c->add_option("--json", ca.json_out, "graph JSON output (default stdout)");
  c->add_option("--svg", ca.svg_out, "SVG picture of the traced lines");
  c->add_flag("--compact", ca.compact, "draw in the unit disc");
  ca.trace.attach(c);

  TraceArgs ta;
  auto* t = app.add_subcommand("trace", "raw Stokes (or anti-Stokes) polylines");
  t->add_option("--a", ta.a, "a");
  t->add_option("--b", ta.b, "b");
  t->add_option("-o,--output", ta.out_path, "JSON output (default stdout)");
  t->add_option("--svg", ta.svg_out, "SVG picture");
  t->add_flag("--anti-stokes", ta.anti, "trace anti-Stokes lines instead");
  t->add_flag("--compact", ta.compact, "draw in the unit disc");
  ta.trace.attach(t);

  PolesArgs pa;
  auto* p = app.add_subcommand("poles", "solve the quantization lattice and write CSV");
  p->add_option("--nmax", pa.n_max, "largest n")->check(CLI::Range(1, 50));
  p->add_option("--mmax", pa.m_max, "largest m")->check(CLI::Range(1, 50));
  p->add_option("--tol", pa.tol, "Newton tolerance")->check(CLI::PositiveNumber);
  p->add_option("--step", pa.step, "continuation step in the indices")->check(CLI::Range(1e-3, 1.0));
  p->add_flag("--no-rho", pa.no_rho, "skip the WKB error estimate");
  p->add_option("--csv", pa.csv_out, "CSV output (default stdout)");

  VerifyArgs va;
  auto* v = app.add_subcommand("verify", "Stokes multipliers by direct integration");
  v->add_option("--a", va.a, "a");
  v->add_option("--b", va.b, "b");
  v->add_option("--radius", va.radius, "start radius of the recessive solutions (0 = automatic)")
      ->check(CLI::NonNegativeNumber);
  v->add_option("--rtol", va.rtol, "integrator tolerance")->check(CLI::PositiveNumber);
  v->add_option("--threshold", va.threshold, "admissibility / tritronquee threshold")->check(CLI::PositiveNumber);
  v->add_flag("--no-extended", va.no_extended, "never escalate to multiprecision");
  v->add_option("-o,--output", va.out_path, "JSON output (default stdout)");

  double t2_tol = 1e-12;
  auto* t2 = app.add_subcommand("table2", "WKB real poles against numerical values");
  t2->add_option("--tol", t2_tol, "Newton tolerance")->check(CLI::PositiveNumber);

  double k_tol = 1e-14;
  bool k_json = false;
  auto* k = app.add_subcommand("constants", "print mu*, a*, b* of the real orbit");
  k->add_option("--tol", k_tol, "root finder tolerance")->check(CLI::PositiveNumber);
  k->add_flag("--json", k_json, "JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? ok : usage;
  }

  try {
    if (*c) return run_classify(ca);
    if (*t) return run_trace(ta);
    if (*p) return run_poles(pa);
    if (*v) return run_verify(va);
    if (*t2) return run_table2(t2_tol);
    if (*k) return run_constants(k_tol, k_json);
  } catch (const usage_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return usage;
  } catch (const ambiguity_error& e) {
    std::cerr << "ambiguous: " << e.what() << '\n';
    return partial;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return numerical;
  }
  return usage;
}
