#include "stokes/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <random>

#include "stokes/scenario_io.hpp"

namespace stokes {

namespace {

std::string num(double v, int digits = 12) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

struct Common {
  std::string scenario;
  bool json = false;
  std::optional<double> tolerance;
  std::optional<int> points;
  std::optional<int> cells;
  int threads = 0;
};

void add_quadrature_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--points", c.points, "Gauss points per axis (q)")->check(CLI::PositiveNumber);
  cmd->add_option("--cells", c.cells, "composite cells per axis (m)")->check(CLI::PositiveNumber);
  cmd->add_option("--threads", c.threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
}

Scenario prepare(const Common& c) {
  Scenario s = resolve_scenario(c.scenario);
  QuadratureSpec q = s.quadrature();
  if (c.points) q.points = *c.points;
  if (c.cells) q.cells = *c.cells;
  q.threads = c.threads;
  s = s.with_quadrature(q);
  if (c.tolerance) s = s.with_tolerance(*c.tolerance);
  return s;
}

std::string label(const Scenario& s) { return s.info().name.empty() ? std::string("(unnamed)") : s.info().name; }

int cmd_verify(const Common& c, std::ostream& out, std::ostream& err) {
  const Scenario s = prepare(c);
  const VerificationReport r = verify(s);
  if (c.json) {
    out << report_to_json(r).dump(2) << '\n';
  } else {
    out << "scenario   " << label(s) << '\n';
    out << "quadrature q=" << r.quadrature.points << " m=" << r.quadrature.cells << "  tolerance " << num(r.tolerance)
        << '\n';
    if (!r.error) {
      for (const auto& p : r.pieces)
        out << "piece " << p.piece << "    volume " << num(p.volume, 17) << "  boundary " << num(p.boundary, 17) << '\n';
      for (const auto& f : r.faces)
        out << "  piece " << f.piece << " face " << to_string(f.face) << "  " << num(f.value, 17) << '\n';
      if (r.exact) out << "exact      " << num(*r.exact, 17) << '\n';
      out << "lhs=" << fixed6(r.lhs) << " rhs=" << fixed6(r.rhs) << " abs=" << num(r.absolute_residual, 3)
          << " rel=" << num(r.relative_residual, 3) << ' ' << (r.pass ? "PASS" : "FAIL") << '\n';
    }
  }
  for (const auto& w : r.warnings) err << "warning: " << w << '\n';
  if (r.error) {
    err << "error: " << *r.error << '\n';
    return kExitInputError;
  }
  return r.pass ? kExitPass : kExitFail;
}

int cmd_convergence(const Common& c, const std::vector<int>& cells, std::ostream& out) {
  const Scenario s = prepare(c);
  std::vector<QuadratureSpec> levels;
  for (int m : cells) {
    QuadratureSpec q = s.quadrature();
    q.cells = m;
    levels.push_back(q);
  }
  const ConvergenceTable t = convergence_study(s, levels);
  if (c.json) {
    out << convergence_to_json(t).dump(2) << '\n';
    return kExitPass;
  }
  out << "scenario " << label(s) << "  tracking " << (t.tracks_exact ? "error vs exact value" : "relative residual")
      << '\n';
  out << "    q     m                      lhs                      rhs     rel.resid       error   order\n";
  for (const auto& l : t.levels) {
    char line[256];
    std::snprintf(line, sizeof line, "%5d %5d %24.17g %24.17g %13.3e %11.3e %7s\n", l.quadrature.points,
                  l.quadrature.cells, l.lhs, l.rhs, l.relative_residual, l.error,
                  l.order ? num(*l.order, 3).c_str() : "-");
    out << line;
  }
  return kExitPass;
}

std::vector<double> random_cube_point(std::mt19937_64& rng, int k, double margin) {
  std::uniform_real_distribution<double> u(margin, 1.0 - margin);
  std::vector<double> t(static_cast<std::size_t>(k));
  for (auto& v : t) v = u(rng);
  return t;
}

int cmd_ddzero(const Common& c, int samples, std::uint64_t seed, std::ostream& out) {
  const Scenario s = prepare(c);
  const DdZeroProbe probe(s.form());
  std::mt19937_64 rng(seed);
  double worst_ratio = 0.0;
  double worst_violation = 0.0;
  const auto& pieces = s.region().pieces();
  for (int i = 0; i < samples; ++i) {
    const NormalSet& set = pieces[static_cast<std::size_t>(i) % pieces.size()];
    const auto t = random_cube_point(rng, s.k(), 0.0);
    const Vec y = s.chart()(as_span(cube_param(set, t)));
    const DdZeroSample d = probe(as_span(y));
    worst_violation = std::max(worst_violation, d.violation);
    worst_ratio = std::max(worst_ratio, d.violation / (1.0 + d.scale));
  }
  const bool pass = worst_ratio <= 1e-9;
  if (c.json) {
    nlohmann::json doc{{"scenario", s.info().name},
                       {"samples", samples},
                       {"terms", probe.term_count()},
                       {"max_violation", worst_violation},
                       {"max_scaled_violation", worst_ratio},
                       {"pass", pass}};
    out << doc.dump(2) << '\n';
  } else {
    out << "scenario " << label(s) << ": d(d omega) has " << probe.term_count() << " term(s) after folding\n";
    out << "max |coefficient| " << num(worst_violation, 3) << ", scaled " << num(worst_ratio, 3) << " over " << samples
        << " points " << (pass ? "PASS" : "FAIL") << '\n';
  }
  return pass ? kExitPass : kExitFail;
}

std::vector<std::vector<int>> index_sets(int n, int size) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  auto rec = [&](auto&& self, int next) -> void {
    if (static_cast<int>(cur.size()) == size) {
      out.push_back(cur);
      return;
    }
    for (int i = next; i <= n; ++i) {
      cur.push_back(i);
      self(self, i + 1);
      cur.pop_back();
    }
  };
  rec(rec, 1);
  return out;
}

int cmd_detb(const Common& c, double h, int samples, std::uint64_t seed, std::ostream& out) {
  const Scenario s = prepare(c);
  std::vector<MultiIndex> indices;
  for (const auto& term : s.form().terms()) indices.push_back(term.index);
  if (indices.empty())
    for (auto& idx : index_sets(s.n(), s.k() - 1)) indices.emplace_back(idx, s.n());
  std::mt19937_64 rng(seed);
  double coarse = 0.0;
  double fine = 0.0;
  double worst = 0.0;
  const auto& pieces = s.region().pieces();
  for (int i = 0; i < samples; ++i) {
    const NormalSet& set = pieces[static_cast<std::size_t>(i) % pieces.size()];
    const auto t = random_cube_point(rng, s.k(), 0.05);
    for (const auto& idx : indices) {
      const double a = det_B_residual(s.chart(), set, idx, t, h);
      const double b = det_B_residual(s.chart(), set, idx, t, h / 2);
      coarse += a;
      fine += b;
      worst = std::max(worst, a);
    }
  }
  std::optional<double> order;
  if (coarse > 0.0 && fine > 0.0) order = std::log2(coarse / fine);
  // Below ~1e-9 the differences are rounding noise and no order is visible.
  const bool pass = worst <= 1e-9 || order.value_or(0.0) >= 1.8;
  if (c.json) {
    nlohmann::json doc{{"scenario", s.info().name}, {"h", h},          {"samples", samples},
                       {"max_residual", worst},     {"mean_residual_h", coarse / samples},
                       {"mean_residual_h_half", fine / samples},
                       {"order", order ? nlohmann::json(*order) : nlohmann::json(nullptr)},
                       {"pass", pass}};
    out << doc.dump(2) << '\n';
  } else {
    out << "scenario " << label(s) << ": det B residual at h=" << num(h, 3) << " max " << num(worst, 3)
        << ", order from h to h/2 " << (order ? num(*order, 3) : std::string("-")) << ' ' << (pass ? "PASS" : "FAIL")
        << '\n';
  }
  return pass ? kExitPass : kExitFail;
}

int cmd_ibp(const Common& c, const std::string& f, const std::string& g, std::vector<double> lower,
            std::vector<double> upper, int axis, std::ostream& out) {
  if (lower.size() != upper.size()) throw std::invalid_argument("--lower and --upper need the same number of values");
  QuadratureSpec q;
  if (c.points) q.points = *c.points;
  if (c.cells) q.cells = *c.cells;
  q.threads = c.threads;
  const double tolerance = c.tolerance.value_or(kDefaultTolerance);
  const IbpResult r = ibp_residual(parse(f), parse(g), lower, upper, axis - 1, q);
  const bool pass = r.residual <= tolerance;
  if (c.json) {
    nlohmann::json doc{{"f", f},
                       {"g", g},
                       {"axis", axis},
                       {"quadrature", {{"points", q.points}, {"cells", q.cells}}},
                       {"derivative_term", r.derivative_term},
                       {"boundary_term", r.boundary_term},
                       {"parts_term", r.parts_term},
                       {"residual", r.residual},
                       {"tolerance", tolerance},
                       {"pass", pass}};
    out << doc.dump(2) << '\n';
  } else {
    out << "int f'g = " << num(r.derivative_term, 17) << "\n[fg]     = " << num(r.boundary_term, 17)
        << "\nint fg' = " << num(r.parts_term, 17) << "\nresidual " << num(r.residual, 3) << ' '
        << (pass ? "PASS" : "FAIL") << '\n';
  }
  return pass ? kExitPass : kExitFail;
}

int cmd_reparam(const Common& c, const std::vector<std::string>& rho_text, std::ostream& out) {
  const Scenario s = prepare(c);
  std::vector<Expression> components;
  if (rho_text.empty()) {
    for (const auto& name : indexed_names('x', s.k())) components.push_back(pow(Expression::variable(name), 2.0));
  } else {
    for (const auto& t : rho_text) components.push_back(parse(t));
  }
  const ChartMap rho(s.k(), components);
  const double residual = reparam_residual(s, rho);
  const bool pass = residual <= s.tolerance();
  if (c.json) {
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& e : components) comps.push_back(to_string(e));
    nlohmann::json doc{{"scenario", s.info().name},
                       {"rho", comps},
                       {"residual", residual},
                       {"tolerance", s.tolerance()},
                       {"pass", pass}};
    out << doc.dump(2) << '\n';
  } else {
    out << "scenario " << label(s) << ": reparametrization residual " << num(residual, 3) << ' '
        << (pass ? "PASS" : "FAIL") << '\n';
  }
  return pass ? kExitPass : kExitFail;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical checks of the Stokes identity for differential forms on regular sets"};
  app.name("stokes");
  app.require_subcommand(1);

  Common common;
  auto scenario_commands = [&](CLI::App* cmd) {
    cmd->add_option("scenario", common.scenario, "scenario file or builtin name")->required();
    cmd->add_flag("--json", common.json, "print a JSON document");
    cmd->add_option("--tolerance", common.tolerance, "relative tolerance");
    add_quadrature_flags(cmd, common);
  };

  auto* verify_cmd = app.add_subcommand("verify", "compute both sides of the identity");
  scenario_commands(verify_cmd);

  std::vector<int> levels{2, 4, 8};
  auto* conv_cmd = app.add_subcommand("convergence", "refine the composite cells and estimate the order");
  scenario_commands(conv_cmd);
  conv_cmd->add_option("--levels", levels, "cells per axis for each level, e.g. 2,4,8")->delimiter(',');

  int samples = 100;
  std::uint64_t seed = 1;
  auto* dd_cmd = app.add_subcommand("ddzero", "check d(d omega) = 0 at random points");
  scenario_commands(dd_cmd);
  dd_cmd->add_option("--samples", samples, "number of random points")->check(CLI::PositiveNumber);
  dd_cmd->add_option("--seed", seed, "random seed");

  double h = 1e-3;
  int detb_samples = 20;
  auto* detb_cmd = app.add_subcommand("detb", "finite-difference det B residual and its order in h");
  scenario_commands(detb_cmd);
  detb_cmd->set_help_flag("--help", "Print this help message and exit");
  detb_cmd->add_option("--h", h, "difference step")->check(CLI::Range(1e-12, 0.04));
  detb_cmd->add_option("--samples", detb_samples, "number of random points")->check(CLI::PositiveNumber);
  detb_cmd->add_option("--seed", seed, "random seed");

  std::string f_text;
  std::string g_text;
  std::vector<double> lower{0.0};
  std::vector<double> upper{1.0};
  int axis = 1;
  auto* ibp_cmd = app.add_subcommand("ibp", "integration-by-parts residual on an interval or box");
  ibp_cmd->add_option("--f", f_text, "expression f in x1..xk")->required();
  ibp_cmd->add_option("--g", g_text, "expression g in x1..xk")->required();
  ibp_cmd->add_option("--lower", lower, "lower box corner, e.g. 0,0")->delimiter(',');
  ibp_cmd->add_option("--upper", upper, "upper box corner, e.g. 1,1")->delimiter(',');
  ibp_cmd->add_option("--axis", axis, "axis of differentiation (1-based)")->check(CLI::PositiveNumber);
  ibp_cmd->add_flag("--json", common.json, "print a JSON document");
  ibp_cmd->add_option("--tolerance", common.tolerance, "absolute tolerance");
  add_quadrature_flags(ibp_cmd, common);

  std::vector<std::string> rho_text;
  auto* reparam_cmd = app.add_subcommand("reparam", "compare both sides under a reparametrization of the cube");
  scenario_commands(reparam_cmd);
  reparam_cmd->add_option("--rho", rho_text, "components of rho in x1..xk (default x_i^2)");

  auto* builtin_cmd = app.add_subcommand("builtin", "list or print shipped scenarios");
  builtin_cmd->require_subcommand(1);
  builtin_cmd->add_subcommand("list", "print the builtin names");
  std::string show_name;
  auto* show_cmd = builtin_cmd->add_subcommand("show", "print a builtin scenario file");
  show_cmd->add_option("name", show_name, "builtin name")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitPass : kExitInputError;
  }

  try {
    if (verify_cmd->parsed()) return cmd_verify(common, out, err);
    if (conv_cmd->parsed()) return cmd_convergence(common, levels, out);
    if (dd_cmd->parsed()) return cmd_ddzero(common, samples, seed, out);
    if (detb_cmd->parsed()) return cmd_detb(common, h, detb_samples, seed, out);
    if (ibp_cmd->parsed()) return cmd_ibp(common, f_text, g_text, lower, upper, axis, out);
    if (reparam_cmd->parsed()) return cmd_reparam(common, rho_text, out);
    if (builtin_cmd->parsed()) {
      if (show_cmd->parsed()) {
        for (const auto& b : builtin_scenarios()) {
          if (b.name == show_name) {
            out << b.json;
            if (!b.json.ends_with('\n')) out << '\n';
            return kExitPass;
          }
        }
        err << "error: unknown builtin scenario '" << show_name << "'\n";
        return kExitInputError;
      }
      for (const auto& b : builtin_scenarios()) out << b.name << '\n';
      return kExitPass;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace stokes
