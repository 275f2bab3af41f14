#include "stokes/scenario_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace stokes {

namespace detail {
extern const BuiltinScenario kBuiltins[];
extern const std::size_t kBuiltinCount;
}  // namespace detail

using nlohmann::json;

SchemaError::SchemaError(std::string path, const std::string& message)
    : ScenarioError(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}

namespace {

const json& require(const json& obj, const std::string& key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path.empty() ? key : path + "." + key, "missing required field");
  return *it;
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
}
void require_array(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array");
}

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (auto a : allowed) ok = ok || it.key() == a;
    if (!ok) throw SchemaError(join(path, it.key()), "unknown field");
  }
}

int get_int(const json& j, const std::string& path, int min_value) {
  if (!j.is_number_integer()) throw SchemaError(path, "expected an integer");
  const auto v = j.get<long long>();
  if (v < min_value || v > 1'000'000) throw SchemaError(path, "must be an integer >= " + std::to_string(min_value));
  return static_cast<int>(v);
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  return j.get<double>();
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError(path, "expected a string");
  return j.get<std::string>();
}

Expression get_expression(const json& j, const std::string& path) {
  if (j.is_number()) return Expression::constant(j.get<double>());
  const std::string text = get_string(j, path);
  try {
    return parse(text);
  } catch (const ParseError& e) {
    throw SchemaError(path, std::string(e.what()) + " (offset " + std::to_string(e.offset()) + " in \"" + text + "\")");
  }
}

// Names must be drawn from prefix1..prefix<count>.
void check_names(const Expression& e, char prefix, int count, const std::string& path, const std::string& what) {
  for (const auto& name : free_variables(e)) {
    bool ok = false;
    for (int i = 1; i <= count; ++i) ok = ok || name == prefix + std::to_string(i);
    if (!ok) {
      std::string allowed = count == 0 ? std::string("none; it must be constant")
                                       : std::string(1, prefix) + "1.." + std::string(1, prefix) + std::to_string(count);
      throw SchemaError(path, what + " references '" + name + "' (allowed: " + allowed + ")");
    }
  }
}

}  // namespace

Scenario scenario_from_json(const json& doc) {
  require_object(doc, "");
  reject_unknown(doc, "", {"version", "name", "description", "k", "n", "region", "chart", "form", "quadrature",
                           "tolerance", "exact", "smoothness"});
  const std::string version = get_string(require(doc, "version", ""), "version");
  if (version != kScenarioVersion)
    throw SchemaError("version", "unsupported version \"" + version + "\" (expected \"" + std::string(kScenarioVersion) +
                                     "\")");

  ScenarioInfo info;
  if (doc.contains("name")) info.name = get_string(doc["name"], "name");
  if (doc.contains("description")) info.description = get_string(doc["description"], "description");
  if (doc.contains("smoothness")) info.smoothness = get_string(doc["smoothness"], "smoothness");
  if (doc.contains("exact")) {
    const Expression e = get_expression(doc["exact"], "exact");
    if (!e.is_constant()) throw SchemaError("exact", "must be a constant expression");
    info.exact = e.value();
  }

  const int k = get_int(require(doc, "k", ""), "k", 1);
  const int n = get_int(require(doc, "n", ""), "n", 1);
  if (k > kMaxDim || n > kMaxDim) throw SchemaError(k > kMaxDim ? "k" : "n", "exceeds " + std::to_string(kMaxDim));
  if (n < k) throw SchemaError("n", "must be >= k");

  const json& region = require(doc, "region", "");
  require_array(region, "region");
  if (region.empty()) throw SchemaError("region", "needs at least one piece");
  std::vector<NormalSet> pieces;
  for (std::size_t p = 0; p < region.size(); ++p) {
    const std::string ppath = at("region", p);
    require_array(region[p], ppath);
    if (static_cast<int>(region[p].size()) != k)
      throw SchemaError(ppath, "has " + std::to_string(region[p].size()) + " bound pairs; k = " + std::to_string(k));
    std::vector<Bound> bounds;
    for (std::size_t a = 0; a < region[p].size(); ++a) {
      const std::string bpath = at(ppath, a);
      const json& b = region[p][a];
      require_object(b, bpath);
      reject_unknown(b, bpath, {"lower", "upper"});
      Bound bound{get_expression(require(b, "lower", bpath), join(bpath, "lower")),
                  get_expression(require(b, "upper", bpath), join(bpath, "upper"))};
      const std::string axis = "x" + std::to_string(a + 1);
      check_names(bound.lower, 'x', static_cast<int>(a), join(bpath, "lower"), "lower bound of " + axis);
      check_names(bound.upper, 'x', static_cast<int>(a), join(bpath, "upper"), "upper bound of " + axis);
      bounds.push_back(std::move(bound));
    }
    try {
      pieces.emplace_back(std::move(bounds));
    } catch (const std::invalid_argument& e) {
      throw SchemaError(ppath, e.what());
    }
  }

  const json& chart_json = require(doc, "chart", "");
  require_array(chart_json, "chart");
  if (static_cast<int>(chart_json.size()) != n)
    throw SchemaError("chart", "has " + std::to_string(chart_json.size()) + " components; n = " + std::to_string(n));
  std::vector<Expression> components;
  for (std::size_t i = 0; i < chart_json.size(); ++i) {
    components.push_back(get_expression(chart_json[i], at("chart", i)));
    check_names(components.back(), 'x', k, at("chart", i), "chart component");
  }

  const json& form_json = require(doc, "form", "");
  require_array(form_json, "form");
  DifferentialForm form(k - 1, n);
  for (std::size_t i = 0; i < form_json.size(); ++i) {
    const std::string tpath = at("form", i);
    const json& term = form_json[i];
    require_object(term, tpath);
    reject_unknown(term, tpath, {"indices", "coeff"});
    const json& idx = require(term, "indices", tpath);
    const std::string ipath = join(tpath, "indices");
    require_array(idx, ipath);
    std::vector<int> indices;
    for (std::size_t a = 0; a < idx.size(); ++a) {
      const int v = get_int(idx[a], at(ipath, a), 1);
      if (v > n) throw SchemaError(at(ipath, a), "index " + std::to_string(v) + " exceeds n = " + std::to_string(n));
      indices.push_back(v);
    }
    if (static_cast<int>(indices.size()) != k - 1)
      throw SchemaError(ipath, "form degree mismatch: term has " + std::to_string(indices.size()) +
                                   " indices but the boundary of a k = " + std::to_string(k) +
                                   " region needs a form of degree " + std::to_string(k - 1));
    const Expression coeff = get_expression(require(term, "coeff", tpath), join(tpath, "coeff"));
    check_names(coeff, 'y', n, join(tpath, "coeff"), "form coefficient");
    form.accumulate(indices, coeff);
  }

  QuadratureSpec quad;
  if (doc.contains("quadrature")) {
    const json& q = doc["quadrature"];
    require_object(q, "quadrature");
    reject_unknown(q, "quadrature", {"points", "cells"});
    if (q.contains("points")) quad.points = get_int(q["points"], "quadrature.points", 1);
    if (q.contains("cells")) quad.cells = get_int(q["cells"], "quadrature.cells", 1);
  }
  double tolerance = kDefaultTolerance;
  if (doc.contains("tolerance")) {
    tolerance = get_number(doc["tolerance"], "tolerance");
    if (!(tolerance > 0.0)) throw SchemaError("tolerance", "must be positive");
  }

  try {
    return Scenario(RegularSet(std::move(pieces)), ChartMap(k, std::move(components)), std::move(form), quad,
                    tolerance, std::move(info));
  } catch (const SchemaError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw SchemaError("", e.what());
  }
}

json scenario_to_json(const Scenario& s) {
  json doc;
  doc["version"] = kScenarioVersion;
  doc["name"] = s.info().name;
  doc["description"] = s.info().description;
  doc["k"] = s.k();
  doc["n"] = s.n();
  json region = json::array();
  for (const auto& piece : s.region().pieces()) {
    json bounds = json::array();
    for (const auto& b : piece.bounds()) bounds.push_back({{"lower", to_string(b.lower)}, {"upper", to_string(b.upper)}});
    region.push_back(std::move(bounds));
  }
  doc["region"] = std::move(region);
  json chart = json::array();
  for (const auto& c : s.chart().components()) chart.push_back(to_string(c));
  doc["chart"] = std::move(chart);
  json form = json::array();
  for (const auto& term : s.form().terms()) form.push_back({{"indices", term.index.indices()}, {"coeff", to_string(term.coeff)}});
  doc["form"] = std::move(form);
  doc["quadrature"] = {{"points", s.quadrature().points}, {"cells", s.quadrature().cells}};
  doc["tolerance"] = s.tolerance();
  if (s.info().exact) doc["exact"] = *s.info().exact;
  if (!s.info().smoothness.empty()) doc["smoothness"] = s.info().smoothness;
  return doc;
}

Scenario parse_scenario(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw SchemaError("", std::string("invalid JSON: ") + e.what());
  }
  return scenario_from_json(doc);
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("", "cannot open scenario file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

std::span<const BuiltinScenario> builtin_scenarios() { return {detail::kBuiltins, detail::kBuiltinCount}; }

Scenario load_builtin(std::string_view name) {
  for (const auto& b : builtin_scenarios())
    if (b.name == name) return parse_scenario(b.json);
  throw SchemaError("", "unknown builtin scenario '" + std::string(name) + "' (see 'builtin list')");
}

Scenario resolve_scenario(const std::string& file_or_builtin) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(file_or_builtin, ec)) return load_scenario(file_or_builtin);
  std::string_view name = file_or_builtin;
  if (name.ends_with(".json")) name.remove_suffix(5);
  for (const auto& b : builtin_scenarios())
    if (b.name == name) return parse_scenario(b.json);
  throw SchemaError("", "'" + file_or_builtin + "' is neither a readable file nor a builtin scenario name");
}

json report_to_json(const VerificationReport& r) {
  json doc;
  doc["scenario"] = r.scenario;
  doc["quadrature"] = {{"points", r.quadrature.points}, {"cells", r.quadrature.cells}};
  doc["tolerance"] = r.tolerance;
  if (r.error) {
    doc["error"] = *r.error;
    doc["pass"] = false;
    doc["warnings"] = r.warnings;
    return doc;
  }
  doc["lhs"] = r.lhs;
  doc["rhs"] = r.rhs;
  doc["absolute_residual"] = r.absolute_residual;
  doc["relative_residual"] = r.relative_residual;
  doc["exact"] = r.exact ? json(*r.exact) : json(nullptr);
  doc["pass"] = r.pass;
  json pieces = json::array();
  for (const auto& p : r.pieces) pieces.push_back({{"piece", p.piece}, {"volume", p.volume}, {"boundary", p.boundary}});
  doc["pieces"] = std::move(pieces);
  json faces = json::array();
  for (const auto& f : r.faces)
    faces.push_back({{"piece", f.piece},
                     {"face", to_string(f.face)},
                     {"axis", f.face.axis + 1},
                     {"side", f.face.side == Side::Top ? "top" : "bottom"},
                     {"value", f.value}});
  doc["faces"] = std::move(faces);
  doc["warnings"] = r.warnings;
  doc["error"] = nullptr;
  return doc;
}

json convergence_to_json(const ConvergenceTable& t) {
  json doc;
  doc["scenario"] = t.scenario;
  doc["tracked"] = t.tracks_exact ? "error-vs-exact" : "relative-residual";
  json levels = json::array();
  for (const auto& l : t.levels)
    levels.push_back({{"points", l.quadrature.points},
                      {"cells", l.quadrature.cells},
                      {"lhs", l.lhs},
                      {"rhs", l.rhs},
                      {"relative_residual", l.relative_residual},
                      {"error", l.error},
                      {"order", l.order ? json(*l.order) : json(nullptr)}});
  doc["levels"] = std::move(levels);
  return doc;
}

}  // namespace stokes
