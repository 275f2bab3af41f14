#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "stokes/cli.hpp"
#include "stokes/scenario_io.hpp"

using namespace stokes;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run_cli(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

json green_doc() { return json::parse(std::string(builtin_scenarios()[0].json)); }

std::string schema_error_path(const json& doc) {
  try {
    scenario_from_json(doc);
  } catch (const SchemaError& e) {
    return e.path();
  }
  return "<no error>";
}

std::string schema_error_message(const json& doc) {
  try {
    scenario_from_json(doc);
  } catch (const SchemaError& e) {
    return e.what();
  }
  return "<no error>";
}

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST_CASE("builtin catalog") {
  std::vector<std::string> names;
  for (const auto& b : builtin_scenarios()) names.emplace_back(b.name);
  CHECK(names == std::vector<std::string>{"green-square", "triangle-2d", "divergence-ball-3d", "hemisphere-in-R3",
                                          "annulus-two-pieces", "degenerate-collapsed-face"});
  const Scenario green = load_builtin("green-square");
  CHECK(green.k() == 2);
  CHECK(green.n() == 2);
  CHECK(green.info().exact == 1.0);
  CHECK_THROWS_AS(load_builtin("nope"), SchemaError);
}

TEST_CASE("builtin files match the shipped scenario directory") {
  for (const auto& b : builtin_scenarios()) {
    const Scenario from_file = load_scenario(std::string(STOKES_SCENARIO_DIR) + "/" + std::string(b.name) + ".json");
    CHECK(scenario_to_json(from_file) == scenario_to_json(load_builtin(b.name)));
  }
}

TEST_CASE("every builtin round-trips through the file format") {
  for (const auto& b : builtin_scenarios()) {
    CAPTURE(b.name);
    const Scenario first = load_builtin(b.name);
    const json saved = scenario_to_json(first);
    const Scenario second = parse_scenario(saved.dump());
    CHECK(scenario_to_json(second) == saved);
    CHECK(second.k() == first.k());
    CHECK(second.n() == first.n());
    CHECK(second.tolerance() == first.tolerance());
    CHECK(second.quadrature() == first.quadrature());
    CHECK(second.info().exact == first.info().exact);
    REQUIRE(second.region().pieces().size() == first.region().pieces().size());
    for (std::size_t p = 0; p < first.region().pieces().size(); ++p) {
      const auto& a = first.region().pieces()[p].bounds();
      const auto& c = second.region().pieces()[p].bounds();
      for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(identical(a[i].lower, c[i].lower));
        CHECK(identical(a[i].upper, c[i].upper));
      }
    }
    for (int i = 0; i < first.n(); ++i)
      CHECK(identical(first.chart().components()[static_cast<std::size_t>(i)],
                      second.chart().components()[static_cast<std::size_t>(i)]));
    REQUIRE(first.form().terms().size() == second.form().terms().size());
    for (std::size_t i = 0; i < first.form().terms().size(); ++i) {
      CHECK(first.form().terms()[i].index == second.form().terms()[i].index);
      CHECK(identical(first.form().terms()[i].coeff, second.form().terms()[i].coeff));
    }
  }
}

TEST_CASE("schema errors name the field") {
  json doc = green_doc();
  doc["form"][0]["indices"] = {1, 2};
  CHECK(schema_error_path(doc) == "form[0].indices");
  CHECK(schema_error_message(doc).find("degree") != std::string::npos);

  doc = green_doc();
  doc["region"][0][1]["upper"] = "x2";
  CHECK(schema_error_path(doc) == "region[0][1].upper");

  doc = green_doc();
  doc["k"] = 3;
  doc["n"] = 3;
  doc["chart"] = {"x1", "x2", "x3"};
  doc["form"] = json::array({{{"indices", {1, 2}}, {"coeff", "y1"}}});
  doc["region"][0] = json::array({{{"lower", "0"}, {"upper", "1"}}, {{"lower", "0"}, {"upper", "1"}},
                                  {{"lower", "x3"}, {"upper", "1"}}});
  CHECK(schema_error_path(doc) == "region[0][2].lower");
  CHECK(schema_error_message(doc).find("x3") != std::string::npos);

  doc = green_doc();
  doc["chart"][1] = "x1 +";
  CHECK(schema_error_path(doc) == "chart[1]");
  CHECK(schema_error_message(doc).find("offset 4") != std::string::npos);

  doc = green_doc();
  doc.erase("chart");
  CHECK(schema_error_path(doc) == "chart");

  doc = green_doc();
  doc["version"] = "2";
  CHECK(schema_error_path(doc) == "version");

  doc = green_doc();
  doc["extra"] = 1;
  CHECK(schema_error_path(doc) == "extra");

  doc = green_doc();
  doc["quadrature"]["points"] = 0;
  CHECK(schema_error_path(doc) == "quadrature.points");

  doc = green_doc();
  doc["form"][0]["coeff"] = "x1";
  CHECK(schema_error_path(doc) == "form[0].coeff");

  doc = green_doc();
  doc["chart"] = {"x1"};
  CHECK(schema_error_path(doc) == "chart");

  doc = green_doc();
  doc["tolerance"] = -1;
  CHECK(schema_error_path(doc) == "tolerance");

  CHECK_THROWS_AS(parse_scenario("{not json"), SchemaError);
}

TEST_CASE("verify prints the summary line and exits 0") {
  const Run r = run_cli({"verify", std::string(STOKES_SCENARIO_DIR) + "/green-square.json"});
  CHECK(r.code == 0);
  CHECK(r.out.find("lhs=1.000000 rhs=1.000000") != std::string::npos);
  CHECK(r.out.find("PASS") != std::string::npos);
}

TEST_CASE("verify accepts builtin names and exits 1 below the rounding floor") {
  CHECK(run_cli({"verify", "triangle-2d"}).code == 0);
  CHECK(run_cli({"verify", "triangle-2d.json"}).code == 0);
  const Run r = run_cli({"verify", "--tolerance", "1e-18", "annulus-two-pieces"});
  CHECK(r.code == 1);
  CHECK(r.out.find("FAIL") != std::string::npos);
}

TEST_CASE("input errors exit 2 with a diagnostic") {
  CHECK(run_cli({"verify", "no-such-scenario"}).code == 2);
  CHECK(run_cli({"frobnicate"}).code == 2);
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"verify", "green-square", "--points", "0"}).code == 2);
  json doc = green_doc();
  doc["form"][0]["indices"] = {1, 2};
  const auto path = write_temp("stokes-bad-degree.json", doc.dump());
  const Run r = run_cli({"verify", path.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("form[0].indices") != std::string::npos);
  const Run evaluation = run_cli({"verify", write_temp("stokes-bad-log.json", [] {
                                              json d = green_doc();
                                              d["form"][0]["coeff"] = "log(y1 - 3)";
                                              return d.dump();
                                            }())
                                                .string()});
  CHECK(evaluation.code == 2);
  CHECK(evaluation.err.find("log") != std::string::npos);
}

TEST_CASE("JSON report contents and determinism") {
  const Run a = run_cli({"verify", "--json", "annulus-two-pieces"});
  const Run b = run_cli({"verify", "--json", "annulus-two-pieces", "--threads", "3"});
  REQUIRE(a.code == 0);
  const json doc = json::parse(a.out);
  for (const char* key : {"lhs", "rhs", "absolute_residual", "relative_residual", "faces", "pieces", "quadrature", "pass",
                          "tolerance", "scenario", "warnings"})
    CHECK(doc.contains(key));
  CHECK(doc["faces"].size() == 8);
  CHECK(doc["quadrature"]["points"] == 12);
  CHECK(a.out == run_cli({"verify", "--json", "annulus-two-pieces"}).out);
  const json other = json::parse(b.out);
  CHECK(std::fabs(other["lhs"].get<double>() - doc["lhs"].get<double>()) <= 1e-13 * std::fabs(doc["lhs"].get<double>()));
}

TEST_CASE("overrides reach the computation") {
  const json doc = json::parse(run_cli({"verify", "--json", "--points", "3", "--cells", "2", "green-square"}).out);
  CHECK(doc["quadrature"]["points"] == 3);
  CHECK(doc["quadrature"]["cells"] == 2);
}

TEST_CASE("other subcommands") {
  const Run list = run_cli({"builtin", "list"});
  CHECK(list.code == 0);
  CHECK(list.out.find("hemisphere-in-R3\n") != std::string::npos);
  const Run show = run_cli({"builtin", "show", "triangle-2d"});
  CHECK(show.code == 0);
  CHECK(parse_scenario(show.out).k() == 2);
  CHECK(run_cli({"builtin", "show", "nope"}).code == 2);

  const Run conv = run_cli({"convergence", "--json", "--levels", "1,2,4", "triangle-2d"});
  CHECK(conv.code == 0);
  CHECK(json::parse(conv.out)["levels"].size() == 3);
  CHECK(run_cli({"convergence", "--levels", "1,2", "triangle-2d"}).code == 2);

  CHECK(run_cli({"ddzero", "hemisphere-in-R3"}).code == 0);
  CHECK(run_cli({"detb", "--h", "1e-3", "hemisphere-in-R3"}).code == 0);
  CHECK(run_cli({"reparam", "green-square"}).code == 0);
  CHECK(run_cli({"reparam", "green-square", "--rho", "x2", "--rho", "x1"}).code == 2);
  CHECK(run_cli({"ibp", "--f", "x1", "--g", "x1^2"}).code == 0);
  CHECK(run_cli({"ibp", "--f", "x1*x2", "--g", "1", "--lower", "0,0", "--upper", "1,1", "--axis", "2"}).code == 0);
  CHECK(run_cli({"ibp", "--f", "x1 +", "--g", "1"}).code == 2);
  CHECK(run_cli({"verify", "--help"}).code == 0);
}
