#pragma once

// JSON scenario files, the built-in scenario catalog and JSON reports.

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "stokes/verify.hpp"

namespace stokes {

inline constexpr std::string_view kScenarioVersion = "stokes-scenario/1";

/// Invalid scenario document. path() is the offending field, e.g.
/// "region[0][2].lower" (empty for document-level problems).
class SchemaError : public ScenarioError {
 public:
  SchemaError(std::string path, const std::string& message);
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

Scenario scenario_from_json(const nlohmann::json& doc);
nlohmann::json scenario_to_json(const Scenario& s);

/// Parses `text` as a scenario document.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

struct BuiltinScenario {
  std::string_view name;
  std::string_view json;
};

/// Shipped scenarios in catalog order.
std::span<const BuiltinScenario> builtin_scenarios();
/// Throws SchemaError for an unknown name.
Scenario load_builtin(std::string_view name);

/// A path to an existing file, otherwise a builtin name (a trailing ".json"
/// is ignored).
Scenario resolve_scenario(const std::string& file_or_builtin);

nlohmann::json report_to_json(const VerificationReport& report);
nlohmann::json convergence_to_json(const ConvergenceTable& table);

}  // namespace stokes
