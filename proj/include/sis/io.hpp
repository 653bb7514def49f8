#pragma once

#include "sis/pipeline.hpp"
#include "sis/simulate.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sis::io {

using nlohmann::json;

// ---- model documents -------------------------------------------------------
//
//   {
//     "S_m": 3, "horizon": 100,
//     "dims":   [{"n_x": 2, "n_u": 1, "n_y": 1, "n_wp": 1, "n_wm": 1}, ...],
//     "blocks": [{"A": [[...]], "B": ..., ..., "M": ...,
//                 "by_t": [{"t": 5, "A": [[...]]}, ...]}, ...]
//   }
//
// "dims" and "blocks" are either arrays of length S_m or a single object used
// for every index. Matrices are row-major arrays of rows; omitted matrices are
// zero. A "by_t" entry replaces the listed matrices at that time step.

ChainModel parse_model(const json& doc);
/// Full form: per-index arrays, all nine matrices, complete by_t entries.
/// Throws ValidationError for rule-based sources, which have no document form.
json model_to_json(const ChainModel& model);

/// Parses JSON text; syntax errors carry the byte offset.
json parse_json_text(const std::string& text, const std::string& origin);
json read_json_file(const std::filesystem::path& path);

// ---- scenario documents ----------------------------------------------------

struct ScenarioConfig {
  Scenario scenario;
  std::vector<FilterPrior> priors;
  int runs = 1;                 // Monte Carlo runs per dropout level (compare)
  std::vector<double> p_levels;  // dropout levels swept by compare
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> p;
  std::optional<int> horizon;
};

/// True when the document is a bare model rather than a scenario.
bool is_model_document(const json& doc);

ScenarioConfig parse_scenario(const json& doc, const std::filesystem::path& base_dir,
                              const Overrides& overrides = {});
ScenarioConfig load_scenario(const std::filesystem::path& path, const Overrides& overrides = {});

json schedule_to_json(const DropoutSchedule& schedule);

// ---- CSV -------------------------------------------------------------------

/// Header `t,i,kind,component,value`; kinds x, v_plus, v_minus, w_plus,
/// w_minus, gamma, y. Numbers use the shortest round-trip representation.
void write_trace_csv(std::ostream& out, const Trace& trace, int n_wp, int n_wm);

/// Inverse of write_trace_csv. Inputs are re-evaluated from `inputs`; the
/// noise draws d are not part of the file and stay empty.
Trace read_trace_csv(std::istream& in, const ChainModel& model, const InputRule& inputs);

/// Columns `t,i,component,x_hat` plus `S_diag,T_diag` when `moments` is set.
void write_estimates_csv(std::ostream& out, const FilterRun& run, bool moments);

/// Columns `scope,t,mse`: one `per_t` row per time step and a final
/// `aggregate` row.
void write_metrics_csv(std::ostream& out, const MseReport& report);

}  // namespace sis::io
