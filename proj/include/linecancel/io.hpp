#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "linecancel/estimator.hpp"
#include "linecancel/phasor_cancel.hpp"
#include "linecancel/simlab.hpp"
#include "linecancel/types.hpp"

namespace linecancel {

inline constexpr const char* kScenarioSchema = "linecancel.scenario/1";

/// Scenario JSON (schema v1, see docs/scenario_schema.md). Unknown keys and
/// wrong types raise InputError.
LabTruth scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const LabTruth& truth);
LabTruth load_scenario(const std::filesystem::path& path);

/// CSV with header tau_s,signal,shots,sigma; numbers printed with 17
/// significant digits so that parse and emit round-trip exactly.
std::string trace_to_csv(const RamseyTrace& trace);
RamseyTrace trace_from_csv(const std::string& text);
RamseyTrace load_trace(const std::filesystem::path& path);

/// CSV with header t_d_s,phi_d,sigma.
std::vector<DelayPhase> delays_from_csv(const std::string& text);
std::string delays_to_csv(const std::vector<DelayPhase>& delays);

nlohmann::json fit_to_json(const FitResult& fit);
nlohmann::json solution_to_json(const CancelSolution& solution);

std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary file in the same directory and renames it
/// into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace linecancel
