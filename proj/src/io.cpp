#include "linecancel/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <unistd.h>

#include "linecancel/errors.hpp"

namespace linecancel {
namespace {

using nlohmann::json;

// Polar coordinates recomputed from the complex value carry last-bit noise.
double tidy(double x) {
  if (x == 0.0 || !std::isfinite(x)) return x;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return std::strtod(buf, nullptr);
}

constexpr double kDeg = kTwoPi / 360.0;

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw InputError("scenario: " + where + " must be an object");
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) throw InputError("scenario: unknown key '" + where + "." + item.key() + "'");
  }
}

double number(const json& j, const std::string& key, double fallback, bool required = false) {
  if (!j.contains(key)) {
    if (required) throw InputError("scenario: missing '" + key + "'");
    return fallback;
  }
  if (!j.at(key).is_number()) throw InputError("scenario: '" + key + "' must be a number");
  return j.at(key).get<double>();
}

bool boolean(const json& j, const std::string& key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw InputError("scenario: '" + key + "' must be true or false");
  return j.at(key).get<bool>();
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(const std::string& s, std::size_t line) {
  const char* begin = s.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (s.empty() || end != begin + s.size() || errno == ERANGE)
    throw InputError("csv line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text, const std::string& header) {
  std::stringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InputError("csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw InputError("csv: expected header '" + header + "'");
  const std::size_t cols = split(header).size();
  std::vector<std::vector<std::string>> rows;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != cols)
      throw InputError("csv line " + std::to_string(n) + ": expected " + std::to_string(cols) + " columns");
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

LabTruth scenario_from_json(const json& j) {
  check_keys(j, "root",
             {"schema", "seed", "noise_phasor", "transfer_r_mv_per_hz", "trigger_phase_rad", "line", "modes",
              "drift", "fock_cutoff", "shot_period_s", "description"});
  if (!j.contains("schema") || j.at("schema") != kScenarioSchema)
    throw InputError(std::string("scenario: schema must be \"") + kScenarioSchema + "\"");
  if (!j.contains("seed") || !j.at("seed").is_number_unsigned())
    throw InputError("scenario: 'seed' must be a non-negative integer");

  LabTruth t;
  t.rng_seed = j.at("seed").get<std::uint64_t>();
  if (!j.contains("noise_phasor")) throw InputError("scenario: missing 'noise_phasor'");
  const json& np = j.at("noise_phasor");
  check_keys(np, "noise_phasor", {"magnitude_v", "angle_deg"});
  const double mag = number(np, "magnitude_v", 0.0, true);
  if (!(mag >= 0.0)) throw InputError("scenario: noise magnitude must be >= 0");
  t.noise_phasor = Phasor::polar(mag, number(np, "angle_deg", 0.0, true) * kDeg);
  t.transfer_r_mv_per_hz = number(j, "transfer_r_mv_per_hz", 0.0, true);
  t.trigger_phase = number(j, "trigger_phase_rad", t.trigger_phase);

  if (j.contains("line")) {
    const json& l = j.at("line");
    check_keys(l, "line", {"f_hz", "jitter_hz", "burst_retrigger"});
    t.f_line_hz = number(l, "f_hz", t.f_line_hz);
    t.line_jitter_hz = number(l, "jitter_hz", t.line_jitter_hz);
    t.burst_retrigger = boolean(l, "burst_retrigger", t.burst_retrigger);
  }
  if (j.contains("modes")) {
    const json& m = j.at("modes");
    check_keys(m, "modes", {"X", "Y"});
    for (Mode mode : {Mode::kX, Mode::kY}) {
      const std::string name = mode_name(mode);
      if (!m.contains(name)) continue;
      const json& mj = m.at(name);
      check_keys(mj, "modes." + name, {"freq_hz", "nbar_dot"});
      auto& mt = t.modes[static_cast<int>(mode)];
      mt.freq_hz = number(mj, "freq_hz", mt.freq_hz);
      mt.nbar_dot = number(mj, "nbar_dot", mt.nbar_dot);
    }
  }
  if (j.contains("drift")) {
    const json& d = j.at("drift");
    check_keys(d, "drift", {"sigma_f_hz", "tau_c_s", "common_mode"});
    t.drift.sigma_f_hz = number(d, "sigma_f_hz", t.drift.sigma_f_hz);
    t.drift.tau_c_s = number(d, "tau_c_s", t.drift.tau_c_s);
    t.drift.common_mode = boolean(d, "common_mode", t.drift.common_mode);
  }
  if (j.contains("fock_cutoff")) {
    if (!j.at("fock_cutoff").is_number_integer()) throw InputError("scenario: 'fock_cutoff' must be an integer");
    t.fock_cutoff = j.at("fock_cutoff").get<int>();
  }
  t.shot_period_s = number(j, "shot_period_s", t.shot_period_s);
  t.validate();
  return t;
}

json scenario_to_json(const LabTruth& t) {
  json j;
  j["schema"] = kScenarioSchema;
  j["seed"] = t.rng_seed;
  j["noise_phasor"] = {{"magnitude_v", tidy(t.noise_phasor.magnitude())},
                       {"angle_deg", tidy(t.noise_phasor.angle() / kDeg)}};
  j["transfer_r_mv_per_hz"] = t.transfer_r_mv_per_hz;
  j["trigger_phase_rad"] = t.trigger_phase;
  j["line"] = {{"f_hz", t.f_line_hz}, {"jitter_hz", t.line_jitter_hz}, {"burst_retrigger", t.burst_retrigger}};
  for (Mode mode : {Mode::kX, Mode::kY}) {
    const auto& m = t.mode(mode);
    j["modes"][mode_name(mode)] = {{"freq_hz", m.freq_hz}, {"nbar_dot", m.nbar_dot}};
  }
  j["drift"] = {{"sigma_f_hz", t.drift.sigma_f_hz}, {"tau_c_s", t.drift.tau_c_s},
                {"common_mode", t.drift.common_mode}};
  j["fock_cutoff"] = t.fock_cutoff;
  j["shot_period_s"] = t.shot_period_s;
  return j;
}

LabTruth load_scenario(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw InputError("scenario " + path.string() + ": " + e.what());
  }
  return scenario_from_json(j);
}

std::string trace_to_csv(const RamseyTrace& trace) {
  std::string out = "tau_s,signal,shots,sigma\n";
  for (const auto& p : trace.points()) {
    out += format_double(p.tau) + "," + format_double(p.signal) + "," + std::to_string(p.shots) + "," +
           format_double(p.sigma) + "\n";
  }
  return out;
}

RamseyTrace trace_from_csv(const std::string& text) {
  RamseyTrace trace;
  std::size_t line = 1;
  for (const auto& row : parse_csv(text, "tau_s,signal,shots,sigma")) {
    ++line;
    TracePoint p;
    p.tau = parse_double(row[0], line);
    p.signal = parse_double(row[1], line);
    const double shots = parse_double(row[2], line);
    if (shots < 0.0 || shots != std::floor(shots)) throw InputError("csv: shots must be a non-negative integer");
    p.shots = static_cast<long>(shots);
    p.sigma = parse_double(row[3], line);
    trace.push_back(p);
  }
  return trace;
}

RamseyTrace load_trace(const std::filesystem::path& path) { return trace_from_csv(read_file(path)); }

std::vector<DelayPhase> delays_from_csv(const std::string& text) {
  std::vector<DelayPhase> out;
  std::size_t line = 1;
  for (const auto& row : parse_csv(text, "t_d_s,phi_d,sigma")) {
    ++line;
    out.push_back({parse_double(row[0], line), parse_double(row[1], line), parse_double(row[2], line)});
  }
  return out;
}

std::string delays_to_csv(const std::vector<DelayPhase>& delays) {
  std::string out = "t_d_s,phi_d,sigma\n";
  for (const auto& d : delays)
    out += format_double(d.t_d) + "," + format_double(d.phi_d) + "," + format_double(d.sigma) + "\n";
  return out;
}

json fit_to_json(const FitResult& fit) {
  json j;
  j["params"] = fit.params;
  j["sigmas"] = fit.sigmas;
  j["sigma_source"] = "covariance";
  j["chi2_reduced"] = fit.chi2_reduced;
  j["dof"] = fit.dof;
  j["converged"] = fit.converged;
  j["n_iterations"] = fit.n_iterations;
  if (fit.params.count("phi_d")) j["phase_period"] = fit.phase_period;
  return j;
}

json solution_to_json(const CancelSolution& s) {
  json j;
  j["noise_phasor"] = {{"magnitude_v", s.noise_phasor.magnitude()},
                       {"angle_deg", s.noise_phasor.angle() / kDeg},
                       {"magnitude_sigma_v", s.magnitude_sigma_v},
                       {"angle_sigma_deg", s.angle_sigma / kDeg}};
  j["compensation"] = {{"magnitude_v", s.compensation.magnitude()},
                       {"angle_deg", s.compensation.angle() / kDeg}};
  j["scale_r_mv_per_hz"] = s.scale_r_mv_per_hz;
  j["scale_r_sigma_mv_per_hz"] = s.scale_r_sigma;
  j["residual_cost"] = s.residual_cost;
  return j;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw InputError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw InputError("cannot move output into place at " + path.string() + ": " + ec.message());
  }
}

}  // namespace linecancel
