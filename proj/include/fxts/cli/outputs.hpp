#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "fxts/error.hpp"
#include "fxts/sim.hpp"

namespace fxts::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* tool_version = "1.0.0";

/// %.17g, which round-trips every finite double. Non-finite values print as
/// inf, -inf or nan.
inline std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// JSON has no infinities; they are written as the strings "inf"/"-inf".
inline Json json_number(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline Json json_number(const std::optional<double>& v) { return v ? json_number(*v) : Json(nullptr); }

inline Json json_vector(const Vector& x) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < x.size(); ++i) arr.push_back(json_number(x(i)));
  return arr;
}

/// Result envelope shared by all commands.
struct Envelope {
  std::string command_echo;
  Json params = Json::object();
  Json results = Json::array();
  std::vector<std::string> warnings;

  Json to_json() const {
    Json j;
    j["tool_version"] = tool_version;
    j["command_echo"] = command_echo;
    j["params"] = params;
    j["results"] = results;
    Json w = Json::array();
    for (const auto& s : warnings) w.push_back(s);
    if (results.empty()) w.push_back("no results");
    j["warnings"] = w;
    return j;
  }
};

inline std::string trajectory_csv(const Trajectory& traj) {
  const auto n = traj.states.empty() ? Eigen::Index{0} : traj.states.front().size();
  const bool with_v = !traj.v_values.empty();
  const bool with_f = !traj.normf_values.empty();
  std::string out = "t";
  for (Eigen::Index i = 0; i < n; ++i) out += ",x" + std::to_string(i + 1);
  if (with_v) out += ",V";
  if (with_f) out += ",normf";
  out += '\n';
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    out += csv_number(traj.times[k]);
    for (Eigen::Index i = 0; i < n; ++i) out += "," + csv_number(traj.states[k](i));
    if (with_v) out += "," + csv_number(traj.v_values[k]);
    if (with_f) out += "," + csv_number(traj.normf_values[k]);
    out += '\n';
  }
  return out;
}

/// Long format: one row per (t, series) pair.
inline std::string trajectory_plot_csv(const Trajectory& traj, const std::string& label = "trajectory") {
  std::string out = "label,t,series,value\n";
  const auto n = traj.states.empty() ? Eigen::Index{0} : traj.states.front().size();
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const std::string prefix = label + "," + csv_number(traj.times[k]) + ",";
    for (Eigen::Index i = 0; i < n; ++i) out += prefix + "x" + std::to_string(i + 1) + "," + csv_number(traj.states[k](i)) + "\n";
    out += prefix + "norm_x," + csv_number(traj.states[k].norm()) + "\n";
    if (!traj.v_values.empty()) out += prefix + "V," + csv_number(traj.v_values[k]) + "\n";
    if (!traj.normf_values.empty()) out += prefix + "normf," + csv_number(traj.normf_values[k]) + "\n";
  }
  return out;
}

inline std::string sweep_csv(const SettlingProfile& prof) {
  std::string out = "radius,direction_index,t_settle,bound,margin\n";
  const bool has_bound = prof.bound_reference.has_value();
  const double bound = has_bound ? prof.bound_reference->value : NAN;
  for (std::size_t i = 0; i < prof.radii.size(); ++i) {
    for (std::size_t j = 0; j < prof.directions.size(); ++j) {
      const auto& t = prof.times[i][j];
      out += csv_number(prof.radii[i]) + "," + std::to_string(j) + ",";
      out += (t ? csv_number(*t) : "") + ",";
      out += (has_bound ? csv_number(bound) : "") + ",";
      out += (t && has_bound ? csv_number(bound - *t) : "");
      out += '\n';
    }
  }
  return out;
}

/// Files produced by one command. Nothing touches the filesystem until
/// `commit`, which writes each file to a sibling temporary and renames it
/// into place. On any failure every temporary and every file already
/// committed by this call is removed.
class ArtifactSet {
 public:
  void add(std::string path, std::string content) { files_.emplace_back(std::move(path), std::move(content)); }
  const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }

  void commit() const {
    namespace fs = std::filesystem;
    std::vector<fs::path> temps;
    std::vector<fs::path> committed;
    auto cleanup = [&] {
      std::error_code ec;
      for (const auto& p : temps) fs::remove(p, ec);
      for (const auto& p : committed) fs::remove(p, ec);
    };
    try {
      for (const auto& [path, content] : files_) {
        const fs::path target(path);
        const fs::path tmp = target.string() + ".tmp";
        temps.push_back(tmp);
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) detail::fail(ErrorCode::io, "cli_harness", "cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.close();
        if (!out) detail::fail(ErrorCode::io, "cli_harness", "write failed for " + tmp.string());
      }
      for (std::size_t k = 0; k < files_.size(); ++k) {
        std::error_code ec;
        fs::rename(temps[k], files_[k].first, ec);
        if (ec) detail::fail(ErrorCode::io, "cli_harness", "cannot rename into " + files_[k].first + ": " + ec.message());
        committed.push_back(files_[k].first);
      }
    } catch (...) {
      cleanup();
      throw;
    }
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

}  // namespace fxts::cli
