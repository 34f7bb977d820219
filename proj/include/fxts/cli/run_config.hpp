#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fxts/error.hpp"
#include "fxts/spec_string.hpp"

namespace fxts::cli {

enum class Command { simulate, verify, bound, sweep, compare };

inline const std::vector<std::pair<Command, std::string>>& command_names() {
  static const std::vector<std::pair<Command, std::string>> names = {
      {Command::simulate, "simulate"}, {Command::verify, "verify"}, {Command::bound, "bound"},
      {Command::sweep, "sweep"},       {Command::compare, "compare"}};
  return names;
}

inline std::string to_string(Command c) {
  for (const auto& [cmd, name] : command_names())
    if (cmd == c) return name;
  return "unknown";
}

/// Everything one CLI invocation needs. `echo_argv` renders it back to an
/// argument list that parses to an identical config.
struct RunConfig {
  Command command = Command::simulate;
  std::uint64_t seed = 0;

  std::string system = "linear_contraction";
  std::string scale = "none";

  // verify
  std::string condition = "i";
  std::string convention = "theorem4";
  std::uint64_t samples = 1000;
  std::string domain = "annulus:r_min=1e-3,r_max=1e3";
  std::uint64_t grid_radii = 16;
  double threshold = 1e-6;
  double zero_tol = 1e-8;
  double tol = 1e-9;
  double delta = 1e-6;
  std::string v = "normsq";

  // verify (phi1/phi2) and bound
  std::optional<std::string> phi;

  // bound
  std::optional<std::string> formula;
  std::optional<double> v0;
  std::optional<double> a, b, p, q, c, alpha, beta, lambda0;

  // simulation
  std::string method = "rk45";
  double dt = 1e-3;
  double rtol = 1e-10;
  double atol = 1e-14;
  double dt_min = 1e-12;
  double dt_max = 0.1;
  double t_max = 100.0;
  double eps = 1e-9;
  std::optional<double> dwell;
  std::uint64_t stride = 1;
  std::vector<double> x0;
  std::vector<double> radii = {1.0, 1e2, 1e4, 1e6};
  std::uint64_t directions = 0;  // 0: the first coordinate axis only

  // compare
  std::string eq5 = "eq5:p=0.5,q=-2";
  std::string eq6 = "eq6:alpha=0.5,beta=-2";

  // outputs
  std::optional<std::string> out;
  std::optional<std::string> report;
  std::optional<std::string> plot_data;

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

using CommandMask = unsigned;
constexpr CommandMask bit(Command c) { return 1u << static_cast<unsigned>(c); }
constexpr CommandMask k_all = 0x1f;
constexpr CommandMask k_sim = bit(Command::simulate) | bit(Command::sweep) | bit(Command::compare);
constexpr CommandMask k_system = k_sim | bit(Command::verify);

struct OptionDef {
  std::string flag;
  std::string help;
  CommandMask commands;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::optional<std::string>(const RunConfig&)> get;
};

inline std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + format_double(xs[i]);
  return out;
}

inline std::uint64_t parse_count(const std::string& s, const char* what) {
  const double v = parse_double(s, what);
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) {
    fxts::detail::fail(ErrorCode::input, "cli_harness", std::string(what) + " must be a nonnegative integer");
  }
  return static_cast<std::uint64_t>(v);
}

template <class T>
OptionDef text(std::string flag, std::string help, CommandMask mask, T RunConfig::*field) {
  return {std::move(flag), std::move(help), mask, [field](RunConfig& c, const std::string& s) { c.*field = s; },
          [field](const RunConfig& c) -> std::optional<std::string> { return c.*field; }};
}

inline OptionDef opt_text(std::string flag, std::string help, CommandMask mask,
                          std::optional<std::string> RunConfig::*field) {
  return {std::move(flag), std::move(help), mask, [field](RunConfig& c, const std::string& s) { c.*field = s; },
          [field](const RunConfig& c) { return c.*field; }};
}

inline OptionDef real(std::string flag, std::string help, CommandMask mask, double RunConfig::*field) {
  const std::string name = flag;
  return {std::move(flag), std::move(help), mask,
          [field, name](RunConfig& c, const std::string& s) { c.*field = parse_double(s, name); },
          [field](const RunConfig& c) -> std::optional<std::string> { return format_double(c.*field); }};
}

inline OptionDef opt_real(std::string flag, std::string help, CommandMask mask, std::optional<double> RunConfig::*field) {
  const std::string name = flag;
  return {std::move(flag), std::move(help), mask,
          [field, name](RunConfig& c, const std::string& s) { c.*field = parse_double(s, name); },
          [field](const RunConfig& c) -> std::optional<std::string> {
            if (!(c.*field)) return std::nullopt;
            return format_double(*(c.*field));
          }};
}

inline OptionDef count(std::string flag, std::string help, CommandMask mask, std::uint64_t RunConfig::*field) {
  const std::string name = flag;
  return {std::move(flag), std::move(help), mask,
          [field, name](RunConfig& c, const std::string& s) { c.*field = parse_count(s, name.c_str()); },
          [field](const RunConfig& c) -> std::optional<std::string> { return std::to_string(c.*field); }};
}

inline OptionDef list(std::string flag, std::string help, CommandMask mask, std::vector<double> RunConfig::*field) {
  const std::string name = flag;
  return {std::move(flag), std::move(help), mask,
          [field, name](RunConfig& c, const std::string& s) { c.*field = parse_double_list(s, name); },
          [field](const RunConfig& c) -> std::optional<std::string> {
            if ((c.*field).empty()) return std::nullopt;
            return join(c.*field);
          }};
}

}  // namespace detail

/// The full flag grammar, in echo order.
inline const std::vector<detail::OptionDef>& option_table() {
  using namespace detail;
  constexpr auto V = bit(Command::verify);
  constexpr auto B = bit(Command::bound);
  constexpr auto S = bit(Command::simulate);
  constexpr auto W = bit(Command::sweep);
  constexpr auto C = bit(Command::compare);
  static const std::vector<OptionDef> table = {
      text("--system", "catalog system, name[:key=value,...]", k_system, &RunConfig::system),
      text("--scale", "eq5:p=<v>,q=<v> | eq6:alpha=<v>,beta=<v> | none", S | V | W, &RunConfig::scale),
      count("--seed", "seed for all sampling", k_all & ~B, &RunConfig::seed),
      text("--condition", "i | ii | phi1 | phi2", V, &RunConfig::condition),
      text("--convention", "theorem4 (H = -(J+J^T)) | theorem5 (H = -(J+J^T)/2)", V, &RunConfig::convention),
      count("--samples", "number of pseudo-random samples", V, &RunConfig::samples),
      text("--domain", "annulus:r_min=<v>,r_max=<v> | ball:radius=<v>", V, &RunConfig::domain),
      count("--grid-radii", "log-radial grid radii added along each signed axis", V, &RunConfig::grid_radii),
      real("--threshold", "eigenvalue threshold for the verdict", V, &RunConfig::threshold),
      real("--zero-tol", "zero band for eigenvalues and orthogonality", V, &RunConfig::zero_tol),
      real("--tol", "relative margin tolerance for phi1/phi2", V, &RunConfig::tol),
      real("--delta", "flow step for the second-order check", V, &RunConfig::delta),
      text("--v", "V selector: normsq | potential (simulate also accepts none)", V | S, &RunConfig::v),
      opt_text("--phi", "power:a=,p= | polyakov:a=,b=,p=,q= | theorem5:alpha=,beta=,lambda0= | table:<r>=<phi>,...",
               V | B, &RunConfig::phi),
      opt_text("--formula", "lemma3 | theorem1 | theorem4 | theorem5", B, &RunConfig::formula),
      opt_real("--v0", "upper limit V0 of the settling integral (number or inf)", B, &RunConfig::v0),
      opt_real("--a", "", B, &RunConfig::a),
      opt_real("--b", "", B, &RunConfig::b),
      opt_real("--p", "", B, &RunConfig::p),
      opt_real("--q", "", B, &RunConfig::q),
      opt_real("--c", "", B, &RunConfig::c),
      opt_real("--alpha", "", B, &RunConfig::alpha),
      opt_real("--beta", "", B, &RunConfig::beta),
      opt_real("--lambda0", "", B, &RunConfig::lambda0),
      text("--method", "rk45 | rk4", k_sim, &RunConfig::method),
      real("--dt", "rk4 step", k_sim, &RunConfig::dt),
      real("--rtol", "rk45 relative tolerance", k_sim, &RunConfig::rtol),
      real("--atol", "rk45 absolute tolerance", k_sim, &RunConfig::atol),
      real("--dt-min", "rk45 near-origin step clamp", k_sim, &RunConfig::dt_min),
      real("--dt-max", "rk45 largest step", k_sim, &RunConfig::dt_max),
      real("--t-max", "final time", k_sim, &RunConfig::t_max),
      real("--eps", "stop radius", k_sim, &RunConfig::eps),
      opt_real("--dwell", "time inside the stop ball that confirms settling", k_sim, &RunConfig::dwell),
      count("--stride", "record every n-th step", k_sim, &RunConfig::stride),
      list("--x0", "initial state, comma separated", S, &RunConfig::x0),
      list("--radii", "initial-condition norms, comma separated", W | C, &RunConfig::radii),
      count("--directions", "number of seeded random unit directions (0: first axis)", W | C, &RunConfig::directions),
      text("--eq5", "two-term scaling used by compare", C, &RunConfig::eq5),
      text("--eq6", "piecewise scaling used by compare", C, &RunConfig::eq6),
      opt_text("--out", "CSV output path", S | W, &RunConfig::out),
      opt_text("--report", "JSON report path", k_all, &RunConfig::report),
      opt_text("--plot-data", "long-format CSV for plotting", S | C, &RunConfig::plot_data),
  };
  return table;
}

/// Canonical argument list for `cfg` (without the program name).
inline std::vector<std::string> echo_argv(const RunConfig& cfg) {
  std::vector<std::string> out{to_string(cfg.command)};
  const auto mask = detail::bit(cfg.command);
  for (const auto& def : option_table()) {
    if (!(def.commands & mask)) continue;
    if (auto value = def.get(cfg)) {
      out.push_back(def.flag);
      out.push_back(*value);
    }
  }
  return out;
}

inline std::string echo_string(const RunConfig& cfg) {
  std::string s = "fxts";
  for (const auto& a : echo_argv(cfg)) s += " " + a;
  return s;
}

/// Builds the CLI11 parser. Option values are captured as raw text in `raw`
/// and converted by `finish_parse`.
class Parser {
 public:
  Parser() : app_("fxts: fixed-time stability verification, settling-time bounds and simulation", "fxts") {
    app_.require_subcommand(1);
    app_.set_help_all_flag("--help-all", "help for every subcommand");
    const std::map<Command, std::string> about = {
        {Command::simulate, "integrate one trajectory and write a CSV"},
        {Command::verify, "check eigenvalue conditions (i)/(ii) or phi-decrease conditions on samples"},
        {Command::bound, "settling-time bound: phi integral (--phi, --v0) or closed form (--formula)"},
        {Command::sweep, "settling times over initial radii and directions"},
        {Command::compare, "sweep the unscaled, eq5 and eq6 variants and classify the evidence"}};
    for (const auto& [cmd, name] : command_names()) {
      auto* sub = app_.add_subcommand(name, about.at(cmd));
      subs_.emplace_back(cmd, sub);
      for (std::size_t i = 0; i < option_table().size(); ++i) {
        const auto& def = option_table()[i];
        if (!(def.commands & detail::bit(cmd))) continue;
        auto* o = sub->add_option(def.flag, raw_[{cmd, i}], def.help);
        o->allow_extra_args(false);
      }
    }
  }

  CLI::App& app() { return app_; }

  /// Throws CLI::ParseError on grammar errors, fxts::Error on bad values.
  RunConfig parse(std::vector<std::string> args) {
    std::reverse(args.begin(), args.end());
    app_.parse(args);
    RunConfig cfg;
    for (const auto& [cmd, sub] : subs_) {
      if (!sub->parsed()) continue;
      cfg.command = cmd;
      for (std::size_t i = 0; i < option_table().size(); ++i) {
        const auto& def = option_table()[i];
        if (!(def.commands & detail::bit(cmd))) continue;
        if (sub->get_option(def.flag)->count() > 0) def.set(cfg, raw_[{cmd, i}]);
      }
    }
    return cfg;
  }

 private:
  CLI::App app_;
  std::vector<std::pair<Command, CLI::App*>> subs_;
  std::map<std::pair<Command, std::size_t>, std::string> raw_;
};

inline RunConfig parse_run_config(const std::vector<std::string>& args) {
  Parser parser;
  return parser.parse(args);
}

}  // namespace fxts::cli
