// dlambda: command-line front end for the double-Lambda propagation model.
//
//   dlambda preset   [--out PATH]
//   dlambda spectra  [--omega4 MIN:MAX:N | --omega2 MIN:MAX:N]
//   dlambda dynamics [--omega4 V] [--length L] [--no-cache]
//   dlambda gainmap  [--omega4 MIN:MAX:N] [--length MIN:MAX:N]
//   dlambda switch   [--omega4 MIN:MAX:N | --g10 MIN:MAX:N] [--length L]
//   dlambda validate
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dlambda/dlambda.hpp"

using namespace dlambda;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Sweep {
  double lo = 0.0, hi = 0.0;
  int count = 1;

  std::vector<double> values() const { return linspace(lo, hi, count); }
  bool single() const { return count == 1; }
};

Sweep parse_sweep(const std::string& text, const char* flag) {
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(std::string(flag) + ": '" + s + "' is not a number");
    }
  };
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() == 1) {
    const double v = number(parts[0]);
    return {v, v, 1};
  }
  if (parts.size() != 3) throw ConfigError(std::string(flag) + " expects MIN:MAX:N or a value");
  Sweep s{number(parts[0]), number(parts[1]), 0};
  const double n = number(parts[2]);
  if (n < 1 || n != std::floor(n) || n > 1e7)
    throw ConfigError(std::string(flag) + ": N must be a positive integer");
  s.count = int(n);
  if (s.count > 1 && !(s.hi > s.lo)) throw ConfigError(std::string(flag) + ": MAX must exceed MIN");
  return s;
}

struct Common {
  std::string config;
  std::string out;
  std::string manifest;
  int steps = 0;
  int quad = 0;
  int threads = 0;
};

struct Context {
  Setup setup;
  QuadratureSpec quad;
  unsigned threads = 1;
  std::vector<std::string> warnings;
  nlohmann::json extra = nlohmann::json::object();
};

Context make_context(const Common& c) {
  Context ctx;
  ctx.setup = c.config.empty() ? na2_preset() : load_setup(c.config);
  ctx.setup.validate();
  ctx.quad = default_quadrature(ctx.setup.scheme, ctx.setup.medium);
  if (c.quad != 0) {
    if (c.quad < 2) throw ConfigError("--quad must be at least 2");
    ctx.quad.nodes = c.quad;
  }
  if (c.threads < 0) throw ConfigError("--threads must be positive");
  ctx.threads = resolve_threads(c.threads);
  return ctx;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  f << text;
  if (!f) throw ConfigError("write to '" + path + "' failed");
}

void emit(const Common& c, const std::string& command, const Context& ctx, const std::string& body,
          int steps, double seconds) {
  write_text(c.out, body);
  std::string path = c.manifest;
  if (path.empty() && !c.out.empty()) path = c.out + ".manifest.json";
  if (path.empty()) return;
  nlohmann::json m;
  m["command"] = command;
  m["version"] = DLAMBDA_VERSION;
  m["config"] = to_json(ctx.setup);
  m["quadrature"] = {{"rule", to_string(ctx.quad.rule)},
                     {"nodes", ctx.quad.nodes},
                     {"span", ctx.quad.span}};
  m["steps"] = steps;
  m["threads"] = ctx.threads;
  m["wall_time_s"] = seconds;
  m["warnings"] = ctx.warnings;
  m["output"] = c.out.empty() ? "stdout" : c.out;
  for (auto it = ctx.extra.begin(); it != ctx.extra.end(); ++it) m[it.key()] = it.value();
  write_text(path, m.dump(2) + "\n");
}

std::string to_csv(const ScanTable& t) {
  std::ostringstream os;
  write_csv(os, t);
  return os.str();
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void note_cache(Context& ctx, double validation_error, std::size_t fallbacks) {
  ctx.extra["cache_validation_error"] = validation_error;
  ctx.extra["cache_fallbacks"] = fallbacks;
  if (validation_error >= 1e-4)
    ctx.warnings.push_back("coefficient cache validation error " + std::to_string(validation_error));
  if (fallbacks > 0)
    ctx.warnings.push_back(std::to_string(fallbacks) +
                           " coefficient evaluations fell outside the cache");
}

void add_common(CLI::App* sub, Common& c, bool with_steps) {
  sub->add_option("--config", c.config, "JSON configuration (default: Na2 preset)");
  sub->add_option("--out", c.out, "output file (default: stdout)");
  sub->add_option("--manifest", c.manifest, "run manifest (default: OUT.manifest.json)");
  sub->add_option("--quad", c.quad, "velocity quadrature nodes");
  sub->add_option("--threads", c.threads, "worker threads (default: LCQ_THREADS or 1)");
  if (with_steps) sub->add_option("--steps", c.steps, "RK4 steps");
}

int run(int argc, char** argv) {
  CLI::App app{"Double-Lambda amplification-without-inversion model"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(DLAMBDA_VERSION));

  Common common;
  std::string omega4, omega2, length, g10;
  bool no_cache = false;

  auto* preset = app.add_subcommand("preset", "write the Na2 preset configuration");
  preset->add_option("--out", common.out, "output file (default: stdout)");

  auto* spectra = app.add_subcommand("spectra", "macroscopic coefficients against detuning");
  add_common(spectra, common, false);
  auto* sp_o4 = spectra->add_option("--omega4", omega4, "Omega4 sweep MIN:MAX:N (MHz)");
  auto* sp_o2 = spectra->add_option("--omega2", omega2, "Omega2 sweep MIN:MAX:N (MHz)");
  sp_o4->excludes(sp_o2);

  auto* dynamics = app.add_subcommand("dynamics", "intensities along the medium");
  add_common(dynamics, common, true);
  dynamics->add_option("--omega4", omega4, "Omega4 (MHz, default 160)");
  dynamics->add_option("--length", length, "medium length (L4, default 40)");
  dynamics->add_flag("--no-cache", no_cache, "evaluate coefficients directly at every stage");

  auto* gainmap = app.add_subcommand("gainmap", "I4(L)/I40 over (Omega4, L)");
  add_common(gainmap, common, true);
  gainmap->add_option("--omega4", omega4, "Omega4 grid MIN:MAX:N (MHz, default 0:300:13)");
  gainmap->add_option("--length", length, "length grid MIN:MAX:N (L4, default 0:60:241)");
  gainmap->add_flag("--no-cache", no_cache, "evaluate coefficients directly at every stage");

  auto* sw = app.add_subcommand("switch", "I4(L)/I40 at fixed L against Omega4 or G10");
  add_common(sw, common, true);
  auto* sw_o4 = sw->add_option("--omega4", omega4, "Omega4 sweep MIN:MAX:N (MHz)");
  auto* sw_g10 = sw->add_option("--g10", g10, "G10 sweep MIN:MAX:N (MHz)");
  sw_o4->excludes(sw_g10);
  sw->add_option("--length", length, "medium length (L4, default 27.5)");
  sw->add_flag("--no-cache", no_cache, "no coefficient cache for the G10 sweep");

  auto* validate = app.add_subcommand("validate", "run the invariant self-checks");
  validate->add_option("--config", common.config, "JSON configuration (default: Na2 preset)");
  validate->add_option("--threads", common.threads, "worker threads (default: LCQ_THREADS or 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  const auto t0 = std::chrono::steady_clock::now();

  if (preset->parsed()) {
    write_text(common.out, dump_setup(na2_preset()));
    return 0;
  }

  Context ctx = make_context(common);
  const Setup& s = ctx.setup;
  if (common.steps != 0 && common.steps < 100)
    throw ConfigError("--steps must be at least 100");

  if (spectra->parsed()) {
    SpectraOptions opt;
    opt.quad = ctx.quad;
    opt.threads = ctx.threads;
    Sweep sweep = parse_sweep(omega4.empty() ? "-400:400:161" : omega4, "--omega4");
    if (!omega2.empty()) {
      sweep = parse_sweep(omega2, "--omega2");
      opt.variable = SpectrumVariable::omega2;
    }
    const auto t = spectra_scan(s, sweep.values(), opt);
    emit(common, "spectra", ctx, to_csv(t), 0, elapsed(t0));
    return 0;
  }

  if (dynamics->parsed()) {
    Setup d = s;
    const Sweep o4 = parse_sweep(omega4.empty() ? "160" : omega4, "--omega4");
    const Sweep len = parse_sweep(length.empty() ? "40" : length, "--length");
    if (!o4.single() || !len.single())
      throw ConfigError("dynamics takes a single --omega4 and --length");
    d.fields.omega4 = o4.lo;
    DynamicsOptions opt;
    opt.propagation.quad = ctx.quad;
    opt.propagation.threads = ctx.threads;
    opt.use_cache = !no_cache;
    const int steps = common.steps ? common.steps : 400;
    const auto r = spatial_dynamics(d, len.lo, steps, opt);
    if (opt.use_cache) note_cache(ctx, r.cache_validation_error, r.trace.cache_fallbacks);
    if (r.trace.error_estimate) {
      ctx.extra["step_halving_error"] = *r.trace.error_estimate;
      if (*r.trace.error_estimate > 1e-4)
        ctx.warnings.push_back("step-halving error " + std::to_string(*r.trace.error_estimate));
    }
    ctx.setup = d;
    emit(common, "dynamics", ctx, to_csv(r.table), r.trace.steps, elapsed(t0));
    return 0;
  }

  if (gainmap->parsed()) {
    const auto om = parse_sweep(omega4.empty() ? "0:300:13" : omega4, "--omega4").values();
    const auto ls = parse_sweep(length.empty() ? "0:60:241" : length, "--length").values();
    GainMapOptions opt;
    opt.quad = ctx.quad;
    opt.threads = ctx.threads;
    opt.use_cache = !no_cache;
    const int steps = common.steps ? common.steps : 600;
    const GainMap map = gain_map(s, om, ls, steps, opt);
    if (opt.use_cache) note_cache(ctx, map.cache_validation_error, map.cache_fallbacks);
    ScanTable t;
    t.id = "gainmap";
    t.columns = {{"Omega4", "MHz"}, {"L", "L4"}, {"I4", "I40"}};
    bool failed = false;
    for (std::size_t i = 0; i < om.size(); ++i) {
      if (!map.valid[i]) {
        failed = true;
        std::cerr << "dlambda: gainmap cell failed: " << map.errors[i] << "\n";
        ctx.warnings.push_back(map.errors[i]);
        continue;
      }
      for (std::size_t j = 0; j < ls.size(); ++j) t.rows.push_back({om[i], ls[j], map.at(i, j)});
    }
    emit(common, "gainmap", ctx, to_csv(t), std::max(steps, kMinSamples), elapsed(t0));
    return failed ? kExitNumerical : 0;
  }

  if (sw->parsed()) {
    SwitchingOptions opt;
    opt.propagation.quad = ctx.quad;
    opt.propagation.threads = ctx.threads;
    opt.use_cache = !no_cache;
    Sweep sweep;
    if (!g10.empty()) {
      sweep = parse_sweep(g10, "--g10");
      opt.control = SwitchControl::g10;
    } else {
      sweep = parse_sweep(omega4.empty() ? "150:200:21" : omega4, "--omega4");
    }
    const Sweep len = parse_sweep(length.empty() ? "27.5" : length, "--length");
    if (!len.single()) throw ConfigError("switch takes a single --length");
    const int steps = common.steps ? common.steps : 256;
    const auto r = switching_curve(s, len.lo, sweep.values(), steps, opt);
    if (opt.control == SwitchControl::g10 && opt.use_cache)
      note_cache(ctx, r.cache_validation_error, r.cache_fallbacks);
    ctx.extra["transparency_crossings"] = r.transparency_crossings;
    emit(common, "switch", ctx, to_csv(r.table), std::max(steps, kMinSamples), elapsed(t0));
    return 0;
  }

  if (validate->parsed()) {
    bool ok = true;
    for (const auto& c : selfcheck::run_all(s, ctx.threads)) {
      std::cout << (c.passed ? "[PASS] " : "[FAIL] ") << c.name << ": " << c.detail << "\n";
      ok = ok && c.passed;
    }
    return ok ? 0 : 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "dlambda: configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const BlowUpError& e) {
    std::cerr << "dlambda: numerical failure: " << e.what() << " at z = " << e.z() << " L4\n";
    return kExitNumerical;
  } catch (const NumericalError& e) {
    std::cerr << "dlambda: numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "dlambda: " << e.what() << "\n";
    return kExitNumerical;
  }
}
