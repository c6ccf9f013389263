#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <set>

#include "CLI11.hpp"

#include "qgerbe/atlas.hpp"
#include "qgerbe/gerbe.hpp"
#include "qgerbe/io.hpp"
#include "qgerbe/selftest.hpp"

#ifndef QGERBE_SELFTEST_INJECT_FAILURE
#define QGERBE_SELFTEST_INJECT_FAILURE 0
#endif

namespace qgerbe::cli {

namespace {

using io::json;

/// Values read from a --config file. Flags given on the command line win.
struct RunConfig {
  std::optional<std::string> command;
  std::vector<std::string> input;
  std::optional<std::string> output;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  std::optional<int> samples;
  std::optional<int> charts;
  std::optional<std::string> jacobian;
  std::optional<std::string> atlas;
  std::optional<std::string> atlas_file;
  std::optional<std::string> filter;
  std::optional<double> shear;
  std::optional<bool> inject_failure;
};

template <typename T>
void take(const json& j, const char* key, std::optional<T>& slot)
{
  if (j.contains(key))
    slot = j.at(key).get<T>();
}

RunConfig load_config(const std::string& path)
{
  const json j = io::read_file(path);
  if (!j.is_object())
    throw Error(Errc::ParseError, path + ": config must be a JSON object");
  static const std::set<std::string> known = {"command", "input", "output", "tol", "seed", "samples",
                                              "charts", "jacobian", "atlas", "atlas_file", "filter",
                                              "shear", "inject_failure"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key))
      throw Error(Errc::ParseError, path + ": unknown config key \"" + key + "\"");
  }
  RunConfig c;
  try {
    take(j, "command", c.command);
    if (j.contains("input")) {
      const json& in = j.at("input");
      c.input = in.is_array() ? in.get<std::vector<std::string>>() : std::vector<std::string>{in.get<std::string>()};
    }
    take(j, "output", c.output);
    take(j, "tol", c.tol);
    take(j, "seed", c.seed);
    take(j, "samples", c.samples);
    take(j, "charts", c.charts);
    take(j, "jacobian", c.jacobian);
    take(j, "atlas", c.atlas);
    take(j, "atlas_file", c.atlas_file);
    take(j, "filter", c.filter);
    take(j, "shear", c.shear);
    take(j, "inject_failure", c.inject_failure);
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, path + ": " + e.what());
  }
  if (c.tol && !(*c.tol > 0))
    throw Error(Errc::ParseError, path + ": tol must be positive");
  if (c.samples && *c.samples <= 0)
    throw Error(Errc::ParseError, path + ": samples must be positive");
  return c;
}

template <typename T>
T pick(const CLI::Option* flag, const T& flag_value, const std::optional<T>& from_file, const T& fallback)
{
  if (flag->count() > 0)
    return flag_value;
  return from_file.value_or(fallback);
}

int exit_code(const Error& e)
{
  switch (e.code()) {
  case Errc::NotConformal:
  case Errc::FactorizationUnstable: return kNotConformal;
  default: return kUsage;
  }
}

class Emitter {
public:
  Emitter(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  void operator()(const json& j, const std::string& path) const
  {
    const std::string text = j.dump(2) + "\n";
    if (path.empty()) {
      out_ << text;
      return;
    }
    std::ofstream file(path, std::ios::binary);
    if (!(file << text))
      throw Error(Errc::ParseError, "cannot write " + path);
    err_ << "wrote " << path << "\n";
  }

private:
  std::ostream& out_;
  std::ostream& err_;
};

struct Positional {
  std::vector<std::string> values;

  std::string at(std::size_t i, const RunConfig& cfg, const char* what) const
  {
    const auto& list = values.empty() ? cfg.input : values;
    if (i >= list.size())
      throw Error(Errc::ParseError, std::string("missing ") + what);
    return list[i];
  }
};

void summarize(const SelftestReport& report, std::ostream& err)
{
  for (const auto& s : report.suites) {
    err << (s.pass() ? "[PASS] " : "[FAIL] ") << s.name << ": " << s.passed << "/" << s.cases;
    if (!s.first_failure.empty())
      err << "  first failure: " << s.first_failure;
    err << "\n";
  }
  err << (report.pass() ? "all suites passed" : "some suites failed") << "\n";
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Quaternionic gerbe toolkit: factorization, cocycle checks, tangent cocycles"};
  app.require_subcommand(0, 1);

  bool want_schema = false;
  std::string config_path;
  app.add_flag("--schema", want_schema, "Print every JSON schema and exit");
  app.add_option("--config", config_path, "JSON RunConfig; command-line flags take precedence");

  Positional pos;
  std::string out_path;
  double tol = 0;
  std::uint64_t seed = 1;
  int samples = 20, charts = 0;
  double shear = 0;
  std::string atlas_name, atlas_file, jacobian_mode = "analytic", filter;
  bool inject = false;
  bool trivial = false;
  std::string coboundary_out;

  auto common = [&](CLI::App* sub) { sub->add_option("--out", out_path, "Write JSON here instead of stdout"); };

  auto* factorize = app.add_subcommand("factorize", "Factor a conformal 4x4 matrix as p (x) q");
  factorize->add_option("matrix", pos.values, "Matrix4 JSON file");
  auto* factorize_tol = factorize->add_option("--tol", tol, "Conformality tolerance (default 1e-9)");
  common(factorize);

  auto* check_cocycle_cmd = app.add_subcommand("check-cocycle", "Verify a bitorsor cocycle");
  check_cocycle_cmd->add_option("cocycle", pos.values, "Cocycle JSON file");
  auto* cocycle_tol = check_cocycle_cmd->add_option("--tol", tol, "Residual tolerance (default 1e-10)");
  common(check_cocycle_cmd);

  auto* check_coboundary_cmd = app.add_subcommand("check-coboundary", "Verify coboundary data between two cocycles");
  check_coboundary_cmd->add_option("files", pos.values, "Cocycle a, cocycle b, coboundary")->expected(0, 3);
  auto* coboundary_tol = check_coboundary_cmd->add_option("--tol", tol, "Residual tolerance (default 1e-10)");
  common(check_coboundary_cmd);

  auto* synth = app.add_subcommand("synth", "Emit a coboundary-generated cocycle on a complete nerve");
  auto* synth_charts = synth->add_option("--charts", charts, "Chart count (default 4)");
  auto* synth_samples = synth->add_option("--samples", samples, "Samples per overlap (default 20)");
  auto* synth_seed = synth->add_option("--seed", seed, "Seed (default 1)");
  synth->add_flag("--trivial", trivial, "Emit the trivial cocycle instead");
  synth->add_option("--coboundary-out", coboundary_out, "Also write the coboundary from the trivial cocycle");
  common(synth);

  auto* tangent = app.add_subcommand("tangent", "Build the tangent gerbe cocycle of an atlas");
  auto* tangent_atlas = tangent->add_option("--atlas", atlas_name,
                                            "s4_stereo, affine, torus_identity or synthetic_conformal");
  auto* tangent_atlas_file = tangent->add_option("--atlas-file", atlas_file, "Atlas JSON file");
  auto* tangent_charts = tangent->add_option("--charts", charts, "Chart count (0: family default)");
  auto* tangent_seed = tangent->add_option("--seed", seed, "Seed (default 1)");
  auto* tangent_samples = tangent->add_option("--samples", samples, "Samples per chart (default 20)");
  auto* tangent_jacobian = tangent->add_option("--jacobian", jacobian_mode, "analytic or fd");
  auto* tangent_shear = tangent->add_option("--shear", shear, "Append a non-conformal shear to one transition");
  common(tangent);

  auto* selftest = app.add_subcommand("selftest", "Run the property suites");
  auto* selftest_filter = selftest->add_option("--filter", filter, "Run suites whose name contains this");
  auto* selftest_seed = selftest->add_option("--seed", seed, "Seed (default 1)");
  auto* selftest_inject = selftest->add_flag("--inject-failure", inject, "Add a suite that always fails");
  common(selftest);

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  const Emitter emit(out, err);
  try {
    if (want_schema) {
      emit(io::schemas(), "");
      return kOk;
    }

    const RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    const auto chosen = app.get_subcommands();
    if (chosen.empty()) {
      if (cfg.command) {
        std::vector<std::string> again = args;
        again.push_back(*cfg.command);
        return run(again, out, err);
      }
      err << app.help();
      return kUsage;
    }
    const CLI::App* cmd = chosen.front();
    const std::string output = pick<std::string>(cmd->get_option("--out"), out_path, cfg.output, "");

    if (cmd == factorize) {
      const double t = pick(factorize_tol, tol, cfg.tol, 1e-9);
      const Matrix4d m = io::matrix_from_json(io::read_file(pos.at(0, cfg, "matrix file")));
      emit(io::to_json(conformal_factorize(m, t)), output);
      return kOk;
    }

    if (cmd == check_cocycle_cmd) {
      const double t = pick(cocycle_tol, tol, cfg.tol, kCocycleTolerance);
      const auto c = io::cocycle_from_json(io::read_file(pos.at(0, cfg, "cocycle file")));
      const auto component = check_cocycle(c, t);
      const auto oracle = groupoid_oracle_check(c, t);
      json report = io::to_json(component);
      report["oracle_pass"] = oracle.pass;
      emit(report, output);
      if (component.pass != oracle.pass) {
        err << "component check and groupoid oracle disagree\n";
        return kOracleDisagrees;
      }
      if (!component.pass)
        err << "cocycle check failed\n";
      return component.pass ? kOk : kCheckFailed;
    }

    if (cmd == check_coboundary_cmd) {
      const double t = pick(coboundary_tol, tol, cfg.tol, kCocycleTolerance);
      const auto a = io::cocycle_from_json(io::read_file(pos.at(0, cfg, "first cocycle file")));
      const auto b = io::cocycle_from_json(io::read_file(pos.at(1, cfg, "second cocycle file")));
      const auto cob = io::coboundary_from_json(io::read_file(pos.at(2, cfg, "coboundary file")), *a.nerve);
      const auto report = check_coboundary(a, b, cob, t);
      emit(io::to_json(report), output);
      if (!report.pass)
        err << "coboundary check failed\n";
      return report.pass ? kOk : kCheckFailed;
    }

    if (cmd == synth) {
      const int n = pick(synth_charts, charts, cfg.charts, 4);
      const int s = pick(synth_samples, samples, cfg.samples, 20);
      const auto nerve = std::make_shared<const Nerve>(complete_nerve(n, s));
      if (trivial) {
        emit(io::to_json(trivial_cocycle(nerve)), output);
        if (!coboundary_out.empty())
          emit(io::to_json(identity_coboundary(*nerve)), coboundary_out);
        return kOk;
      }
      const auto generated = synth_coboundary_cocycle(nerve, pick(synth_seed, seed, cfg.seed, std::uint64_t{1}));
      emit(io::to_json(generated.cocycle), output);
      if (!coboundary_out.empty())
        emit(io::to_json(generated.from_trivial), coboundary_out);
      return kOk;
    }

    if (cmd == tangent) {
      const auto mode = parse_jacobian_mode(pick(tangent_jacobian, jacobian_mode, cfg.jacobian, std::string("analytic")));
      const std::string file = pick(tangent_atlas_file, atlas_file, cfg.atlas_file, std::string());
      const double amount = pick(tangent_shear, shear, cfg.shear, 0.0);
      Atlas atlas;
      if (!file.empty()) {
        atlas = io::atlas_from_json(io::read_file(file));
        if (amount != 0 && !atlas.pairs.empty())
          atlas = with_shear(std::move(atlas), atlas.pairs.front().ij, amount);
      } else {
        const std::string name = pick(tangent_atlas, atlas_name, cfg.atlas, std::string());
        if (name.empty())
          throw Error(Errc::UnknownAtlas, "give --atlas or --atlas-file");
        AtlasParams params;
        params.charts = pick(tangent_charts, charts, cfg.charts, 0);
        params.seed = pick(tangent_seed, seed, cfg.seed, std::uint64_t{1});
        params.samples = pick(tangent_samples, samples, cfg.samples, 20);
        params.shear = amount;
        atlas = builtin_atlas(name, params);
      }
      emit(io::to_json(build_tangent_cocycle(atlas, mode)), output);
      return kOk;
    }

    if (cmd == selftest) {
      SelftestOptions options;
      options.filter = pick(selftest_filter, filter, cfg.filter, std::string());
      options.seed = pick(selftest_seed, seed, cfg.seed, std::uint64_t{1});
      options.inject_failure = pick(selftest_inject, inject, cfg.inject_failure,
                                    static_cast<bool>(QGERBE_SELFTEST_INJECT_FAILURE));
      const auto report = run_selftest(options);
      if (report.suites.empty()) {
        err << "no suite matches filter \"" << options.filter << "\"\n";
        return kUsage;
      }
      emit(to_json(report), output);
      summarize(report, err);
      return report.pass() ? kOk : kCheckFailed;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

} // namespace qgerbe::cli
