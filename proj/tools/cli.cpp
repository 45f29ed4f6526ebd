#include "cli.hpp"

#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <system_error>

#include <CLI11.hpp>
#include <json.hpp>

#include "qdyn/io.hpp"

namespace qdyn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// File that exists but cannot be read; maps to exit 66.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string model;
  std::string out;
  std::string format;
  std::string relation;
  std::string observable;
  std::int64_t trajectories = 10000;
  std::uint64_t seed = 1;
  int mc_steps = 200;
  double tolerance = 1e-9;
  std::optional<double> t_max;
  std::optional<int> steps;
};

void check_readable(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read '" + path + "'");
}

io::ModelFile load(const Options& o) {
  if (o.model.empty()) throw CLI::RequiredError("--model");
  check_readable(o.model);
  io::ModelFile f = io::load_model(o.model);
  if (o.t_max) f.grid.t_max = *o.t_max;
  if (o.steps) f.grid.steps = *o.steps;
  f.grid.check();
  return f;
}

/// Named observable, or a JSON file holding either a Hermitian matrix {re, im}
/// or per-channel counting weights {"weights": [...]}.
Observable parse_observable(const std::string& spec, const LindbladModel& m) {
  if (std::optional<Observable> named = io::builtin_observable(spec, m)) return *named;
  if (!fs::exists(spec)) throw InputError("observable '" + spec + "' is neither a built-in name nor a readable file");
  check_readable(spec);
  std::ifstream in(spec);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw io::SchemaError("", std::string("observable file: invalid JSON: ") + e.what());
  }
  if (doc.is_object() && doc.contains("weights")) {
    const json& w = doc["weights"];
    if (!w.is_array()) throw io::SchemaError("/weights", "expected an array");
    std::vector<double> weights;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!w[i].is_number()) throw io::SchemaError("/weights/" + std::to_string(i), "expected a number");
      weights.push_back(w[i].get<double>());
    }
    return Observable::field(weights, spec);
  }
  return Observable::system(io::parse_matrix(doc, "", m.dim, m.dim), spec);
}

fs::path with_extension(const std::string& out, const char* ext) {
  fs::path p(out);
  if (p.extension() == ".csv" || p.extension() == ".json") p.replace_extension();
  p += ext;
  return p;
}

void emit(const Options& o, const std::string& fallback_format, const std::string& csv, const json& summary,
          std::ostream& out) {
  const std::string fmt = o.format.empty() ? fallback_format : o.format;
  const bool want_csv = fmt == "csv" || fmt == "both";
  const bool want_json = fmt == "json" || fmt == "both";
  const std::string json_text = summary.dump(2) + "\n";
  if (o.out.empty()) {
    if (want_csv) out << csv;
    if (want_json) out << json_text;
    return;
  }
  if (fmt == "both") {
    io::write_atomic(with_extension(o.out, ".csv"), csv);
    io::write_atomic(with_extension(o.out, ".json"), json_text);
  } else {
    io::write_atomic(o.out, want_csv ? csv : json_text);
  }
}

json grid_json(const TimeGrid& g) { return {{"t_max", g.t_max}, {"steps", g.steps}}; }

int cmd_validate(const Options& o, std::ostream& out) {
  const io::ModelFile f = load(o);
  const ValidationReport rep = validate_model(f.model);
  if (!rep.ok()) {
    out << "INVALID\n" << rep.summary() << "\n";
    return kInvalid;
  }
  out << "OK\n";
  return kOk;
}

int cmd_evolve(const Options& o, std::ostream& out) {
  const io::ModelFile f = load(o);
  require_valid(f.model);
  const TimeSeries<ComplexMatrix> rho = evolve_density(f.model, f.grid);
  const ComplexMatrix& last = rho.values.back();
  json summary = {{"model_hash", io::model_hash(f)},
                  {"grid", grid_json(f.grid)},
                  {"final_trace", last.trace().real()},
                  {"final_state", io::serialize_matrix(last)}};
  emit(o, "csv", io::density_csv(rho), summary, out);
  return kOk;
}

int cmd_activity(const Options& o, std::ostream& out) {
  const io::ModelFile f = load(o);
  require_valid(f.model);
  const ActivityBundle b = dynamical_activity(f.model, f.grid);
  json summary = {{"model_hash", io::model_hash(f)},
                  {"grid", grid_json(f.grid)},
                  {"A", b.A.values.back()},
                  {"Bq", b.Bq.values.back()},
                  {"B", b.B.values.back()},
                  {"J", b.J.values.back()}};
  emit(o, "csv", io::activity_csv(b), summary, out);
  return kOk;
}

std::optional<std::vector<double>> field_weights(const Options& o, const LindbladModel& m) {
  const Observable obs = parse_observable(o.observable, m);
  if (obs.kind != Observable::Kind::field) throw ModelError("counting needs a field observable (field, total-jumps or a weights file)");
  return obs.weights;
}

int cmd_counting(const Options& o, std::ostream& out) {
  const io::ModelFile f = load(o);
  require_valid(f.model);
  const CountingMoments c = counting_moments(f.model, f.grid, CountingTarget::rho, field_weights(o, f.model));
  json summary = {{"model_hash", io::model_hash(f)},
                  {"grid", grid_json(f.grid)},
                  {"mean", c.mean.values.back()},
                  {"variance", c.variance.values.back()},
                  {"rate", c.rate.values.back()}};
  emit(o, "csv", io::counting_csv(c), summary, out);
  return kOk;
}

int cmd_trajectories(const Options& o, std::ostream& out) {
  const io::ModelFile f = load(o);
  require_valid(f.model);
  LindbladModel m = f.model;
  if (const auto w = field_weights(o, m))
    for (std::size_t i = 0; i < m.jumps.size(); ++i) m.jumps[i].weight = (*w)[i];
  if (o.trajectories < 2) throw ModelError("--trajectories must be at least 2");
  TrajectoryOptions topt;
  topt.steps = o.mc_steps;
  const TrajectoryEnsemble e = simulate_trajectories(m, f.grid.t_max, o.trajectories, o.seed, topt);
  const CountingMoments c = counting_moments(m, f.grid);
  const double mean = c.mean.values.back(), var = c.variance.values.back();
  json summary = {{"model_hash", io::model_hash(f)},
                  {"ensemble", io::ensemble_summary(e)},
                  {"moments", {{"mean", mean}, {"variance", var}}},
                  {"z_mean", e.mean_se > 0 ? (e.mean - mean) / e.mean_se : 0.0},
                  {"z_variance", e.variance_se > 0 ? (e.variance - var) / e.variance_se : 0.0}};
  std::string csv = "trajectory,total\n";
  for (std::size_t i = 0; i < e.totals.size(); ++i) csv += std::to_string(i) + ',' + io::format_double(e.totals[i]) + '\n';
  emit(o, "json", csv, summary, out);
  return kOk;
}

int bound_exit(const BoundReport& r) {
  if (!r.ok()) return kViolated;
  if (r.inapplicable_only()) return kInapplicable;
  return kOk;
}

std::pair<Observable, Observable> observables(const Options& o, const LindbladModel& m) {
  const Observable obs = parse_observable(o.observable, m);
  const Observable sys = obs.kind == Observable::Kind::system ? obs : io::default_system_observable(m);
  return {obs, sys};
}

int cmd_bounds(const Options& o, std::ostream& out) {
  const std::optional<Relation> r = relation_from_string(o.relation);
  if (!r) throw CLI::ValidationError("--relation", "unknown relation '" + o.relation + "'");
  const io::ModelFile f = load(o);
  require_valid(f.model);
  const auto [obs, sys] = observables(o, f.model);
  const BoundReport rep = evaluate(*r, f.model, f.grid, obs, sys, BoundOptions{o.tolerance});
  emit(o, "json", io::report_csv(rep), io::report_summary(rep, io::model_hash(f)), out);
  return bound_exit(rep);
}

int cmd_suite(const Options& o, std::ostream& out) {
  const io::ModelFile f = load(o);
  require_valid(f.model);
  const auto [obs, sys] = observables(o, f.model);
  const std::string hash = io::model_hash(f);
  const std::string fmt = o.format.empty() ? (o.out.empty() ? "json" : "both") : o.format;
  if (fmt != "json" && o.out.empty()) throw CLI::ValidationError("--format", "suite writes CSV files only into an --out directory");
  if (!o.out.empty()) fs::create_directories(o.out);

  json combined = {{"model_hash", hash}, {"grid", grid_json(f.grid)}, {"tolerance", o.tolerance}, {"relations", json::array()}};
  bool violated = false, all_inapplicable = true;
  for (Relation r : all_relations()) {
    const BoundReport rep = evaluate(r, f.model, f.grid, obs, sys, BoundOptions{o.tolerance});
    violated = violated || !rep.ok();
    all_inapplicable = all_inapplicable && rep.inapplicable_only();
    combined["relations"].push_back(io::report_summary(rep, hash));
    if (!o.out.empty() && fmt != "json") io::write_atomic(fs::path(o.out) / (to_string(r) + ".csv"), io::report_csv(rep));
  }
  combined["ok"] = !violated;
  const std::string text = combined.dump(2) + "\n";
  if (o.out.empty()) out << text;
  else if (fmt != "csv") io::write_atomic(fs::path(o.out) / "suite.json", text);
  if (violated) return kViolated;
  return all_inapplicable ? kInapplicable : kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dynamical activity and uncertainty relations for Lindblad models", "qdyn"};
  app.require_subcommand(1, 1);
  Options o;
  const std::vector<std::string> formats{"csv", "json", "both"};

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--model,model", o.model, "Model JSON file");
    sub->add_option("--t-max", o.t_max, "Override the grid end time");
    sub->add_option("--steps", o.steps, "Override the number of grid intervals");
  };
  auto add_output = [&](CLI::App* sub) {
    sub->add_option("--out", o.out, "Output path (directory for suite)");
    sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember(formats));
  };

  CLI::App* validate = app.add_subcommand("validate", "Check a model file");
  add_common(validate);
  CLI::App* evolve = app.add_subcommand("evolve", "Density matrix time series");
  add_common(evolve);
  add_output(evolve);
  CLI::App* activity = app.add_subcommand("activity", "Dynamical activity A, Bq, B and QFI");
  add_common(activity);
  add_output(activity);
  CLI::App* counting = app.add_subcommand("counting", "Counting-field moments of the jump count");
  add_common(counting);
  add_output(counting);
  counting->add_option("--observable", o.observable, "field, total-jumps or a weights file");
  CLI::App* bounds = app.add_subcommand("bounds", "Evaluate one relation on the model grid");
  add_common(bounds);
  add_output(bounds);
  bounds->add_option("--relation", o.relation, "Relation name")->required();
  bounds->add_option("--observable", o.observable, "Observable name or file");
  bounds->add_option("--tolerance", o.tolerance, "Slack tolerance")->check(CLI::NonNegativeNumber);
  CLI::App* trajectories = app.add_subcommand("trajectories", "Monte Carlo jump unraveling");
  add_common(trajectories);
  add_output(trajectories);
  trajectories->add_option("--trajectories", o.trajectories, "Number of trajectories");
  trajectories->add_option("--seed", o.seed, "Base seed");
  trajectories->add_option("--mc-steps", o.mc_steps, "Coarse propagation intervals per trajectory")->check(CLI::PositiveNumber);
  trajectories->add_option("--observable", o.observable, "field, total-jumps or a weights file");
  CLI::App* suite = app.add_subcommand("suite", "Evaluate all eight relations");
  add_common(suite);
  add_output(suite);
  suite->add_option("--observable", o.observable, "Observable name or file");
  suite->add_option("--tolerance", o.tolerance, "Slack tolerance")->check(CLI::NonNegativeNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "qdyn: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (validate->parsed()) return cmd_validate(o, out);
    if (evolve->parsed()) return cmd_evolve(o, out);
    if (activity->parsed()) return cmd_activity(o, out);
    if (counting->parsed()) return cmd_counting(o, out);
    if (bounds->parsed()) return cmd_bounds(o, out);
    if (trajectories->parsed()) return cmd_trajectories(o, out);
    if (suite->parsed()) return cmd_suite(o, out);
    return kUsage;
  } catch (const CLI::Error& e) {
    err << "qdyn: " << e.what() << "\n";
    return kUsage;
  } catch (const InputError& e) {
    err << "qdyn: " << e.what() << "\n";
    return kNoInput;
  } catch (const io::SchemaError& e) {
    err << "qdyn: schema error at " << (e.pointer().empty() ? "/" : e.pointer()) << ": " << e.what() << "\n";
    return kInvalid;
  } catch (const std::invalid_argument& e) {
    err << "qdyn: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::system_error& e) {
    err << "qdyn: " << e.what() << "\n";
    return kNoInput;
  } catch (const std::exception& e) {
    err << "qdyn: " << e.what() << "\n";
    return kInvalid;
  }
}

}  // namespace qdyn::cli
