#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "psikit/csv.hpp"
#include "psikit/diagnostics.hpp"
#include "psikit/errors.hpp"
#include "psikit/kernels.hpp"
#include "psikit/models.hpp"
#include "psikit/representation.hpp"
#include "psikit/solve.hpp"

namespace {

using nlohmann::ordered_json;
using namespace psikit;

// Exit codes: 0 ok, 1 config/I-O, 2 numeric/solver, 3 diagnostic failures.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumeric = 2;
constexpr int kExitDiagnostic = 3;

struct CommonOptions {
  std::string model_name;
  std::vector<std::string> params;
  double tolerance = -1.0;  // <= 0: library default
};

std::map<std::string, double> parse_params(const std::vector<std::string>& kv) {
  std::map<std::string, double> out;
  for (const std::string& item : kv) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("CONFIG_BAD_PARAM",
                        "--param expects key=value, got '" + item + "'");
    }
    const std::string key = item.substr(0, eq);
    const std::vector<double> v = parse_inline_list(item.substr(eq + 1));
    if (v.size() != 1) {
      throw ConfigError("CONFIG_BAD_PARAM",
                        "--param expects a single number in '" + item + "'");
    }
    out[key] = v.front();
  }
  return out;
}

SolveOptions solve_options(const CommonOptions& common) {
  SolveOptions opts;
  if (common.tolerance > 0.0) opts.tolerance = common.tolerance;
  return opts;
}

RealWeightedSample load_sample(const std::string& data_path,
                               const std::string& weights_col,
                               bool weights_col_explicit) {
  const CsvTable table = read_csv(data_path);
  const int xcol = table.find_column("x");
  if (xcol < 0) {
    throw ConfigError("CSV_MISSING_COLUMN",
                      data_path + ": no observation column 'x'");
  }
  RealWeightedSample sample;
  sample.observations = table.columns[static_cast<std::size_t>(xcol)];
  const int wcol = table.find_column(weights_col);
  if (wcol >= 0) {
    sample.weights = table.columns[static_cast<std::size_t>(wcol)];
  } else if (weights_col_explicit) {
    throw ConfigError("CSV_MISSING_COLUMN",
                      data_path + ": no weight column '" + weights_col + "'");
  } else {
    sample.weights.assign(sample.observations.size(), 1.0);
  }
  sample.validate();
  return sample;
}

std::vector<double> load_family(const std::string& family_arg) {
  if (std::filesystem::exists(family_arg)) {
    const CsvTable table = read_csv(family_arg);
    const int xcol = table.find_column("x");
    if (xcol < 0) {
      throw ConfigError("CSV_MISSING_COLUMN",
                        family_arg + ": no observation column 'x'");
    }
    return table.columns[static_cast<std::size_t>(xcol)];
  }
  return parse_inline_list(family_arg);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ConfigError("IO_WRITE_FAILED", "cannot write '" + path + "'");
  }
  out << text;
}

void emit_json(const ordered_json& j, const std::string& out_path) {
  const std::string text = j.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_text(out_path, text);
  }
}

std::string csv_line(std::span<const double> values) {
  std::string line;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) line += ',';
    line += format_number(values[i]);
  }
  line += '\n';
  return line;
}

const char* crossing_name(Crossing c) {
  return c == Crossing::ZeroCrossing ? "ZeroCrossing" : "JumpCrossing";
}

// ---------------------------------------------------------------- estimate

struct EstimateOptions {
  CommonOptions common;
  std::string data_path;
  std::string weights_col = "w";
  bool weights_col_explicit = false;
  std::string out_path;
};

int cmd_estimate(const EstimateOptions& opt) {
  const ModelBundle bundle = make_model(opt.common.model_name,
                                        parse_params(opt.common.params));
  const RealWeightedSample sample = load_sample(
      opt.data_path, opt.weights_col, opt.weights_col_explicit);
  const SignChangeResult r =
      estimate(bundle.model, sample, solve_options(opt.common));

  ordered_json report;
  report["theta"] = r.theta;
  report["bracket"] = {{"lo", r.bracket_lo}, {"hi", r.bracket_hi}};
  report["residual"] = r.residual;
  report["crossing"] = crossing_name(r.crossing);
  report["n"] = sample.size();
  report["sum_weights"] = sample.weight_sum();
  emit_json(report, opt.out_path);
  return kExitOk;
}

// ----------------------------------------------------------- representation

struct RepresentationOptions {
  CommonOptions common;
  std::string family_arg;
  std::string grid_arg;
  double tau = std::numeric_limits<double>::quiet_NaN();
  std::string data_path;
  std::string weights_col = "w";
  bool weights_col_explicit = false;
  std::string out_dir;
};

std::vector<double> resolve_grid(const std::string& grid_arg,
                                 const FamilyEnvelope& env,
                                 const ParamInterval& theta) {
  if (!grid_arg.empty()) {
    const std::vector<double> parts = parse_inline_list(grid_arg);
    if (parts.size() != 3) {
      throw ConfigError("CONFIG_BAD_GRID", "--grid expects lo,hi,n");
    }
    const int n = static_cast<int>(parts[2]);
    if (n < 2 || parts[2] != n) {
      throw ConfigError("CONFIG_BAD_GRID", "--grid point count must be an "
                                           "integer >= 2");
    }
    return make_uniform_grid(parts[0], parts[1], n);
  }
  // Default working grid: the family's theta1 range expanded by 50%, pulled
  // back inside theta where the expansion would leave it.
  double lo1 = env.theta1_min();
  double hi1 = env.theta1_max();
  double range = hi1 - lo1;
  if (range <= 0.0) range = 0.5 * (1.0 + std::abs(lo1));
  double lo = lo1 - 0.25 * range;
  double hi = hi1 + 0.25 * range;
  if (lo <= theta.lo()) lo = theta.lo() + 0.5 * (lo1 - theta.lo());
  if (hi >= theta.hi()) hi = theta.hi() - 0.5 * (theta.hi() - hi1);
  return make_uniform_grid(lo, hi, 512);
}

int cmd_representation(const RepresentationOptions& opt) {
  if (opt.family_arg.empty()) {
    throw ConfigError("CONFIG_MISSING_FAMILY", "--family is required");
  }
  if (opt.out_dir.empty()) {
    throw ConfigError("CONFIG_MISSING_OUT_DIR", "--out-dir is required");
  }
  const ModelBundle bundle = make_model(opt.common.model_name,
                                        parse_params(opt.common.params));
  const SolveOptions sopts = solve_options(opt.common);
  const std::vector<double> family = load_family(opt.family_arg);

  const FamilyEnvelope env(bundle.model, family, 0.0, sopts);
  EnvelopeConfig cfg;
  cfg.family = family;
  cfg.grid = resolve_grid(opt.grid_arg, env, bundle.model.theta);
  cfg.validate(bundle.model.theta);

  double tau = opt.tau;
  if (std::isnan(tau)) tau = 0.5 * (cfg.grid.front() + cfg.grid.back());
  if (!(cfg.grid.front() <= tau && tau <= cfg.grid.back())) {
    throw TauOutsideGrid(tau, cfg.grid.front(), cfg.grid.back());
  }

  std::filesystem::create_directories(opt.out_dir);
  const auto out_file = [&](const std::string& name) {
    return (std::filesystem::path(opt.out_dir) / name).string();
  };

  // Envelope table.
  const EnvelopeTable table = q_star_envelope(bundle.model, cfg);
  {
    std::string text = "t,q_lower,q_upper\n";
    for (std::size_t i = 0; i < table.t.size(); ++i) {
      text += csv_line(std::vector<double>{table.t[i], table.q_lower[i],
                                           table.q_upper[i]});
    }
    write_text(out_file("envelope.csv"), text);
  }

  // Weight p from the family q_* envelope (q_upper fallback past the
  // family's theta1 range, where the proper side has no witnesses).
  int fallback_points = 0;
  for (std::size_t i = 0; i < table.t.size(); ++i) {
    if (std::isnan(table.q_lower[i])) ++fallback_points;
  }
  const MonotoneWeight weight = build_monotone_weight(
      [&](double t) { return env.integrand(t); }, cfg.grid, tau);
  {
    std::string text = "t,log_p,p\n";
    for (std::size_t i = 0; i < weight.grid.size(); ++i) {
      text += csv_line(std::vector<double>{weight.grid[i], weight.log_p[i],
                                           std::exp(weight.log_p[i])});
    }
    write_text(out_file("weight.csv"), text);
  }

  // Sample: --data when given, the family with unit weights otherwise.
  const RealWeightedSample sample =
      opt.data_path.empty()
          ? RealWeightedSample::equal_weights(family)
          : load_sample(opt.data_path, opt.weights_col,
                        opt.weights_col_explicit);

  // Convexified loss table per observation.
  ConvexifiedLoss loss;
  loss.model = bundle.model;
  loss.weight = weight;
  loss.solve_options = sopts;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const std::vector<double> rho =
        convexified_loss_table(loss, sample.observations[i], cfg.grid);
    char name[32];
    std::snprintf(name, sizeof(name), "rho_star_%03zu.csv", i);
    std::string text = "t,rho_star\n";
    for (std::size_t k = 0; k < cfg.grid.size(); ++k) {
      text += csv_line(std::vector<double>{cfg.grid[k], rho[k]});
    }
    write_text(out_file(name), text);
  }

  // Argmin agreement between the estimator, sum rho* and (when the model
  // carries a closed-form loss) sum rho.
  const SignChangeResult est = estimate(bundle.model, sample, sopts);
  const ParamInterval span(cfg.grid.front(), cfg.grid.back());
  MinimizeOptions mopts;
  auto sum_rho_star = [&](double t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
      acc += sample.weights[i] *
             convexified_loss(loss, sample.observations[i], t);
    }
    return acc;
  };
  const double argmin_star = argmin_objective(sum_rho_star, span, mopts);

  double argmin_rho = std::numeric_limits<double>::quiet_NaN();
  if (bundle.rho) {
    auto sum_rho = [&](double t) {
      double acc = 0.0;
      for (std::size_t i = 0; i < sample.size(); ++i) {
        acc += sample.weights[i] * bundle.rho(sample.observations[i], t);
      }
      return acc;
    };
    argmin_rho = argmin_objective(sum_rho, bundle.model.theta, mopts);
  }

  const double agree_tol = 2.0 * mopts.tolerance * (1.0 + std::abs(est.theta));
  double max_diff = std::abs(argmin_star - est.theta);
  if (bundle.rho) {
    max_diff = std::max(max_diff, std::abs(argmin_rho - est.theta));
    max_diff = std::max(max_diff, std::abs(argmin_rho - argmin_star));
  }

  double max_gap = 0.0, gap_sum = 0.0;
  int gap_count = 0;
  for (double g : table.gap) {
    if (std::isnan(g)) continue;
    max_gap = std::max(max_gap, g);
    gap_sum += g;
    ++gap_count;
  }

  ordered_json summary;
  summary["model"] = bundle.name;
  summary["n"] = sample.size();
  summary["sum_weights"] = sample.weight_sum();
  summary["estimate"] = {{"theta", est.theta},
                         {"crossing", crossing_name(est.crossing)}};
  summary["argmin_rho_star"] = argmin_star;
  summary["argmin_rho"] =
      bundle.rho ? ordered_json(argmin_rho) : ordered_json(nullptr);
  summary["agreement"] = {{"tolerance", agree_tol},
                          {"max_abs_difference", max_diff},
                          {"verdict", max_diff <= agree_tol ? "pass" : "fail"}};
  summary["envelope"] = {
      {"grid_points", table.t.size()},
      {"two_sided_points", gap_count},
      {"fallback_points", fallback_points},
      {"max_gap", gap_count > 0 ? ordered_json(max_gap) : ordered_json(nullptr)},
      {"mean_gap", gap_count > 0 ? ordered_json(gap_sum / gap_count)
                                 : ordered_json(nullptr)}};
  summary["tau"] = tau;
  emit_json(summary, out_file("summary.json"));
  return kExitOk;
}

// -------------------------------------------------------------- diagnose

struct DiagnoseOptions {
  CommonOptions common;
  std::string data_path;
  std::string weights_col = "w";
  bool weights_col_explicit = false;
  std::string pairs = "auto";
  std::string out_path;
};

double uniform01(std::mt19937& gen) {
  return static_cast<double>(gen()) * (1.0 / 4294967296.0);
}

std::vector<std::pair<std::size_t, std::size_t>> resolve_pairs(
    const std::string& pairs_arg, const RealPsiModel& model,
    const RealWeightedSample& sample, const SolveOptions& opts) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (pairs_arg != "auto") {
    // "i,j;k,l" with zero-based row indices.
    std::stringstream ss(pairs_arg);
    std::string item;
    while (std::getline(ss, item, ';')) {
      const std::vector<double> ij = parse_inline_list(item);
      if (ij.size() != 2) {
        throw ConfigError("CONFIG_BAD_PAIRS",
                          "--pairs expects i,j;k,l index pairs");
      }
      const auto i = static_cast<std::size_t>(ij[0]);
      const auto j = static_cast<std::size_t>(ij[1]);
      if (ij[0] != std::floor(ij[0]) || ij[1] != std::floor(ij[1]) ||
          i >= sample.size() || j >= sample.size()) {
        throw ConfigError("CONFIG_BAD_PAIRS", "pair index out of range");
      }
      pairs.emplace_back(i, j);
    }
    return pairs;
  }
  // auto: consecutive pairs in theta1 order, plus the extreme pair.
  std::vector<std::size_t> order(sample.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<double> th1(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    th1[i] = model.has_theta1_closed_form()
                 ? model.theta1_closed_form(sample.observations[i])
                 : theta1(model, sample.observations[i], opts).theta;
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return th1[a] < th1[b] || (th1[a] == th1[b] && a < b);
  });
  for (std::size_t k = 0; k + 1 < order.size(); ++k) {
    pairs.emplace_back(order[k], order[k + 1]);
  }
  if (order.size() > 2) pairs.emplace_back(order.front(), order.back());
  return pairs;
}

int cmd_diagnose(const DiagnoseOptions& opt) {
  const ModelBundle bundle = make_model(opt.common.model_name,
                                        parse_params(opt.common.params));
  const SolveOptions sopts = solve_options(opt.common);
  const RealWeightedSample sample = load_sample(
      opt.data_path, opt.weights_col, opt.weights_col_explicit);

  DiagnosticReport report;

  const auto pairs = resolve_pairs(opt.pairs, bundle.model, sample, sopts);
  if (pairs.empty()) {
    CheckResult r;
    r.name = "comparison_monotone";
    r.verdict = Verdict::Vacuous;
    r.warning = "fewer than two observations";
    report.append(std::move(r));
  }
  for (const auto& [i, j] : pairs) {
    CheckResult r = check_comparison_monotone(
        bundle.model, sample.observations[i], sample.observations[j], 1024,
        true, sopts);
    r.name += "/pair_" + std::to_string(i) + "_" + std::to_string(j);
    report.append(std::move(r));
  }

  report.append(check_z_property(bundle.model, sample, sopts));

  // The sample itself plus deterministic reweightings.
  std::vector<RealWeightedSample> samples = {sample};
  std::mt19937 gen(0x5EEDu);
  for (int k = 0; k < 8; ++k) {
    RealWeightedSample s = sample;
    for (double& w : s.weights) {
      w = (w > 0.0 ? w : 1.0) * (0.1 + 2.9 * uniform01(gen));
    }
    samples.push_back(std::move(s));
  }
  report.append(check_weighted_estimator_family(bundle.model, samples, sopts));

  // Decreasing product needs a weight; built from the sample as family when
  // it spans more than one theta1 value.
  try {
    const FamilyEnvelope env(bundle.model, sample.observations, 0.0, sopts);
    if (env.theta1_max() > env.theta1_min()) {
      EnvelopeConfig cfg;
      cfg.family = sample.observations;
      cfg.grid = resolve_grid("", env, bundle.model.theta);
      cfg.validate(bundle.model.theta);
      q_star_envelope(bundle.model, cfg);  // raises on an order violation
      const double tau = 0.5 * (cfg.grid.front() + cfg.grid.back());
      const MonotoneWeight weight = build_monotone_weight(
          [&](double t) { return env.integrand(t); }, cfg.grid, tau);
      for (std::size_t i = 0; i < sample.size(); ++i) {
        const double th1 = env.theta1s()[i];
        const double excl = 1e-4 * (1.0 + std::abs(th1));
        CheckResult r;
        if (std::abs(th1 - env.theta1_min()) <= excl ||
            std::abs(th1 - env.theta1_max()) <= excl) {
          // This observation attains the family envelope, so its weighted
          // product is constant by construction rather than decreasing.
          r.name = "decreasing_product";
          r.verdict = Verdict::Vacuous;
          r.warning = "observation attains the family envelope";
        } else {
          r = check_decreasing_product(bundle.model, weight,
                                       sample.observations[i], cfg.grid, 0.0,
                                       sopts);
        }
        r.name += "/obs_" + std::to_string(i);
        report.append(std::move(r));
      }
    } else {
      CheckResult r;
      r.name = "decreasing_product";
      r.verdict = Verdict::Vacuous;
      r.warning = "sample spans a single theta1 value";
      report.append(std::move(r));
    }
  } catch (const EnvelopeOrderViolated& e) {
    CheckResult r;
    r.name = "envelope_order";
    r.verdict = Verdict::Fail;
    r.witness = Witness{e.t, std::nullopt, {e.q_lower, e.q_upper}};
    r.warning = e.code();
    report.append(std::move(r));
  } catch (const RichnessViolated& e) {
    CheckResult r;
    r.name = "envelope_richness";
    r.verdict = Verdict::Fail;
    r.witness = Witness{e.t, std::nullopt, {}};
    r.warning = e.code();
    report.append(std::move(r));
  }

  ordered_json out = report.to_json();
  out["model"] = bundle.name;
  emit_json(out, opt.out_path);
  return report.any_fail() ? kExitDiagnostic : kExitOk;
}

// ------------------------------------------------------------------ main

void print_error(const std::string& code, const std::string& message) {
  ordered_json err;
  err["error"] = {{"code", code}, {"message", message}};
  std::cerr << err.dump() << "\n";
}

void print_error_at(const std::string& code, const std::string& message,
                    double t) {
  ordered_json err;
  err["error"] = {{"code", code}, {"message", message}, {"t", t}};
  std::cerr << err.dump() << "\n";
}

void add_common(CLI::App* cmd, CommonOptions& common) {
  cmd->configurable(true);  // enables [subcommand] sections in config files
  cmd->add_option("--model", common.model_name, "model name")->required();
  cmd->add_option("--param", common.params,
                  "model parameter as key=value (repeatable)");
  cmd->add_option("--tol", common.tolerance,
                  "bracket tolerance coefficient; width stop is "
                  "tol * (1 + |theta|)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weighted generalized psi-estimators: sign-change solver, "
               "monotone representation, diagnostics"};
  app.set_config("--config", "", "key = value config file; flags win")
      ->configurable(false);
  app.require_subcommand(1);

  EstimateOptions est;
  CLI::App* cmd_est = app.add_subcommand(
      "estimate", "solve the weighted estimator for a data file");
  add_common(cmd_est, est.common);
  cmd_est->add_option("--data", est.data_path, "CSV with column x")->required();
  CLI::Option* est_wcol =
      cmd_est->add_option("--weights-col", est.weights_col,
                          "weight column name (default w; absent means 1)");
  cmd_est->add_option("--out", est.out_path, "JSON report path (default stdout)");

  RepresentationOptions rep;
  CLI::App* cmd_rep = app.add_subcommand(
      "representation",
      "build envelopes, the weight p, and convexified loss tables");
  add_common(cmd_rep, rep.common);
  cmd_rep->add_option("--family", rep.family_arg,
                      "family observations: CSV path or inline v1,v2,...")
      ->required();
  cmd_rep->add_option("--grid", rep.grid_arg, "working grid as lo,hi,n");
  cmd_rep->add_option("--tau", rep.tau, "anchor with p(tau) = 1 "
                                        "(default grid midpoint)");
  cmd_rep->add_option("--data", rep.data_path,
                      "sample CSV (default: the family, unit weights)");
  CLI::Option* rep_wcol =
      cmd_rep->add_option("--weights-col", rep.weights_col,
                          "weight column name (default w; absent means 1)");
  cmd_rep->add_option("--out-dir", rep.out_dir, "output directory")->required();

  DiagnoseOptions diag;
  CLI::App* cmd_diag = app.add_subcommand(
      "diagnose", "run the model diagnostics and emit a JSON report");
  add_common(cmd_diag, diag.common);
  cmd_diag->add_option("--data", diag.data_path, "CSV with column x")
      ->required();
  CLI::Option* diag_wcol =
      cmd_diag->add_option("--weights-col", diag.weights_col,
                           "weight column name (default w; absent means 1)");
  cmd_diag->add_option("--pairs", diag.pairs,
                       "auto or i,j;k,l row index pairs");
  cmd_diag->add_option("--out", diag.out_path,
                       "JSON report path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    print_error("CONFIG_USAGE", e.what());
    return kExitConfig;
  }

  est.weights_col_explicit = est_wcol->count() > 0;
  rep.weights_col_explicit = rep_wcol->count() > 0;
  diag.weights_col_explicit = diag_wcol->count() > 0;

  try {
    if (cmd_est->parsed()) return cmd_estimate(est);
    if (cmd_rep->parsed()) return cmd_representation(rep);
    if (cmd_diag->parsed()) return cmd_diagnose(diag);
  } catch (const ConfigError& e) {
    print_error(e.code(), e.what());
    return kExitConfig;
  } catch (const RichnessViolated& e) {
    print_error_at(e.code(), e.what(), e.t);
    return kExitNumeric;
  } catch (const EnvelopeOrderViolated& e) {
    print_error_at(e.code(), e.what(), e.t);
    return kExitNumeric;
  } catch (const OutsideGridSpan& e) {
    print_error_at(e.code(), e.what(), e.t);
    return kExitNumeric;
  } catch (const Error& e) {
    print_error(e.code(), e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    print_error("INTERNAL", e.what());
    return kExitNumeric;
  }
  return kExitConfig;
}
