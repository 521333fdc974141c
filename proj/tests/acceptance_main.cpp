// Acceptance suite: exercises the full pipeline end to end and prints one
// pass/fail line per criterion. Exit code is the number of failures.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "psikit/diagnostics.hpp"
#include "psikit/models.hpp"
#include "psikit/representation.hpp"
#include "psikit/solve.hpp"

namespace fs = std::filesystem;
using namespace psikit;

namespace {

int failures = 0;

void criterion(int num, const char* label,
               const std::function<bool(std::string&)>& body) {
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    ok = false;
    detail = e.what();
  }
  std::printf("[%s] criterion %d: %s%s%s\n", ok ? "PASS" : "FAIL", num, label,
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double uni(std::mt19937& gen, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(gen()) / 4294967296.0);
}

RealWeightedSample random_sample(std::mt19937& gen, double m, std::size_t max_n,
                                 double min_dev) {
  RealWeightedSample s;
  const std::size_t n = 1 + gen() % max_n;
  bool positive = false;
  for (std::size_t i = 0; i < n; ++i) {
    double x = uni(gen, m - 10.0, m + 10.0);
    while (std::abs(x - m) < min_dev) x = uni(gen, m - 10.0, m + 10.0);
    s.observations.push_back(x);
    const double w = uni(gen, 0.0, 5.0);
    s.weights.push_back(w);
    positive = positive || w > 0.0;
  }
  if (!positive) s.weights[0] = 1.0;
  return s;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// --- criterion 8 helpers -------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, const std::string& env,
            const fs::path& out, const fs::path& err) {
  std::string cmd = env.empty() ? "" : env + " ";
  cmd += std::string(PSIKIT_CLI_PATH) + " " + args + " >" + out.string() +
         " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

int main() {
  criterion(1, "estimator matches the weighted closed-form oracle",
            [](std::string& detail) {
    SolveOptions opts;
    std::mt19937 gen(101);
    double worst = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
      NormalVarianceModel nv;
      nv.m = uni(gen, -5.0, 5.0);
      const RealWeightedSample s = random_sample(gen, nv.m, 100, 0.0);
      const double oracle = weighted_mle_oracle(nv, s);
      const double est = estimate(nv.model(), s, opts).theta;
      const double err = std::abs(est - oracle) / (1.0 + std::abs(oracle));
      worst = std::max(worst, err);
      if (err > 1e-8) {
        detail = "sample " + std::to_string(rep) + " error " + fmt(err);
        return false;
      }
    }
    detail = "200 samples, worst scaled error " + fmt(worst);
    return true;
  });

  criterion(2, "monotone weight reproduces the closed-form p",
            [](std::string& detail) {
    double worst = 0.0;
    for (double sigma0_sq : {1.0, 3.0}) {
      NormalVarianceModel nv;
      nv.sigma0_sq = sigma0_sq;
      const std::vector<double> grid =
          make_uniform_grid(0.25 * sigma0_sq, 4.0 * sigma0_sq, 512);
      const MonotoneWeight w = build_monotone_weight(
          [&](double s) { return nv.q_star(s); }, grid, sigma0_sq);
      if (w.p_at(sigma0_sq) != 1.0) {
        detail = "p(tau) != 1";
        return false;
      }
      for (double t : grid) {
        const double rel = std::abs(w.p_at(t) - nv.p(t)) / nv.p(t);
        worst = std::max(worst, rel);
        if (rel > 1e-6) {
          detail = "relative error " + fmt(rel) + " at t = " + fmt(t);
          return false;
        }
      }
    }
    detail = "512-point grids, worst relative error " + fmt(worst);
    return true;
  });

  criterion(3, "quasi-convex and convexified objectives share the minimizer",
            [](std::string& detail) {
    std::mt19937 gen(303);
    MinimizeOptions mopts;
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
      NormalVarianceModel nv;
      nv.m = uni(gen, -5.0, 5.0);
      // Observations kept away from m so every theta1 stays well inside
      // (0, inf) and the working span stays bounded.
      const RealWeightedSample s = random_sample(gen, nv.m, 30, 0.5);

      double th_min = 1e300, th_max = 0.0;
      for (double x : s.observations) {
        th_min = std::min(th_min, nv.theta1(x));
        th_max = std::max(th_max, nv.theta1(x));
      }
      const double lo = 0.5 * th_min;
      const double hi = 1.5 * th_max + 0.5;
      const std::vector<double> grid = make_log_grid(lo, hi, 2048);

      ConvexifiedLoss loss;
      loss.model = nv.model();
      loss.weight = build_monotone_weight(
          [&](double t) { return nv.q_star(t); }, grid, grid[grid.size() / 2]);

      auto sum_rho_star = [&](double t) {
        double acc = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
          acc += s.weights[i] * convexified_loss(loss, s.observations[i], t);
        }
        return acc;
      };
      auto sum_nll = [&](double t) {
        double acc = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
          acc += s.weights[i] * nv.nll(s.observations[i], t);
        }
        return acc;
      };

      const double est = estimate(nv.model(), s).theta;
      MinimizeOptions near = mopts;
      near.initial_probe = grid[grid.size() / 3];
      const double arg_star =
          argmin_objective(sum_rho_star, ParamInterval(lo, hi), near);
      const double arg_nll =
          argmin_objective(sum_nll, ParamInterval::positive_half_line(), mopts);

      const double tol = 2.0 * mopts.tolerance * (1.0 + std::abs(est));
      const double spread = std::max({std::abs(arg_star - est),
                                      std::abs(arg_nll - est),
                                      std::abs(arg_star - arg_nll)});
      worst = std::max(worst, spread / (1.0 + std::abs(est)));
      if (spread > tol) {
        detail = "sample " + std::to_string(rep) + " spread " + fmt(spread) +
                 " > " + fmt(tol);
        return false;
      }

      // Convexity of the tabulated loss for a few observations.
      const std::vector<double> convexity_grid = make_uniform_grid(lo, hi, 257);
      const std::size_t n_check = std::min<std::size_t>(s.size(), 5);
      for (std::size_t i = 0; i < n_check; ++i) {
        const std::vector<double> rho =
            convexified_loss_table(loss, s.observations[i], convexity_grid);
        double scale = 0.0;
        for (double v : rho) scale = std::max(scale, std::abs(v));
        for (std::size_t k = 1; k + 1 < rho.size(); ++k) {
          const double dd = rho[k + 1] - 2.0 * rho[k] + rho[k - 1];
          if (dd < -1e-8 * (1.0 + scale)) {
            detail = "nonconvex second difference " + fmt(dd) + " at t = " +
                     fmt(convexity_grid[k]);
            return false;
          }
        }
      }
    }
    detail = "50 samples, worst scaled argmin spread " + fmt(worst);
    return true;
  });

  criterion(4, "numerical rho* matches its closed form",
            [](std::string& detail) {
    double worst = 0.0;
    for (double sigma0_sq : {1.0, 2.0}) {
      NormalVarianceModel nv;
      nv.m = 1.0;
      nv.sigma0_sq = sigma0_sq;
      ConvexifiedLoss loss;
      loss.model = nv.model();
      // Log spacing keeps the piecewise-linear log p uniformly accurate:
      // its exact antiderivative is linear in log t for q = -2/t.
      const std::vector<double> grid = make_log_grid(0.3, 14.0, 8193);
      loss.weight = build_monotone_weight(
          [&](double t) { return nv.q_star(t); }, grid, sigma0_sq);

      const double x = 3.0;  // theta1 = 4
      int probes = 0;
      for (int i = 0; probes < 100 && i < 400; ++i) {
        const double t = 0.35 + (13.6 - 0.35) * i / 399.0;
        if (std::abs(t - 4.0) < 0.5) continue;  // away from the vertex
        ++probes;
        const double expected = nv.rho_star(x, t);
        const double got = convexified_loss(loss, x, t);
        const double rel = std::abs(got - expected) / expected;
        worst = std::max(worst, rel);
        if (rel > 1e-6) {
          detail = "relative error " + fmt(rel) + " at t = " + fmt(t);
          return false;
        }
      }
      if (probes < 100) {
        detail = "probe layout bug";
        return false;
      }
    }
    detail = "100 probes per config, worst relative error " + fmt(worst);
    return true;
  });

  criterion(5, "family envelopes tighten toward the closed-form q",
            [](std::string& detail) {
    NormalVarianceModel nv;  // m = 0
    const RealPsiModel model = nv.model();

    // Exact one-sided value for the 3-point family {2, 4, 8} at t = 1.
    {
      EnvelopeConfig cfg;
      cfg.family = {std::sqrt(2.0), 2.0, std::sqrt(8.0)};
      cfg.grid = {0.9, 1.0, 1.1};
      const EnvelopeTable t = q_star_envelope(model, cfg);
      const double expected = -2.0 - 1.0 / 7.0;
      if (std::abs(t.q_lower[1] - expected) > 1e-12) {
        detail = "3-point q_lower off by " +
                 fmt(std::abs(t.q_lower[1] - expected));
        return false;
      }
    }

    // Nested families of sizes 4, 16, 64 spreading over the ray.
    auto family_theta1 = [](std::size_t size) {
      std::vector<double> th1;
      const double lo = 0.5 / static_cast<double>(size / 4);
      const double hi = 4.0 * static_cast<double>(size / 4);
      for (std::size_t i = 0; i < size; ++i) {
        const double u = (static_cast<double>(i) + 0.5) / size;
        th1.push_back(lo * std::pow(hi / lo, u));
      }
      return th1;
    };
    auto to_family = [](const std::vector<double>& th1) {
      std::vector<double> z;
      for (double v : th1) z.push_back(std::sqrt(v));
      return z;
    };
    std::vector<double> f4 = family_theta1(4);
    std::vector<double> f16 = f4, f64;
    for (double v : family_theta1(16)) f16.push_back(v);
    f64 = f16;
    for (double v : family_theta1(64)) f64.push_back(v);

    // Gap grid strictly inside the smallest family's theta1 range.
    const double lo4 = *std::min_element(f4.begin(), f4.end());
    const double hi4 = *std::max_element(f4.begin(), f4.end());
    EnvelopeConfig cfg;
    cfg.grid = make_uniform_grid(lo4 + 0.1 * (hi4 - lo4),
                                 hi4 - 0.1 * (hi4 - lo4), 64);

    std::vector<std::vector<double>> gaps;
    for (const auto& th1s : {f4, f16, f64}) {
      cfg.family = to_family(th1s);
      const EnvelopeTable t = q_star_envelope(model, cfg);
      for (std::size_t i = 0; i < t.gap.size(); ++i) {
        if (std::isnan(t.gap[i]) || t.gap[i] < 0.0) {
          detail = "gap undefined or negative at t = " + fmt(t.t[i]);
          return false;
        }
      }
      gaps.push_back(t.gap);
    }
    for (std::size_t level = 1; level < gaps.size(); ++level) {
      for (std::size_t i = 0; i < gaps[level].size(); ++i) {
        if (gaps[level][i] > gaps[level - 1][i] + 1e-12) {
          detail = "gap grew with the family at grid index " +
                   std::to_string(i);
          return false;
        }
      }
    }
    detail = "gap max shrank " + fmt(*std::max_element(gaps[0].begin(),
                                                       gaps[0].end())) +
             " -> " + fmt(*std::max_element(gaps[2].begin(), gaps[2].end()));
    return true;
  });

  criterion(6, "monotonicity diagnostics pass; the counterexample fails",
            [](std::string& detail) {
    NormalVarianceModel nv;  // m = 0
    const RealPsiModel model = nv.model();
    const std::vector<double> family = {std::sqrt(0.5), 1.0, std::sqrt(2.0),
                                        2.0};
    // Strict comparison monotonicity for every ordered family pair.
    for (std::size_t i = 0; i < family.size(); ++i) {
      for (std::size_t j = i + 1; j < family.size(); ++j) {
        const CheckResult r =
            check_comparison_monotone(model, family[i], family[j]);
        if (r.verdict != Verdict::Pass || !r.warning.empty()) {
          detail = "pair (" + fmt(family[i]) + ", " + fmt(family[j]) +
                   ") verdict " + to_string(r.verdict);
          return false;
        }
      }
    }

    // Decreasing products under the exact weight.
    const std::vector<double> grid = make_uniform_grid(0.25, 6.0, 513);
    const MonotoneWeight w = build_monotone_weight(
        [&](double s) { return nv.q_star(s); }, grid, 1.0);
    for (double z : family) {
      const CheckResult r = check_decreasing_product(model, w, z, grid);
      if (r.verdict != Verdict::Pass) {
        detail = "product check failed for z = " + fmt(z);
        return false;
      }
    }

    // The wiggle fixture fails with a reproducible witness.
    WiggleLocationModel wig;
    const RealPsiModel bad = wig.model();
    const CheckResult a = check_comparison_monotone(bad, 0.0, 3.0);
    const CheckResult b = check_comparison_monotone(bad, 0.0, 3.0);
    if (a.verdict != Verdict::Fail || !a.witness || !b.witness) {
      detail = "counterexample did not fail";
      return false;
    }
    if (std::memcmp(&a.witness->t, &b.witness->t, sizeof(double)) != 0 ||
        a.witness->values != b.witness->values) {
      detail = "witness not reproducible";
      return false;
    }
    const double v0 = -bad.psi(0.0, a.witness->t) / bad.psi(3.0, a.witness->t);
    const double v1 = -bad.psi(0.0, *a.witness->s) / bad.psi(3.0, *a.witness->s);
    if (!(v1 < v0)) {
      detail = "witness does not reproduce the violation";
      return false;
    }
    detail = "witness at t = " + fmt(a.witness->t);
    return true;
  });

  criterion(7, "permutation, scaling and replication invariances",
            [](std::string& detail) {
    SolveOptions opts;
    std::mt19937 gen(707);
    NormalVarianceModel nv;
    nv.m = 0.5;
    LocationModel loc;
    const RealPsiModel models[] = {nv.model(), loc.model()};

    for (int rep = 0; rep < 100; ++rep) {
      const RealPsiModel& model = models[rep % 2];
      RealWeightedSample s;
      const std::size_t n = 1 + gen() % 16;
      for (std::size_t i = 0; i < n; ++i) {
        s.observations.push_back(uni(gen, -7.0, 8.0));
        s.weights.push_back(uni(gen, 0.05, 5.0));
      }
      const double base = estimate(model, s, opts).theta;
      const double tol2 = 2.0 * opts.tolerance * (1.0 + std::abs(base));

      RealWeightedSample sp = s;
      std::vector<std::size_t> perm(n);
      for (std::size_t i = 0; i < n; ++i) perm[i] = i;
      std::shuffle(perm.begin(), perm.end(), gen);
      for (std::size_t i = 0; i < n; ++i) {
        sp.observations[i] = s.observations[perm[i]];
        sp.weights[i] = s.weights[perm[i]];
      }
      if (std::abs(estimate(model, sp, opts).theta - base) > tol2) {
        detail = "permutation break at rep " + std::to_string(rep);
        return false;
      }

      RealWeightedSample sc = s;
      const double c = uni(gen, 0.1, 100.0);
      for (double& w : sc.weights) w *= c;
      if (std::abs(estimate(model, sc, opts).theta - base) > tol2) {
        detail = "scaling break at rep " + std::to_string(rep);
        return false;
      }

      const double x = s.observations[0];
      const double t1 = theta1(model, x, opts).theta;
      RealWeightedSample sr;
      sr.observations.assign(1 + gen() % 10, x);
      sr.weights.assign(sr.observations.size(), 1.0);
      if (std::abs(estimate(model, sr, opts).theta - t1) >
          2.0 * opts.tolerance * (1.0 + std::abs(t1))) {
        detail = "replication break at rep " + std::to_string(rep);
        return false;
      }
    }
    detail = "100 cases per invariance";
    return true;
  });

  criterion(8, "CLI outputs are byte-identical across runs and threads",
            [](std::string& detail) {
    const fs::path dir = fs::temp_directory_path() / "psikit_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path data = dir / "data.csv";
    {
      std::ofstream out(data, std::ios::binary);
      out << "x,w\n0.8,1\n1.5,2\n2.5,1\n3.5,0.5\n";
    }
    const fs::path sink_out = dir / "run.out";
    const fs::path sink_err = dir / "run.err";

    struct Variant {
      const char* env;
      fs::path out_dir;
    };
    const Variant variants[] = {{"OMP_NUM_THREADS=1", dir / "t1"},
                                {"OMP_NUM_THREADS=4", dir / "t4"},
                                {"OMP_NUM_THREADS=4", dir / "t4b"}};
    for (const Variant& v : variants) {
      const std::string rep_args =
          "representation --model normal_variance --param m=0 "
          "--family 0.8,1.5,2.5,3.5 --grid 0.4,15,256 --tau 2 --data " +
          data.string() + " --out-dir " + v.out_dir.string();
      if (run_cli(rep_args, v.env, sink_out, sink_err) != 0) {
        detail = "representation run failed under " + std::string(v.env);
        return false;
      }
      const std::string est_args =
          "estimate --model normal_variance --param m=0 --data " +
          data.string() + " --out " + (v.out_dir / "estimate.json").string();
      if (run_cli(est_args, v.env, sink_out, sink_err) != 0) {
        detail = "estimate run failed";
        return false;
      }
      const std::string diag_args =
          "diagnose --model normal_variance --param m=0 --data " +
          data.string() + " --out " + (v.out_dir / "diagnose.json").string();
      if (run_cli(diag_args, v.env, sink_out, sink_err) != 0) {
        detail = "diagnose run failed";
        return false;
      }
    }
    const char* names[] = {"envelope.csv",     "weight.csv",
                           "summary.json",     "rho_star_000.csv",
                           "rho_star_003.csv", "estimate.json",
                           "diagnose.json"};
    for (const char* name : names) {
      const std::string a = slurp(variants[0].out_dir / name);
      const std::string b = slurp(variants[1].out_dir / name);
      const std::string c = slurp(variants[2].out_dir / name);
      if (a.empty() || a != b || b != c) {
        detail = std::string("byte mismatch in ") + name;
        return false;
      }
    }
    detail = "3 runs x 7 files identical";
    return true;
  });

  std::printf("%s: %d criterion(s) failed\n",
              failures == 0 ? "ACCEPTANCE OK" : "ACCEPTANCE FAILED", failures);
  return failures;
}
