// Timing comparison of the serial reference kernels against the OpenMP
// variants, with a bitwise equality check on every result.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <vector>

#include "psikit/kernels.hpp"
#include "psikit/models.hpp"
#include "psikit/representation.hpp"

using namespace psikit;

namespace {

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(
             clock::now().time_since_epoch())
      .count();
}

template <class Fn>
double best_of(int reps, const Fn& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = now_ms();
    fn();
    best = std::min(best, now_ms() - t0);
  }
  return best;
}

void report(const char* name, double serial_ms, double parallel_ms,
            bool match) {
  std::printf("%-24s %10.2f ms %10.2f ms %7.2fx   %s\n", name, serial_ms,
              parallel_ms, serial_ms / parallel_ms, match ? "match" : "MISMATCH");
}

}  // namespace

int main() {
  std::printf("threads: %d (OpenMP %s)\n", max_threads(),
              openmp_enabled() ? "on" : "off");
  std::printf("%-24s %13s %13s %9s\n", "kernel", "serial", "parallel",
              "speedup");

  std::mt19937_64 gen(42);
  auto uniform = [&]() {
    return static_cast<double>(gen()) / 18446744073709551616.0 * 2.0 - 1.0;
  };

  {
    std::vector<double> v(1 << 24);
    for (double& x : v) x = uniform();
    double s_serial = 0.0, s_parallel = 0.0;
    const double t_serial =
        best_of(3, [&] { s_serial = pairwise_sum(v, Exec::Serial); });
    const double t_parallel =
        best_of(3, [&] { s_parallel = pairwise_sum(v, Exec::Parallel); });
    report("pairwise_sum 16M", t_serial, t_parallel,
           std::memcmp(&s_serial, &s_parallel, sizeof(double)) == 0);
  }

  {
    NormalVarianceModel nv;
    nv.m = 0.5;
    const RealPsiModel model = nv.model();
    std::vector<double> obs(256);
    for (double& x : obs) x = 0.5 + 3.0 * uniform();
    const std::vector<double> grid = make_uniform_grid(0.1, 20.0, 1 << 15);
    auto objective = [&](double t) {
      double acc = 0.0;
      for (double x : obs) acc += model.psi(x, t);
      return acc;
    };
    std::vector<double> out_serial, out_parallel;
    const double t_serial = best_of(
        3, [&] { out_serial = grid_map(grid, objective, Exec::Serial); });
    const double t_parallel = best_of(
        3, [&] { out_parallel = grid_map(grid, objective, Exec::Parallel); });
    report("psi-sum grid 32k x 256", t_serial, t_parallel,
           std::memcmp(out_serial.data(), out_parallel.data(),
                       out_serial.size() * sizeof(double)) == 0);
  }

  {
    NormalVarianceModel nv;
    const RealPsiModel model = nv.model();
    std::vector<double> family(1024);
    for (std::size_t i = 0; i < family.size(); ++i) {
      family[i] = 0.2 + 9.8 * (static_cast<double>(i) + 0.5) / 1024.0;
    }
    EnvelopeConfig cfg;
    cfg.family = family;
    cfg.grid = make_uniform_grid(0.1, 90.0, 4096);
    EnvelopeTable t_ser, t_par;
    set_default_exec(Exec::Serial);
    const double t_serial = best_of(3, [&] { t_ser = q_star_envelope(model, cfg); });
    set_default_exec(Exec::Parallel);
    const double t_parallel =
        best_of(3, [&] { t_par = q_star_envelope(model, cfg); });
    report("envelope 4k x 1k", t_serial, t_parallel,
           std::memcmp(t_ser.q_lower.data(), t_par.q_lower.data(),
                       t_ser.q_lower.size() * sizeof(double)) == 0 &&
               std::memcmp(t_ser.q_upper.data(), t_par.q_upper.data(),
                           t_ser.q_upper.size() * sizeof(double)) == 0);
  }

  {
    NormalVarianceModel nv;
    ConvexifiedLoss loss;
    loss.model = nv.model();
    const std::vector<double> grid = make_uniform_grid(0.25, 16.0, 4096);
    loss.weight =
        build_monotone_weight([&](double s) { return nv.q_star(s); }, grid, 1.0);
    std::vector<double> r_ser, r_par;
    set_default_exec(Exec::Serial);
    const double t_serial =
        best_of(3, [&] { r_ser = convexified_loss_table(loss, 2.0, grid); });
    set_default_exec(Exec::Parallel);
    const double t_parallel =
        best_of(3, [&] { r_par = convexified_loss_table(loss, 2.0, grid); });
    report("rho* table 4k cells", t_serial, t_parallel,
           std::memcmp(r_ser.data(), r_par.data(),
                       r_ser.size() * sizeof(double)) == 0);
  }

  set_default_exec(Exec::Parallel);
  return 0;
}
