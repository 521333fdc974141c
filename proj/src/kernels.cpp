#include "psikit/kernels.hpp"

#include <atomic>
#include <cstddef>

#ifdef PSIKIT_HAVE_OPENMP
#include <omp.h>
#endif

namespace psikit {

namespace {

std::atomic<Exec> g_default_exec{Exec::Parallel};

constexpr std::size_t kLeafSize = 32;
constexpr std::size_t kParallelCutoff = 4096;

// Serial fixed-tree pairwise sum: split at n/2 down to kLeafSize leaves.
double sum_tree(const double* v, std::size_t n) {
  if (n <= kLeafSize) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return sum_tree(v, h) + sum_tree(v + h, n - h);
}

#ifdef PSIKIT_HAVE_OPENMP
// Same tree as sum_tree; the top `depth` levels run as tasks. The splits
// depend only on n, so the float additions match the serial tree exactly.
double sum_tree_tasks(const double* v, std::size_t n, int depth) {
  if (depth <= 0 || n <= kLeafSize) return sum_tree(v, n);
  const std::size_t h = n / 2;
  double left = 0.0, right = 0.0;
#pragma omp task shared(left) firstprivate(v, h, depth)
  left = sum_tree_tasks(v, h, depth - 1);
  right = sum_tree_tasks(v + h, n - h, depth - 1);
#pragma omp taskwait
  return left + right;
}
#endif

}  // namespace

Exec default_exec() noexcept { return g_default_exec.load(std::memory_order_relaxed); }

void set_default_exec(Exec e) noexcept {
  g_default_exec.store(e, std::memory_order_relaxed);
}

bool openmp_enabled() noexcept {
#ifdef PSIKIT_HAVE_OPENMP
  return true;
#else
  return false;
#endif
}

int max_threads() noexcept {
#ifdef PSIKIT_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

double pairwise_sum(std::span<const double> v) {
  return pairwise_sum(v, default_exec());
}

double pairwise_sum(std::span<const double> v, Exec exec) {
#ifdef PSIKIT_HAVE_OPENMP
  if (exec == Exec::Parallel && v.size() >= kParallelCutoff) {
    double total = 0.0;
#pragma omp parallel
    {
#pragma omp single nowait
      total = sum_tree_tasks(v.data(), v.size(), 6);
    }
    return total;
  }
#else
  (void)exec;
#endif
  return sum_tree(v.data(), v.size());
}

void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn,
                    Exec exec) {
  const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(n);
#ifdef PSIKIT_HAVE_OPENMP
  if (exec == Exec::Parallel && count > 16) {
    // Exceptions cannot cross the omp region; keep the one with the lowest
    // index so the reported failure matches the serial path.
    std::exception_ptr pending = nullptr;
    std::size_t first_bad = static_cast<std::size_t>(-1);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      try {
        fn(static_cast<std::size_t>(i));
      } catch (...) {
#pragma omp critical(psikit_for_each_index_error)
        {
          if (static_cast<std::size_t>(i) < first_bad) {
            first_bad = static_cast<std::size_t>(i);
            pending = std::current_exception();
          }
        }
      }
    }
    if (pending) std::rethrow_exception(pending);
    return;
  }
#else
  (void)exec;
#endif
  for (std::ptrdiff_t i = 0; i < count; ++i) fn(static_cast<std::size_t>(i));
}

void grid_map(std::span<const double> t, const std::function<double(double)>& f,
              std::span<double> out, Exec exec) {
  for_each_index(
      t.size(), [&](std::size_t i) { out[i] = f(t[i]); }, exec);
}

std::vector<double> grid_map(std::span<const double> t,
                             const std::function<double(double)>& f) {
  return grid_map(t, f, default_exec());
}

std::vector<double> grid_map(std::span<const double> t,
                             const std::function<double(double)>& f, Exec exec) {
  std::vector<double> out(t.size());
  grid_map(t, f, out, exec);
  return out;
}

}  // namespace psikit
