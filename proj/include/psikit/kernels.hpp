#pragma once

#include <functional>
#include <span>
#include <vector>

namespace psikit {

// Execution policy for the grid kernels. Parallel variants use OpenMP when
// the build enables it and are bit-identical to Serial: elementwise maps do
// the same per-element arithmetic, and sums always follow the same fixed
// pairwise tree regardless of thread count.
enum class Exec { Serial, Parallel };

Exec default_exec() noexcept;
void set_default_exec(Exec e) noexcept;

bool openmp_enabled() noexcept;
int max_threads() noexcept;

// Pairwise sum with a reduction tree that depends only on v.size().
double pairwise_sum(std::span<const double> v);
double pairwise_sum(std::span<const double> v, Exec exec);

// fn(i) for i in [0, n); iterations must be independent. If iterations
// throw, the exception from the lowest throwing index is rethrown.
void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn,
                    Exec exec);

// out[i] = f(t[i]).
void grid_map(std::span<const double> t, const std::function<double(double)>& f,
              std::span<double> out, Exec exec);
std::vector<double> grid_map(std::span<const double> t,
                             const std::function<double(double)>& f);
std::vector<double> grid_map(std::span<const double> t,
                             const std::function<double(double)>& f, Exec exec);

}  // namespace psikit
