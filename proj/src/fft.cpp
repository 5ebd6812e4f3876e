#include "pbr/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <mutex>
#include <tuple>

namespace pbr::fft {
namespace {

struct Plan {
  fftw_plan handle = nullptr;
  int in_alignment = 0;
  int out_alignment = 0;
};

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan.handle);
  }

  // Returns a plan for `count` transforms of length n. A single transform is
  // contiguous; a batch reads interleaved phases (stride `count`) and writes
  // each result contiguously. In-place plans are distinct in FFTW.
  const Plan& get(std::size_t n, std::size_t count, int sign, bool inplace) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(n, count, sign, inplace);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    const std::size_t total = n * count;
    auto* a = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * total));
    auto* b = inplace ? a : static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * total));
    Plan plan;
    if (count == 1) {
      plan.handle = fftw_plan_dft_1d(static_cast<int>(n), a, b, sign, FFTW_ESTIMATE);
    } else {
      const int len = static_cast<int>(n);
      const int howmany = static_cast<int>(count);
      plan.handle = fftw_plan_many_dft(1, &len, howmany, a, nullptr, howmany, 1, b, nullptr, 1, len,
                                       sign, FFTW_ESTIMATE);
    }
    plan.in_alignment = fftw_alignment_of(reinterpret_cast<double*>(a));
    plan.out_alignment = fftw_alignment_of(reinterpret_cast<double*>(b));
    if (!inplace) fftw_free(b);
    fftw_free(a);
    return plans_.emplace(key, plan).first->second;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<std::size_t, std::size_t, int, bool>, Plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

void execute(std::span<const cd> in, std::span<cd> out, std::size_t count, int sign) {
  if (in.size() != out.size()) throw std::invalid_argument("fft: input/output length mismatch");
  const std::size_t n = in.size();
  if (n == 0) return;

  const bool inplace = static_cast<const void*>(in.data()) == static_cast<void*>(out.data());
  const Plan& plan = cache().get(n / count, count, sign, inplace);

  auto* src = reinterpret_cast<fftw_complex*>(const_cast<cd*>(in.data()));
  auto* dst = reinterpret_cast<fftw_complex*>(out.data());
  const bool aligned =
      fftw_alignment_of(reinterpret_cast<double*>(src)) == plan.in_alignment &&
      fftw_alignment_of(reinterpret_cast<double*>(dst)) == plan.out_alignment;
  if (aligned) {
    fftw_execute_dft(plan.handle, src, dst);
    return;
  }

  // Misaligned caller buffers: bounce through FFTW-aligned scratch.
  auto* scratch = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
  std::memcpy(scratch, src, sizeof(fftw_complex) * n);
  if (inplace) {
    fftw_execute_dft(plan.handle, scratch, scratch);
    std::memcpy(dst, scratch, sizeof(fftw_complex) * n);
  } else {
    auto* result = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    fftw_execute_dft(plan.handle, scratch, result);
    std::memcpy(dst, result, sizeof(fftw_complex) * n);
    fftw_free(result);
  }
  fftw_free(scratch);
}

}  // namespace

void forward(std::span<const cd> in, std::span<cd> out) { execute(in, out, 1, FFTW_FORWARD); }

void inverse(std::span<const cd> in, std::span<cd> out) { execute(in, out, 1, FFTW_BACKWARD); }

void forward_interleaved(std::span<const cd> in, std::span<cd> out, std::size_t count) {
  if (count == 0 || in.size() % count != 0) {
    throw std::invalid_argument("fft: batch count must divide the input length");
  }
  if (static_cast<const void*>(in.data()) == static_cast<void*>(out.data())) {
    throw std::invalid_argument("fft: interleaved batches must run out of place");
  }
  execute(in, out, count, FFTW_FORWARD);
}

std::size_t next_fast_size(std::size_t n) {
  if (n <= 1) return 1;
  // Large transforms run markedly faster with a few factors of two.
  const std::size_t twos = n >= 1024 ? 32 : 1;
  for (std::size_t m = (n + twos - 1) / twos * twos;; m += twos) {
    std::size_t r = m;
    for (std::size_t p : {2u, 3u, 5u, 7u}) {
      while (r % p == 0) r /= p;
    }
    if (r == 1) return m;
  }
}

}  // namespace pbr::fft
