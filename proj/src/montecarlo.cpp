#include "nonstat/montecarlo.hpp"

#include <thread>
#include <vector>

namespace nonstat {

void WelfordArray::init(std::size_t size) {
  count_ = 0;
  mean_.assign(size, cplx(0, 0));
  m2_.assign(size, 0.0);
}

void WelfordArray::add(const cvec& x) {
  ++count_;
  const double inv = 1.0 / static_cast<double>(count_);
  for (std::size_t i = 0; i < mean_.size(); ++i) {
    cplx delta = x[i] - mean_[i];
    mean_[i] += delta * inv;
    m2_[i] += (std::conj(delta) * (x[i] - mean_[i])).real();
  }
}

rvec WelfordArray::variance() const {
  rvec out(m2_.size(), 0.0);
  if (count_ < 2) return out;
  const double inv = 1.0 / static_cast<double>(count_ - 1);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = m2_[i] * inv;
  return out;
}

void monte_carlo_stream(std::size_t M, int workers, const std::function<cvec(std::size_t)>& make,
                        const std::function<void(std::size_t, const cvec&)>& consume) {
  if (workers <= 1) {
    for (std::size_t i = 0; i < M; ++i) consume(i, make(i));
    return;
  }
  // rounds of `workers` slots; consumption stays in index order
  const std::size_t round = static_cast<std::size_t>(workers);
  std::vector<cvec> slots(round);
  for (std::size_t base = 0; base < M; base += round) {
    std::size_t hi = std::min(M, base + round);
    std::vector<std::thread> pool;
    for (std::size_t i = base; i < hi; ++i)
      pool.emplace_back([&, i] { slots[i - base] = make(i); });
    for (auto& t : pool) t.join();
    for (std::size_t i = base; i < hi; ++i) consume(i, slots[i - base]);
  }
}

}  // namespace nonstat
