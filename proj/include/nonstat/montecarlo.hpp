#ifndef NONSTAT_MONTECARLO_HPP
#define NONSTAT_MONTECARLO_HPP

#include <functional>

#include "nonstat/grid.hpp"

namespace nonstat {

// Streaming per-mode accumulation (Welford) over complex arrays. Merging is
// always done in realization order, so results are identical regardless of
// how many workers produced the realizations.
class WelfordArray {
 public:
  void init(std::size_t size);
  void add(const cvec& x);
  std::size_t count() const { return count_; }
  const cvec& mean() const { return mean_; }
  rvec variance() const;  // per-mode |x - mean|^2 / (count - 1)

 private:
  std::size_t count_ = 0;
  cvec mean_;
  rvec m2_;
};

// Runs make(i) for i in [0,M), possibly on several workers, and feeds the
// results to consume(i, value) strictly in index order. Each realization must
// derive all randomness from its index (see substream_seed) so the output is
// byte-identical for any worker count.
void monte_carlo_stream(std::size_t M, int workers, const std::function<cvec(std::size_t)>& make,
                        const std::function<void(std::size_t, const cvec&)>& consume);

}  // namespace nonstat

#endif
