#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace cg {

/// 95% two-sided normal quantile used for every reported half-width.
inline constexpr double kZ95 = 1.96;

/// Standard normal quantile, Phi^{-1}(p) for 0 < p < 1.
double normal_quantile(double p);

struct MeanEstimate {
    double mean = 0.0;
    double half_width = 0.0; ///< 1.96 * standard error
    std::size_t samples = 0;
};

/// Pairwise (cascade) summation; result independent of thread schedule since
/// callers always sum index-ordered buffers.
double pairwise_sum(std::span<const double> values);

/// Mean and 1.96*sd/sqrt(n) for independent samples.
MeanEstimate independent_mean(std::span<const double> values);

/// Batch-means estimate for a correlated series: the series is cut into
/// `batches` contiguous blocks (trailing remainder dropped) and the block means
/// are treated as independent.
MeanEstimate batch_means(std::span<const double> series, std::size_t batches = 32);

/// Streaming batch-means accumulator with a fixed block length.
class BatchAccumulator {
public:
    explicit BatchAccumulator(std::size_t batch_size);

    void add(double value);
    /// Block means of all completed blocks.
    const std::vector<double>& batch_means() const { return means_; }
    std::size_t count() const { return count_; }
    MeanEstimate estimate() const { return independent_mean(means_); }

private:
    std::size_t batch_size_;
    std::size_t in_batch_ = 0;
    std::size_t count_ = 0;
    double running_ = 0.0;
    std::vector<double> means_;
};

/// Runs body(i) for i in [0, n) on `workers` threads (0 = hardware default).
/// Each index is executed exactly once; callers write results by index.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body);

} // namespace cg
