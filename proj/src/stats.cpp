#include "cg/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace cg {

double normal_quantile(double p)
{
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal quantile needs 0 < p < 1");
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 200 && hi - lo > 1e-14; ++i) {
        const double mid = 0.5 * (lo + hi);
        (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double pairwise_sum(std::span<const double> values)
{
    if (values.size() <= 16) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

MeanEstimate independent_mean(std::span<const double> values)
{
    MeanEstimate out;
    out.samples = values.size();
    if (values.empty()) return out;
    out.mean = pairwise_sum(values) / static_cast<double>(values.size());
    if (values.size() < 2) return out;
    std::vector<double> sq(values.size());
    std::transform(values.begin(), values.end(), sq.begin(),
                   [m = out.mean](double v) { return (v - m) * (v - m); });
    const double var = pairwise_sum(sq) / static_cast<double>(values.size() - 1);
    out.half_width = kZ95 * std::sqrt(var / static_cast<double>(values.size()));
    return out;
}

MeanEstimate batch_means(std::span<const double> series, std::size_t batches)
{
    batches = std::max<std::size_t>(2, std::min(batches, series.size()));
    const std::size_t len = series.size() / batches;
    std::vector<double> means(batches);
    for (std::size_t b = 0; b < batches; ++b)
        means[b] = pairwise_sum(series.subspan(b * len, len)) / static_cast<double>(len);
    MeanEstimate est = independent_mean(means);
    est.samples = len * batches;
    return est;
}

BatchAccumulator::BatchAccumulator(std::size_t batch_size) : batch_size_(std::max<std::size_t>(1, batch_size)) {}

void BatchAccumulator::add(double value)
{
    running_ += value;
    ++count_;
    if (++in_batch_ == batch_size_) {
        means_.push_back(running_ / static_cast<double>(batch_size_));
        running_ = 0.0;
        in_batch_ = 0;
    }
}

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body)
{
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = n;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

} // namespace cg
