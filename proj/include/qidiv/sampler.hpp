#pragma once

#include "analysis.hpp"
#include "exactnum.hpp"
#include "params.hpp"
#include "specfun.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace qidiv {

// SplitMix64 (Steele, Lea, Flood 2014). Sample i of a batch with seed s reads the stream
// started at state mix(s ^ mix(i + golden)), so output does not depend on the worker count.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t state) : state_(state) {}

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static SplitMix64 stream(std::uint64_t seed, std::uint64_t index) {
        return SplitMix64(mix(seed ^ mix(index + 0x9E3779B97F4A7C15ULL)));
    }

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    // uniform on [0, 1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    // uniform on (0, 1]
    double uniform_open0() { return 1.0 - uniform(); }

private:
    std::uint64_t state_;
};

enum class SampleSource { Rho, Series, AR1, Integral };

inline const char* to_string(SampleSource s) {
    switch (s) {
        case SampleSource::Rho: return "rho";
        case SampleSource::Series: return "series";
        case SampleSource::AR1: return "ar1";
        case SampleSource::Integral: return "integral";
    }
    return "?";
}

struct SampleBatch {
    std::vector<double> values;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    double truncation_error = 0;
    SampleSource source = SampleSource::Series;
};

class HorizonTooSmall : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

struct DrawConstants {
    double q, log_q, shift_prob, shift, inv_c, c;
};

inline DrawConstants draw_constants(const ModelParams& prm) {
    DrawConstants d;
    d.q = static_cast<double>(to_long_double(prm.q));
    d.log_q = sgn(prm.q) > 0 ? static_cast<double>(log_abs(prm.q)) : 0;
    d.shift_prob = static_cast<double>(to_long_double(mpq_class(prm.r / (prm.p + prm.r))));
    d.shift = static_cast<double>(c_pow(prm.c, -prm.k));
    d.c = static_cast<double>(c_value(prm.c));
    d.inv_c = 1 / d.c;
    return d;
}

// P(G >= m) = q^m by inversion.
inline double geometric(SplitMix64& g, const DrawConstants& d) {
    if (d.q == 0) return 0;
    return std::floor(std::log(g.uniform_open0()) / d.log_q);
}

inline double rho_draw(SplitMix64& g, const DrawConstants& d) {
    double m = geometric(g, d);
    return g.uniform() < d.shift_prob ? m + d.shift : m;
}

// E W for W ~ rho^(k): (q + r c^{-k}) / (1 - q)
inline long double rho_mean(const ModelParams& prm) {
    long double q = to_long_double(prm.q), r = to_long_double(prm.r);
    return (q + r * c_pow(prm.c, -prm.k)) / (1 - q);
}

template <class Fn>
void parallel_fill(std::vector<double>& out, unsigned workers, Fn draw) {
    const std::size_t n = out.size();
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, n / 1024))));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = draw(i);
        return;
    }
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) out[i] = draw(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace detail

inline SampleBatch sample_rho(const ModelParams& prm, std::size_t n, std::uint64_t seed, unsigned workers = 1) {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    auto d = detail::draw_constants(prm);
    SampleBatch b{std::vector<double>(n), n, seed, 0.0, SampleSource::Rho};
    detail::parallel_fill(b.values, workers, [&](std::size_t i) {
        auto g = SplitMix64::stream(seed, i);
        return detail::rho_draw(g, d);
    });
    return b;
}

// Smallest depth with c^{-depth} E W / (1 - 1/c) < target.
inline int default_depth(const ModelParams& prm, double target = 1e-9) {
    long double ew = std::max<long double>(detail::rho_mean(prm), 1e-300L);
    long double inv = 1 / c_value(prm.c);
    long double need = std::log(ew / ((1 - inv) * target)) / log_c(prm.c);
    return std::max(1, static_cast<int>(std::ceil(need)) + 1);
}

// Residual after `depth` terms: deterministic sup when q = 0, expected value otherwise.
inline double series_truncation_error(const ModelParams& prm, int depth) {
    long double inv = 1 / c_value(prm.c);
    long double w = sgn(prm.q) == 0 ? c_pow(prm.c, -prm.k) : detail::rho_mean(prm);
    return static_cast<double>(std::exp(-depth * log_c(prm.c)) * w / (1 - inv));
}

namespace detail {

inline double series_draw(SplitMix64& g, const DrawConstants& d, int depth) {
    double scale = 1, x = 0;
    for (int n = 0; n < depth; ++n) {
        x += scale * rho_draw(g, d);
        scale *= d.inv_c;
    }
    return x;
}

}  // namespace detail

inline SampleBatch sample_mu(const ModelParams& prm, std::size_t n, std::uint64_t seed, int depth = 0,
                             unsigned workers = 1) {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    if (depth <= 0) depth = default_depth(prm);
    auto d = detail::draw_constants(prm);
    SampleBatch b{std::vector<double>(n), n, seed, series_truncation_error(prm, depth), SampleSource::Series};
    detail::parallel_fill(b.values, workers, [&](std::size_t i) {
        auto g = SplitMix64::stream(seed, i);
        return detail::series_draw(g, d, depth);
    });
    return b;
}

// Start from the series sampler at k - steps, then apply X <- X / c + Z, Z geometric(q), steps times.
inline SampleBatch sample_mu_ar1(const ModelParams& prm, std::size_t n, std::uint64_t seed, int steps = 20,
                                 int depth = 0, unsigned workers = 1) {
    if (n < 1 || steps < 1) throw std::invalid_argument("need n >= 1 and steps >= 1");
    ModelParams start = with_k(prm, prm.k - steps);
    if (depth <= 0) depth = default_depth(start);
    auto d0 = detail::draw_constants(start);
    auto d = detail::draw_constants(prm);
    double err = series_truncation_error(start, depth) * std::pow(d.inv_c, steps);
    SampleBatch b{std::vector<double>(n), n, seed, err, SampleSource::AR1};
    detail::parallel_fill(b.values, workers, [&](std::size_t i) {
        auto g = SplitMix64::stream(seed, i);
        double x = detail::series_draw(g, d0, depth);
        for (int s = 0; s < steps; ++s) x = x * d.inv_c + detail::geometric(g, d);
        return x;
    });
    return b;
}

// Unit-rate compound Poisson marks (dN, dL) = (1,0) w.p. p, (0,1) w.p. q, (1,c^{-k}) w.p. r;
// accumulates c^{-N(t-)} dL over jumps in [0, horizon].
inline SampleBatch simulate_integral(const ModelParams& prm, std::size_t n, std::uint64_t seed, double horizon,
                                     double tolerance = 1e-6, unsigned workers = 1) {
    if (n < 1 || !(horizon > 0)) throw std::invalid_argument("need n >= 1 and horizon > 0");
    const double p = static_cast<double>(to_long_double(prm.p));
    const double q = static_cast<double>(to_long_double(prm.q));
    auto d = detail::draw_constants(prm);
    long double mean_mu = detail::rho_mean(prm) / (1 - 1 / c_value(prm.c));
    long double residual =
        std::exp(-static_cast<long double>(1 - q) * horizon * (1 - 1 / c_value(prm.c))) * mean_mu;
    if (residual > tolerance)
        throw HorizonTooSmall("expected residual " + std::to_string(static_cast<double>(residual)) +
                              " exceeds tolerance; increase the horizon");
    SampleBatch b{std::vector<double>(n), n, seed, static_cast<double>(residual), SampleSource::Integral};
    detail::parallel_fill(b.values, workers, [&](std::size_t i) {
        auto g = SplitMix64::stream(seed, i);
        double t = 0, x = 0, scale = 1;
        for (;;) {
            t -= std::log(g.uniform_open0());
            if (t > horizon) break;
            double u = g.uniform();
            if (u < p) {
                scale *= d.inv_c;
            } else if (u < p + q) {
                x += scale;
            } else {
                x += scale * d.shift;
                scale *= d.inv_c;
            }
        }
        return x;
    });
    return b;
}

// Smallest horizon whose expected residual is at most tolerance / 2.
inline double default_horizon(const ModelParams& prm, double tolerance = 1e-6) {
    long double inv = 1 / c_value(prm.c);
    long double mean_mu = std::max<long double>(detail::rho_mean(prm) / (1 - inv), 1e-300L);
    long double rate = (1 - to_long_double(prm.q)) * (1 - inv);
    return static_cast<double>(std::max<long double>(1, std::log(2 * mean_mu / tolerance) / rate));
}

inline CFTrace empirical_cf(const SampleBatch& batch, const std::vector<double>& zs) {
    if (batch.values.empty()) throw std::invalid_argument("empty batch");
    CFTrace t;
    t.z_grid = zs;
    const double inv_n = 1.0 / static_cast<double>(batch.values.size());
    for (double z : zs) {
        long double re = 0, im = 0;
        for (double x : batch.values) {
            re += std::cos(z * x);
            im += std::sin(z * x);
        }
        t.values.emplace_back(static_cast<double>(re) * inv_n, static_cast<double>(im) * inv_n);
        t.error_bound.push_back(2.0 / std::sqrt(static_cast<double>(batch.values.size())));
    }
    return t;
}

inline std::vector<double> linear_grid(double lo, double hi, int count) {
    std::vector<double> z;
    if (count == 1) return {lo};
    for (int i = 0; i < count; ++i) z.push_back(lo + (hi - lo) * i / (count - 1));
    return z;
}

}  // namespace qidiv
