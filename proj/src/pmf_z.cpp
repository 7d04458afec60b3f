#include "greenlab/pmf_z.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <numeric>
#include <stdexcept>

#include "greenlab/error.hpp"

namespace greenlab {

PmfOnZ PmfOnZ::delta(std::int64_t k) {
    PmfOnZ d;
    d.lo = k;
    d.p = {1.0};
    return d;
}

double PmfOnZ::mass() const {
    double s = 0.0;
    for (double x : p) s += x;
    return s;
}

PmfOnZ PmfOnZ::from_measure(const StepMeasure& mu, std::int64_t K) {
    if (mu.group().spec() != GroupSpec::lattice(1)) throw BackendMismatch("PmfOnZ needs a measure on Z");
    if (K < 0) throw std::invalid_argument("negative cap");
    PmfOnZ out;
    out.lo = -K;
    out.p.assign(static_cast<std::size_t>(2 * K + 1), 0.0);
    double outside = 0.0;
    for (const auto& a : mu.atoms()) {
        std::int64_t k = a.g.v[0];
        double w = mu.finite_support() ? a.p : (1.0 - mu.laziness()) * a.p;
        if (std::llabs(k) <= K) out.p[static_cast<std::size_t>(k + K)] += w;
        else outside += w;
    }
    if (const RadiusLaw* law = mu.radius_law()) {
        out.p[static_cast<std::size_t>(K)] += mu.laziness();
        double c = (1.0 - mu.laziness()) * mu.tail_mass() / (2.0 * law->normalizer());
        for (std::int64_t r = law->r_min(); r <= K; ++r) {
            double w = c * law->weight(r);
            out.p[static_cast<std::size_t>(K + r)] += w;
            out.p[static_cast<std::size_t>(K - r)] += w;
        }
        outside += (1.0 - mu.laziness()) * mu.tail_mass() * law->tail_prob(std::max(K + 1, law->r_min()));
    }
    out.trunc = outside;
    return out;
}

namespace {

std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}

std::size_t next_smooth(std::size_t n) {
    for (;; ++n) {
        std::size_t m = n;
        for (std::size_t f : {2u, 3u, 5u})
            while (m % f == 0) m /= f;
        if (m == 1) return n;
    }
}

// Linear convolution values at offsets [t0, t1] of the full result (offset 0 = a[0]*b[0]).
std::vector<double> fft_window(const std::vector<double>& a, const std::vector<double>& b, std::size_t t0, std::size_t t1) {
    std::size_t full = a.size() + b.size() - 1;
    std::size_t n = std::max({t1 + 1, full - t0, a.size(), b.size()});
    n = next_smooth(n);
    const bool square = &a == &b;
    double* in = fftw_alloc_real(n);
    fftw_complex* fa = fftw_alloc_complex(n / 2 + 1);
    fftw_complex* fb = square ? fa : fftw_alloc_complex(n / 2 + 1);
    fftw_plan pa, pb = nullptr, pi;
    {
        std::lock_guard lk(fftw_plan_mutex());
        pa = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, fa, FFTW_ESTIMATE);
        if (!square) pb = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, fb, FFTW_ESTIMATE);
        pi = fftw_plan_dft_c2r_1d(static_cast<int>(n), fa, in, FFTW_ESTIMATE);
    }
    std::fill(in, in + n, 0.0);
    std::copy(a.begin(), a.end(), in);
    fftw_execute(pa);
    if (!square) {
        std::fill(in, in + n, 0.0);
        std::copy(b.begin(), b.end(), in);
        fftw_execute(pb);
    }
    for (std::size_t i = 0; i < n / 2 + 1; ++i) {
        double re = fa[i][0] * fb[i][0] - fa[i][1] * fb[i][1];
        double im = fa[i][0] * fb[i][1] + fa[i][1] * fb[i][0];
        fa[i][0] = re;
        fa[i][1] = im;
    }
    fftw_execute(pi);
    std::vector<double> out(t1 - t0 + 1);
    const double scale = 1.0 / static_cast<double>(n);
    // componentwise roundoff floor ~ eps log2(n) |a|_2 |b|_2; anything below it is treated as an exact zero
    auto norm2 = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return std::sqrt(s);
    };
    const double floor = 16.0 * DBL_EPSILON * std::log2(static_cast<double>(n)) * norm2(a) * norm2(b);
    for (std::size_t t = t0; t <= t1; ++t) {
        const double v = in[t % n] * scale;
        out[t - t0] = v > floor ? v : 0.0;
    }
    {
        std::lock_guard lk(fftw_plan_mutex());
        fftw_destroy_plan(pa);
        if (pb) fftw_destroy_plan(pb);
        fftw_destroy_plan(pi);
    }
    fftw_free(in);
    if (!square) fftw_free(fb);
    fftw_free(fa);
    return out;
}

}  // namespace

PmfOnZ convolve_z(const PmfOnZ& a, const PmfOnZ& b, std::int64_t K) {
    if (K < 0) throw std::invalid_argument("negative cap");
    if (a.p.empty() || b.p.empty()) throw std::invalid_argument("empty pmf");
    std::int64_t lo = a.lo + b.lo, hi = a.hi() + b.hi();
    std::int64_t wlo = std::max(lo, -K), whi = std::min(hi, K);
    PmfOnZ out;
    double kept = 0.0;
    if (wlo <= whi) {
        out.lo = wlo;
        const double work = static_cast<double>(a.p.size()) * static_cast<double>(b.p.size());
        if (work <= 4e6) {
            out.p.assign(static_cast<std::size_t>(whi - wlo + 1), 0.0);
            for (std::size_t i = 0; i < a.p.size(); ++i) {
                if (a.p[i] == 0.0) continue;
                for (std::size_t j = 0; j < b.p.size(); ++j) {
                    std::int64_t k = a.lo + b.lo + static_cast<std::int64_t>(i + j);
                    if (k < wlo || k > whi) continue;
                    out.p[static_cast<std::size_t>(k - wlo)] += a.p[i] * b.p[j];
                }
            }
        } else {
            const auto& bb = (&a == &b) ? a.p : b.p;
            out.p = fft_window(a.p, bb, static_cast<std::size_t>(wlo - lo), static_cast<std::size_t>(whi - lo));
        }
        kept = out.mass();
    } else {
        out.lo = 0;
        out.p = {0.0};
    }
    double inherited = a.trunc + b.trunc - a.trunc * b.trunc;
    out.trunc = std::max(1.0 - kept, inherited);
    return out;
}

PmfOnZ convolution_power(const PmfOnZ& a, std::int64_t n, std::int64_t K) {
    if (n < 0) throw std::invalid_argument("negative power");
    PmfOnZ result = PmfOnZ::delta(0);
    PmfOnZ base = a;
    bool first = true;
    while (n > 0) {
        if (n & 1) {
            result = first ? base : convolve_z(result, base, K);
            first = false;
        }
        n >>= 1;
        if (n > 0) base = convolve_z(base, base, K);
    }
    return result;
}

double tv_shift(const PmfOnZ& a, std::int64_t k) {
    std::int64_t from = std::min(a.lo, a.lo + k), to = std::max(a.hi(), a.hi() + k);
    double s = 0.0;
    for (std::int64_t m = from; m <= to; ++m) s += std::abs(a.at(m) - a.at(m - k));
    return 0.5 * s;
}

std::int64_t support_gcd(const std::vector<std::int64_t>& support) {
    std::int64_t g = 0;
    for (std::size_t i = 1; i < support.size(); ++i) g = std::gcd(g, std::llabs(support[i] - support[0]));
    return g;
}

std::int64_t support_gcd(const PmfOnZ& a) {
    std::vector<std::int64_t> s;
    for (std::size_t i = 0; i < a.p.size(); ++i)
        if (a.p[i] > 0.0) s.push_back(a.lo + static_cast<std::int64_t>(i));
    return support_gcd(s);
}

}  // namespace greenlab
