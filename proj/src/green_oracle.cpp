#include "greenlab/green_oracle.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>
#include <gsl/gsl_sf_bessel.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "greenlab/error.hpp"

namespace greenlab {

GreenInterval TableGreenOracle::green(const Element& x, const Element& y) const {
    double v = table_->at(x, y);
    return {v - table_->error_bound, v + table_->error_bound};
}

TreeGreenOracle::TreeGreenOracle(int rank, double laziness) : group_(GroupSpec::free(rank)) {
    if (!(laziness >= 0.0 && laziness < 1.0)) throw std::invalid_argument("laziness must lie in [0,1)");
    q_ = 2.0 * rank - 1.0;
    scale_ = q_ / (q_ - 1.0) / (1.0 - laziness);
}

GreenInterval TreeGreenOracle::green(const Element& x, const Element& y) const {
    Element d = group_.mul(group_.inv(x), y);
    double v = scale_ * std::pow(q_, -static_cast<double>(d.v.size()));
    return {v, v};
}

LatticeGreenOracle::LatticeGreenOracle(int d, double laziness) : group_(GroupSpec::lattice(std::max(d, 1))), d_(d) {
    if (d < 3) throw TransienceError("lattice Green function needs d >= 3");
    if (!(laziness >= 0.0 && laziness < 1.0)) throw std::invalid_argument("laziness must lie in [0,1)");
    scale_ = 1.0 / (1.0 - laziness);
}

GreenInterval LatticeGreenOracle::green(const Element& x, const Element& y) const {
    if (x.v.size() != static_cast<std::size_t>(d_) || y.v.size() != x.v.size()) throw BackendMismatch("lattice oracle: wrong dimension");
    std::vector<long> k(static_cast<std::size_t>(d_));
    for (std::size_t i = 0; i < k.size(); ++i) k[i] = std::labs(static_cast<long>(y.v[i] - x.v[i]));
    std::sort(k.begin(), k.end());
    {
        std::lock_guard lk(mu_);
        if (auto it = cache_.find(k); it != cache_.end()) return it->second;
    }
    GreenInterval g = compute(k);
    std::lock_guard lk(mu_);
    cache_.emplace(k, g);
    return g;
}

namespace {

struct IntegrandParams {
    const std::vector<long>* n;
};

double integrand(double u, void* p) {
    const auto& n = *static_cast<IntegrandParams*>(p)->n;
    double prod = 1.0;
    for (long k : n) prod *= gsl_sf_bessel_In_scaled(static_cast<int>(k), u);
    return prod;
}

}  // namespace

GreenInterval LatticeGreenOracle::compute(std::vector<long> n) const {
    double sum_n2 = 0.0;
    for (long k : n) sum_n2 += static_cast<double>(k * k);
    const double U = std::max(2000.0, 50.0 * sum_n2);
    IntegrandParams par{&n};
    gsl_function F{&integrand, &par};
    gsl_integration_workspace* ws = gsl_integration_workspace_alloc(2000);
    auto old = gsl_set_error_handler_off();
    double head = 0.0, err_head = 0.0;
    // split at the bulk of the mass to help the adaptive rule
    double split = std::min(U / 2.0, std::max(50.0, 4.0 * sum_n2));
    double h1 = 0.0, e1 = 0.0, h2 = 0.0, e2 = 0.0;
    int s1 = gsl_integration_qag(&F, 0.0, split, 1e-15, 1e-12, 2000, GSL_INTEG_GAUSS61, ws, &h1, &e1);
    int s2 = gsl_integration_qag(&F, split, U, 1e-15, 1e-12, 2000, GSL_INTEG_GAUSS61, ws, &h2, &e2);
    gsl_set_error_handler(old);
    gsl_integration_workspace_free(ws);
    if (s1 != GSL_SUCCESS && s1 != GSL_EROUND) throw NumericError("lattice Green quadrature failed");
    if (s2 != GSL_SUCCESS && s2 != GSL_EROUND) throw NumericError("lattice Green quadrature failed");
    head = h1 + h2;
    err_head = e1 + e2;

    // e^{-u} I_k(u) = (2 pi u)^{-1/2} (1 - a_k/u + b_k/u^2 - ...), a = (m-1)/8, b = (m-1)(m-9)/128, m = 4k^2
    double A = 0.0, B = 0.0, C = 0.0;
    std::vector<double> a;
    for (long k : n) {
        double m = 4.0 * static_cast<double>(k * k);
        a.push_back((m - 1.0) / 8.0);
        A += a.back();
        B += (m - 1.0) * (m - 9.0) / 128.0;
        C += std::abs((m - 1.0) * (m - 9.0) * (m - 25.0)) / 3072.0;
    }
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i + 1; j < a.size(); ++j) B += a[i] * a[j];
    const double h = 0.5 * static_cast<double>(d_);
    const double c0 = std::pow(2.0 * M_PI, -h);
    double tail = c0 * (std::pow(U, 1.0 - h) / (h - 1.0) - A * std::pow(U, -h) / h + B * std::pow(U, -h - 1.0) / (h + 1.0));
    // third-order remainder, inflated for the cross terms
    double third = C + std::abs(A) * std::abs(B) + std::pow(std::abs(A), 3);
    double err_tail = 4.0 * c0 * third * std::pow(U, -h - 2.0) / (h + 2.0);

    double v = static_cast<double>(d_) * (head + tail) * scale_;
    double err = static_cast<double>(d_) * (err_head + err_tail) * scale_ + 4e-15 * v;
    return {v - err, v + err};
}

}  // namespace greenlab
