#include "tds/stiff_integrator.hpp"

#include "tds/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace tds::ode {

BandMatrix::BandMatrix(std::size_t n, std::size_t kl, std::size_t ku)
    : n_(n), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1), ab_(ldab_ * n, 0.0) {}

void BandMatrix::set_zero() { std::fill(ab_.begin(), ab_.end(), 0.0); }

void BandMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t j0 = i > kl_ ? i - kl_ : 0;
        const std::size_t j1 = std::min(n_ - 1, i + ku_);
        double s = 0.0;
        for (std::size_t j = j0; j <= j1; ++j) {
            s += (*this)(i, j) * x[j];
        }
        y[i] = s;
    }
}

// Unblocked band LU with partial pivoting in the LAPACK storage scheme. The
// systems here have half-bandwidths of 1 to 7, where the per-column BLAS
// calls of the reference implementation cost more than the arithmetic.
bool BandLu::factor(BandMatrix& a) {
    a_ = &a;
    const std::size_t n = a.size();
    const std::size_t kl = a.lower();
    const std::size_t ku = a.upper();
    pivots_.resize(n);
    std::size_t ju = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t km = std::min(kl, n - 1 - j);
        std::size_t p = 0;
        double best = std::abs(a(j, j));
        for (std::size_t i = 1; i <= km; ++i) {
            const double v = std::abs(a(j + i, j));
            if (v > best) {
                best = v;
                p = i;
            }
        }
        pivots_[j] = j + p;
        if (best == 0.0 || !std::isfinite(best)) {
            return false;
        }
        ju = std::max(ju, std::min(j + ku + p, n - 1));
        if (p != 0) {
            for (std::size_t c = j; c <= ju; ++c) {
                std::swap(a(j, c), a(j + p, c));
            }
        }
        const double inv = 1.0 / a(j, j);
        for (std::size_t i = 1; i <= km; ++i) {
            a(j + i, j) *= inv;
        }
        for (std::size_t c = j + 1; c <= ju; ++c) {
            const double ujc = a(j, c);
            if (ujc != 0.0) {
                for (std::size_t i = 1; i <= km; ++i) {
                    a(j + i, c) -= a(j + i, j) * ujc;
                }
            }
        }
    }
    return true;
}

void BandLu::solve(std::span<double> b) const {
    const BandMatrix& a = *a_;
    const std::size_t n = a.size();
    const std::size_t kl = a.lower();
    const std::size_t ku = a.upper();
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t l = pivots_[j];
        if (l != j) {
            std::swap(b[l], b[j]);
        }
        const std::size_t km = std::min(kl, n - 1 - j);
        for (std::size_t i = 1; i <= km; ++i) {
            b[j + i] -= a(j + i, j) * b[j];
        }
    }
    for (std::size_t j = n; j-- > 0;) {
        b[j] /= a(j, j);
        const std::size_t i0 = j > kl + ku ? j - kl - ku : 0;
        const double bj = b[j];
        for (std::size_t i = i0; i < j; ++i) {
            b[i] -= a(i, j) * bj;
        }
    }
}

void StiffSystem::time_derivative(double t, std::span<const double> y,
                                  std::span<const double> f0, std::span<double> dfdt) const {
    const double delta =
        std::sqrt(std::numeric_limits<double>::epsilon()) * std::max(std::abs(t), 1.0);
    rhs(t + delta, y, dfdt);
    for (std::size_t i = 0; i < dfdt.size(); ++i) {
        dfdt[i] = (dfdt[i] - f0[i]) / delta;
    }
}

namespace {

// Rodas3 tableau (Sandu et al. 1997), written for the formulation
//   (1/(h gamma) - J) K_i = f(t + alpha_i h, y + sum_j a_ij K_j)
//                           + sum_j (c_ij / h) K_j + h gamma_i f_t
constexpr int kStages = 4;
constexpr double kGamma = 0.5;
constexpr double kA[kStages][kStages] = {
    {0, 0, 0, 0}, {0, 0, 0, 0}, {2, 0, 0, 0}, {2, 0, 1, 0}};
constexpr double kC[kStages][kStages] = {
    {0, 0, 0, 0}, {4, 0, 0, 0}, {1, -1, 0, 0}, {1, -1, -8.0 / 3.0, 0}};
constexpr bool kNewF[kStages] = {true, false, true, true};
constexpr double kAlpha[kStages] = {0, 0, 1, 1};
constexpr double kGammaI[kStages] = {0.5, 1.5, 0, 0};
constexpr double kM[kStages] = {2, 0, 1, 1};
constexpr double kE[kStages] = {0, 0, 0, 1};
constexpr double kOrder = 3.0;

constexpr double kSafety = 0.9;
constexpr double kFacMin = 0.2;
constexpr double kFacMax = 6.0;

}  // namespace

Rodas3::Rodas3(const StiffSystem& system, IntegratorOptions options)
    : sys_(system), opt_(options) {
    const std::size_t n = sys_.size();
    jac_ = BandMatrix(n, sys_.lower_bandwidth(), sys_.upper_bandwidth());
    lhs_ = BandMatrix(n, sys_.lower_bandwidth(), sys_.upper_bandwidth());
    f0_.resize(n);
    ft_.resize(n);
    ystage_.resize(n);
    fstage_.resize(n);
    y_new_.resize(n);
    k_.assign(kStages, std::vector<double>(n));
}

double Rodas3::error_norm(std::span<const double> y, std::span<const double> y_new,
                          std::span<const double> err) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double scale =
            opt_.abs_tol + opt_.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
        const double e = err[i] / scale;
        sum += e * e;
    }
    return std::sqrt(sum / static_cast<double>(y.size()));
}

void Rodas3::integrate(double& t, std::span<double> y, double t_end) {
    const std::size_t n = sys_.size();
    const double span = t_end - t;
    if (span <= 0.0) {
        return;
    }
    const double eps = std::numeric_limits<double>::epsilon();
    const double h_min =
        opt_.min_step > 0.0 ? opt_.min_step : 64.0 * eps * std::max(std::abs(t), std::abs(t_end));
    if (h_ <= 0.0) {
        h_ = opt_.initial_step > 0.0 ? opt_.initial_step : 1e-6 * span;
    }

    bool last_rejected = false;
    while (t < t_end) {
        if (stats_.accepted + stats_.rejected >= opt_.max_steps) {
            throw StepSizeCollapseError("stiff integrator: step budget exhausted at t=" +
                                        std::to_string(t));
        }
        // Snap onto t_end when the remainder is small so that no sliver step
        // is left behind.
        double h = std::min(h_, t_end - t);
        if (t_end - t - h < 1e-10 * span) {
            h = t_end - t;
        }
        bool clipped = h < h_;

        sys_.rhs(t, y, f0_);
        sys_.time_derivative(t, y, f0_, ft_);
        jac_.set_zero();
        sys_.jacobian(t, y, jac_);
        ++stats_.rhs_evals;
        ++stats_.jacobian_evals;

        bool accepted = false;
        while (!accepted) {
            if (h < h_min) {
                throw StepSizeCollapseError("stiff integrator: step size collapsed at t=" +
                                            std::to_string(t));
            }
            lhs_.set_zero();
            const double diag = 1.0 / (h * kGamma);
            for (std::size_t j = 0; j < n; ++j) {
                const std::size_t i0 = j > jac_.upper() ? j - jac_.upper() : 0;
                const std::size_t i1 = std::min(n - 1, j + jac_.lower());
                for (std::size_t i = i0; i <= i1; ++i) {
                    lhs_(i, j) = -jac_(i, j);
                }
                lhs_(j, j) += diag;
            }
            ++stats_.factorizations;
            if (!lu_.factor(lhs_)) {
                h *= 0.25;
                last_rejected = true;
                ++stats_.rejected;
                continue;
            }

            for (int s = 0; s < kStages; ++s) {
                auto& ks = k_[s];
                if (s == 0) {
                    std::copy(f0_.begin(), f0_.end(), ks.begin());
                } else if (kNewF[s]) {
                    std::copy(y.begin(), y.end(), ystage_.begin());
                    for (int j = 0; j < s; ++j) {
                        if (kA[s][j] != 0.0) {
                            for (std::size_t i = 0; i < n; ++i) {
                                ystage_[i] += kA[s][j] * k_[j][i];
                            }
                        }
                    }
                    sys_.rhs(t + kAlpha[s] * h, ystage_, fstage_);
                    ++stats_.rhs_evals;
                    std::copy(fstage_.begin(), fstage_.end(), ks.begin());
                } else {
                    std::copy(f0_.begin(), f0_.end(), ks.begin());
                }
                for (int j = 0; j < s; ++j) {
                    const double c = kC[s][j] / h;
                    if (c != 0.0) {
                        for (std::size_t i = 0; i < n; ++i) {
                            ks[i] += c * k_[j][i];
                        }
                    }
                }
                if (kGammaI[s] != 0.0) {
                    const double hg = h * kGammaI[s];
                    for (std::size_t i = 0; i < n; ++i) {
                        ks[i] += hg * ft_[i];
                    }
                }
                lu_.solve(ks);
            }

            double finite_check = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double yn = y[i];
                double e = 0.0;
                for (int s = 0; s < kStages; ++s) {
                    yn += kM[s] * k_[s][i];
                    e += kE[s] * k_[s][i];
                }
                y_new_[i] = yn;
                fstage_[i] = e;
                finite_check += yn;
            }
            double err = std::isfinite(finite_check) ? error_norm(y, y_new_, fstage_)
                                                     : std::numeric_limits<double>::infinity();

            double fac = std::isfinite(err) && err > 0.0
                             ? kSafety / std::pow(err, 1.0 / kOrder)
                             : (err == 0.0 ? kFacMax : kFacMin);
            fac = std::clamp(fac, kFacMin, kFacMax);

            if (err <= 1.0) {
                accepted = true;
                ++stats_.accepted;
                std::copy(y_new_.begin(), y_new_.end(), y.begin());
                t = (h == t_end - t) ? t_end : t + h;
                if (last_rejected) {
                    fac = std::min(fac, 1.0);
                }
                last_rejected = false;
                // A step shortened to land on t_end says little about the
                // natural step size, so do not let it shrink the proposal.
                h_ = clipped ? std::max(h_, h * fac) : h * fac;
            } else {
                ++stats_.rejected;
                last_rejected = true;
                h *= fac;
                h_ = h;
                clipped = false;
            }
        }
    }
}

}  // namespace tds::ode
