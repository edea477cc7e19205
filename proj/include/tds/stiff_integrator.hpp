#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tds::ode {

/// Square band matrix in LAPACK general-band storage with room for the fill
/// that partial pivoting produces (ldab = 2*kl + ku + 1, column major).
class BandMatrix {
public:
    BandMatrix() = default;
    BandMatrix(std::size_t n, std::size_t kl, std::size_t ku);

    [[nodiscard]] std::size_t size() const { return n_; }
    [[nodiscard]] std::size_t lower() const { return kl_; }
    [[nodiscard]] std::size_t upper() const { return ku_; }
    [[nodiscard]] bool in_band(std::size_t i, std::size_t j) const {
        return (i <= j + kl_) && (j <= i + ku_);
    }

    double& operator()(std::size_t i, std::size_t j) { return ab_[index(i, j)]; }
    double operator()(std::size_t i, std::size_t j) const { return ab_[index(i, j)]; }

    void set_zero();
    /// y = A x
    void multiply(std::span<const double> x, std::span<double> y) const;

    double* data() { return ab_.data(); }
    [[nodiscard]] std::size_t leading_dimension() const { return ldab_; }

private:
    [[nodiscard]] std::size_t index(std::size_t i, std::size_t j) const {
        return (kl_ + ku_ + i - j) + j * ldab_;
    }

    std::size_t n_ = 0;
    std::size_t kl_ = 0;
    std::size_t ku_ = 0;
    std::size_t ldab_ = 0;
    std::vector<double> ab_;
};

/// LU factorization of a BandMatrix with partial pivoting. Factors in place.
class BandLu {
public:
    /// Returns false when the matrix is singular.
    bool factor(BandMatrix& a);
    void solve(std::span<double> rhs) const;

private:
    BandMatrix* a_ = nullptr;
    std::vector<std::size_t> pivots_;
};

/// Semi-discrete system y' = f(t, y) with a banded Jacobian.
class StiffSystem {
public:
    virtual ~StiffSystem() = default;

    [[nodiscard]] virtual std::size_t size() const = 0;
    [[nodiscard]] virtual std::size_t lower_bandwidth() const = 0;
    [[nodiscard]] virtual std::size_t upper_bandwidth() const = 0;

    virtual void rhs(double t, std::span<const double> y, std::span<double> dydt) const = 0;
    /// Writes df/dy into J (J has been zeroed by the caller).
    virtual void jacobian(double t, std::span<const double> y, BandMatrix& J) const = 0;
    /// df/dt at fixed y given f0 = f(t, y). The default is a forward
    /// difference.
    virtual void time_derivative(double t, std::span<const double> y,
                                 std::span<const double> f0, std::span<double> dfdt) const;
};

struct IntegratorOptions {
    double rel_tol = 1e-6;
    double abs_tol = 1e-10;
    double initial_step = 0.0;  // 0: pick from the span
    double min_step = 0.0;      // 0: scaled machine epsilon
    std::size_t max_steps = 500000;
};

struct IntegratorStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evals = 0;
    std::size_t jacobian_evals = 0;
    std::size_t factorizations = 0;
};

/// Rodas3: four-stage, third-order, stiffly accurate and L-stable Rosenbrock
/// method with an embedded second-order error estimate. Linearly implicit,
/// so every step costs one Jacobian, one band LU and four solves.
class Rodas3 {
public:
    Rodas3(const StiffSystem& system, IntegratorOptions options);

    /// Advances (t, y) to exactly t_end. Throws StepSizeCollapseError when
    /// the step falls below the minimum or the step budget is exhausted.
    void integrate(double& t, std::span<double> y, double t_end);

    [[nodiscard]] const IntegratorStats& stats() const { return stats_; }
    [[nodiscard]] double last_step() const { return h_; }

private:
    double error_norm(std::span<const double> y, std::span<const double> y_new,
                      std::span<const double> err) const;

    const StiffSystem& sys_;
    IntegratorOptions opt_;
    IntegratorStats stats_;
    double h_ = 0.0;

    BandMatrix jac_;
    BandMatrix lhs_;
    BandLu lu_;
    std::vector<double> f0_, ft_, ystage_, fstage_, y_new_;
    std::vector<std::vector<double>> k_;
};

}  // namespace tds::ode
