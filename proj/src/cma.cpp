#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "bbox/dfo.hpp"
#include "bbox/error.hpp"

namespace bbox {

namespace {

double sanitize(double v) { return std::isfinite(v) ? v : std::numeric_limits<double>::infinity(); }

}  // namespace

CmaParameters CmaParameters::defaults(std::size_t dimension, Covariance mode) {
    if (dimension < 1) throw InvalidInput("dimension must be at least 1");
    const double n = static_cast<double>(dimension);
    CmaParameters p;
    p.lambda = 4 + static_cast<std::size_t>(std::floor(3.0 * std::log(n)));
    p.mu = p.lambda / 2;
    p.weights.resize(static_cast<Eigen::Index>(p.mu));
    const double anchor = std::log(static_cast<double>(p.mu) + 0.5);
    for (std::size_t i = 0; i < p.mu; ++i)
        p.weights[static_cast<Eigen::Index>(i)] = anchor - std::log(static_cast<double>(i + 1));
    p.weights /= p.weights.sum();
    p.mu_eff = 1.0 / p.weights.squaredNorm();

    p.c_c = (4.0 + p.mu_eff / n) / (n + 4.0 + 2.0 * p.mu_eff / n);
    p.c_sigma = (p.mu_eff + 2.0) / (n + p.mu_eff + 5.0);
    p.c_1 = 2.0 / ((n + 1.3) * (n + 1.3) + p.mu_eff);
    p.c_mu = std::min(1.0 - p.c_1,
                      2.0 * (p.mu_eff - 2.0 + 1.0 / p.mu_eff) / ((n + 2.0) * (n + 2.0) + p.mu_eff));
    if (mode == Covariance::Diagonal) {
        const double boost = (n + 1.5) / 3.0;
        p.c_1 = std::min(1.0, p.c_1 * boost);
        p.c_mu = std::min(1.0 - p.c_1, p.c_mu * boost);
    }
    p.damping = 1.0 + 2.0 * std::max(0.0, std::sqrt((p.mu_eff - 1.0) / (n + 1.0)) - 1.0) + p.c_sigma;
    p.chi_n = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
    return p;
}

Cma::Cma(Vector mean, Covariance mode, double sigma)
    : Cma(mean, mode, sigma, CmaParameters::defaults(static_cast<std::size_t>(std::max<Eigen::Index>(mean.size(), 1)), mode)) {}

Cma::Cma(Vector mean, Covariance mode, double sigma, CmaParameters params)
    : mode_(mode), params_(std::move(params)), mean_(std::move(mean)), sigma_(sigma) {
    const auto d = mean_.size();
    if (d < 1) throw InvalidInput("dimension must be at least 1");
    if (!(sigma_ > 0.0)) throw InvalidInput("sigma must be positive");
    if (!mean_.allFinite()) throw InvalidInput("initial mean must be finite");
    if (params_.mu < 1 || params_.mu > params_.lambda ||
        params_.weights.size() != static_cast<Eigen::Index>(params_.mu))
        throw InvalidInput("inconsistent CMA population parameters");
    if (mode_ == Covariance::Full) {
        cov_ = Matrix::Identity(d, d);
        basis_ = Matrix::Identity(d, d);
    } else {
        diag_ = Vector::Ones(d);
    }
    scales_ = Vector::Ones(d);
    path_c_ = Vector::Zero(d);
    path_sigma_ = Vector::Zero(d);
}

Matrix Cma::covariance() const {
    if (mode_ == Covariance::Full) return cov_;
    return diag_.asDiagonal();
}

void Cma::set_covariance(const Matrix& c) {
    const auto d = mean_.size();
    if (c.rows() != d || c.cols() != d) throw InvalidInput("covariance must be d x d");
    if (mode_ == Covariance::Full)
        cov_ = c;
    else
        diag_ = c.diagonal();
    force_decompose_ = true;
}

void Cma::decompose() {
    if (mode_ == Covariance::Diagonal) {
        const double floor = 1e-20 * std::max(diag_.sum(), std::numeric_limits<double>::min());
        for (Eigen::Index i = 0; i < diag_.size(); ++i) {
            if (!(diag_[i] > floor)) {
                diag_[i] = floor;
                ++repairs_;
            }
        }
        scales_ = diag_.cwiseSqrt();
    } else {
        cov_ = 0.5 * (cov_ + cov_.transpose());
        Eigen::SelfAdjointEigenSolver<Matrix> solver(cov_);
        Vector eig = solver.eigenvalues();
        const double floor = 1e-20 * std::max(cov_.trace(), std::numeric_limits<double>::min());
        bool repaired = false;
        for (Eigen::Index i = 0; i < eig.size(); ++i) {
            if (!(eig[i] > floor)) {
                eig[i] = floor;
                repaired = true;
            }
        }
        basis_ = solver.eigenvectors();
        if (repaired) {
            ++repairs_;
            cov_ = basis_ * eig.asDiagonal() * basis_.transpose();
            cov_ = 0.5 * (cov_ + cov_.transpose());
        }
        scales_ = eig.cwiseSqrt();
    }
    decomposed_at_ = generation_;
    stale_ = false;
    force_decompose_ = false;
}

std::vector<Vector> Cma::ask(Rng& rng) {
    // the full eigendecomposition is refreshed lazily, at most every
    // lambda / ((c_1 + c_mu) * d * 10) generations
    const double n = static_cast<double>(dimension());
    const double gap = static_cast<double>(params_.lambda) / ((params_.c_1 + params_.c_mu) * n * 10.0);
    if (force_decompose_ ||
        (stale_ && (mode_ == Covariance::Diagonal ||
                    static_cast<double>(generation_ - decomposed_at_) >= gap)))
        decompose();

    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Vector> out;
    out.reserve(params_.lambda);
    Vector z(mean_.size());
    for (std::size_t k = 0; k < params_.lambda; ++k) {
        for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
        const Vector scaled = scales_.cwiseProduct(z);
        if (mode_ == Covariance::Full)
            out.emplace_back(mean_ + sigma_ * (basis_ * scaled));
        else
            out.emplace_back(mean_ + sigma_ * scaled);
    }
    return out;
}

void Cma::tell(std::span<const Vector> candidates, std::span<const double> values) {
    if (candidates.size() != values.size()) throw InvalidInput("one value per candidate required");
    if (candidates.size() != params_.lambda)
        throw InvalidInput("CMA tell expects exactly lambda candidates");
    const auto d = mean_.size();
    for (const auto& c : candidates)
        if (c.size() != d) throw InvalidInput("candidate dimension mismatch");

    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sanitize(values[a]) < sanitize(values[b]); });

    const auto mu = static_cast<Eigen::Index>(params_.mu);
    Matrix steps(d, mu);  // (x_i:lambda - m_old) / sigma for the mu best
    for (Eigen::Index i = 0; i < mu; ++i)
        steps.col(i) = (candidates[order[static_cast<std::size_t>(i)]] - mean_) / sigma_;
    const Vector step = steps * params_.weights;
    mean_ += sigma_ * step;

    // C^(-1/2) * step, using the current decomposition
    Vector whitened;
    if (mode_ == Covariance::Full)
        whitened = basis_ * (basis_.transpose() * step).cwiseQuotient(scales_);
    else
        whitened = step.cwiseQuotient(scales_);

    const auto& p = params_;
    path_sigma_ = (1.0 - p.c_sigma) * path_sigma_ + std::sqrt(p.c_sigma * (2.0 - p.c_sigma) * p.mu_eff) * whitened;
    const double gens = static_cast<double>(generation_ + 1);
    const double norm_ps = path_sigma_.norm();
    const bool h_sigma = norm_ps / std::sqrt(1.0 - std::pow(1.0 - p.c_sigma, 2.0 * gens)) / p.chi_n <
                         1.4 + 2.0 / (static_cast<double>(d) + 1.0);
    path_c_ = (1.0 - p.c_c) * path_c_ +
              (h_sigma ? std::sqrt(p.c_c * (2.0 - p.c_c) * p.mu_eff) : 0.0) * step;
    const double stall = h_sigma ? 0.0 : p.c_c * (2.0 - p.c_c);

    if (mode_ == Covariance::Full) {
        const Matrix rank_mu = steps * p.weights.asDiagonal() * steps.transpose();
        cov_ = (1.0 - p.c_1 - p.c_mu) * cov_ + p.c_1 * (path_c_ * path_c_.transpose() + stall * cov_) +
               p.c_mu * rank_mu;
        cov_ = 0.5 * (cov_ + cov_.transpose());
    } else {
        const Vector rank_mu = steps.cwiseAbs2() * p.weights;
        diag_ = (1.0 - p.c_1 - p.c_mu) * diag_ + p.c_1 * (path_c_.cwiseAbs2() + stall * diag_) +
                p.c_mu * rank_mu;
    }

    sigma_ *= std::exp((p.c_sigma / p.damping) * (norm_ps / p.chi_n - 1.0));
    ++generation_;
    stale_ = true;
}

}  // namespace bbox
