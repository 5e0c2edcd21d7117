#pragma once

// Profiled maximum-likelihood deviance for linear mixed models whose
// random-effect design within each cluster is the first q columns of X.

#include <vector>

#include <Eigen/Dense>

#include "hbnet/models.hpp"

namespace hbnet::models::detail {

class LmeEngine {
public:
    /// `row_scale`, when non-empty, multiplies row i of y and X (i.e. 1/sqrt(w_i)
    /// for residual variance sigma2 * w_i).
    LmeEngine(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const Grouping& cluster, int q,
              const Eigen::VectorXd& row_scale = {});

    int p() const noexcept { return p_; }
    int q() const noexcept { return q_; }
    int n_theta() const noexcept { return q_ * (q_ + 1) / 2; }
    double n() const noexcept { return n_; }
    std::size_t n_clusters() const noexcept { return blocks_.size(); }

    /// Lower-triangular relative covariance factor, column-major packing.
    Eigen::MatrixXd lambda(const Eigen::VectorXd& theta) const;
    Eigen::VectorXd identity_theta() const;

    struct Solution {
        Eigen::VectorXd beta;
        Eigen::MatrixXd modes;  // J x q
        Eigen::MatrixXd lambda;
        double sigma2 = 0.0;
        double deviance = 0.0;
        bool degenerate = false;
    };

    double deviance(const Eigen::VectorXd& theta) const;
    Solution solve(const Eigen::VectorXd& theta) const;

private:
    struct Block {
        Eigen::MatrixXd XtX;
        Eigen::VectorXd Xty;
        double yty = 0.0;
        std::size_t rows = 0;
    };

    Solution evaluate(const Eigen::VectorXd& theta, bool want_modes) const;

    int p_ = 0;
    int q_ = 0;
    double n_ = 0.0;
    std::vector<Block> blocks_;
    Eigen::MatrixXd XtX_;
    Eigen::VectorXd Xty_;
    double yty_ = 0.0;
};

/// Nelder-Mead over theta from the identity start, then compares against the
/// theta = 0 boundary and flips column signs so diag(lambda) >= 0.
struct ThetaFit {
    Eigen::VectorXd theta;
    double deviance = 0.0;
    int iterations = 0;
    bool converged = false;
};
ThetaFit optimise_theta(const LmeEngine& engine, const LmeOptions& options);

void check_grouping(const Grouping& cluster, Eigen::Index n_rows);

}  // namespace hbnet::models::detail
