#include "fbsde/regression.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "fbsde/parallel.hpp"

namespace fbsde {

int basis_size(int feature_dim, int degree) { return 1 + feature_dim * degree; }

void basis_row(const Eigen::Ref<const Eigen::VectorXd>& feats, int degree,
               Eigen::Ref<Eigen::VectorXd> out) {
    out[0] = 1.0;
    int col = 1;
    for (int j = 0; j < feats.size(); ++j) {
        double p = feats[j];
        for (int q = 0; q < degree; ++q) {
            out[col++] = p;
            p *= feats[j];
        }
    }
}

StepDesign::StepDesign(const Eigen::MatrixXd& feats, int degree, std::size_t step)
    : step_(step), degree_(degree), basis_(basis_size(static_cast<int>(feats.cols()), degree)) {
    const auto M = feats.rows();
    if (M < 1) throw RegressionError("regression: empty sample", 0.0, step);
    if (!feats.allFinite()) throw RegressionError("regression: non-finite features", 0.0, step);

    phi_raw_.resize(M, basis_);
    parallel::for_chunks(static_cast<std::size_t>(M), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t r = lo; r < hi; ++r) {
            Eigen::VectorXd row(basis_);
            basis_row(feats.row(static_cast<Eigen::Index>(r)).transpose(), degree_, row);
            phi_raw_.row(static_cast<Eigen::Index>(r)) = row.transpose();
        }
    });

    mu_ = phi_raw_.colwise().mean();
    sd_.resize(basis_);
    for (int j = 0; j < basis_; ++j)
        sd_[j] = std::sqrt((phi_raw_.col(j).array() - mu_[j]).square().mean());

    kept_.clear();
    for (int j = 1; j < basis_; ++j)
        if (sd_[j] > 1e-10 * (1.0 + std::abs(mu_[j]))) kept_.push_back(j);
    if (kept_.empty()) return;  // cross-path mean fallback

    Eigen::MatrixXd std_design(M, 1 + static_cast<Eigen::Index>(kept_.size()));
    std_design.col(0).setOnes();
    for (std::size_t i = 0; i < kept_.size(); ++i) {
        const int j = kept_[i];
        std_design.col(static_cast<Eigen::Index>(i + 1)) =
            (phi_raw_.col(j).array() - mu_[j]) / sd_[j];
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(std_design, Eigen::ComputeThinU | Eigen::ComputeThinV);
    s_ = svd.singularValues();
    rank_ = 0;
    for (int i = 0; i < s_.size(); ++i)
        if (s_[i] > 1e-9 * s_[0]) ++rank_;
    condition_ = rank_ > 0 ? s_[0] / s_[rank_ - 1] : 0.0;
    if (condition_ > 1e12)
        throw RegressionError("regression: design matrix condition exceeds 1e12", condition_,
                              step_);
    u_ = svd.matrixU().leftCols(rank_);
    v_ = svd.matrixV().leftCols(rank_);
    s_ = s_.head(rank_).eval();
}

Eigen::MatrixXd StepDesign::fit(const Eigen::Ref<const Eigen::MatrixXd>& targets) const {
    if (!targets.allFinite())
        throw RegressionError("regression: non-finite targets", condition_, step_);
    Eigen::MatrixXd coef = Eigen::MatrixXd::Zero(basis_, targets.cols());
    if (kept_.empty()) {
        coef.row(0) = targets.colwise().mean();
        return coef;
    }
    // standardized solution, then back to the raw basis
    Eigen::MatrixXd bs = v_ * (s_.cwiseInverse().asDiagonal() * (u_.transpose() * targets));
    coef.row(0) = bs.row(0);
    for (std::size_t i = 0; i < kept_.size(); ++i) {
        const int j = kept_[i];
        const auto bi = bs.row(static_cast<Eigen::Index>(i + 1));
        coef.row(j) = bi / sd_[j];
        coef.row(0) -= bi * (mu_[j] / sd_[j]);
    }
    return coef;
}

Eigen::MatrixXd StepDesign::predict(const Eigen::Ref<const Eigen::MatrixXd>& raw_coef) const {
    return phi_raw_ * raw_coef;
}

}  // namespace fbsde
