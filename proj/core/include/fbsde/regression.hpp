#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fbsde {

struct RegressionError : std::runtime_error {
    double condition;
    std::size_t step;
    RegressionError(const std::string& msg, double cond, std::size_t k)
        : std::runtime_error(msg), condition(cond), step(k) {}
};

// Raw monomial basis of a feature vector: [1, f1, f1^2, .., f1^deg, f2, ...].
int basis_size(int feature_dim, int degree);
void basis_row(const Eigen::Ref<const Eigen::VectorXd>& feats, int degree,
               Eigen::Ref<Eigen::VectorXd> out);

// Ordinary least squares on the monomial basis of one time step's features.
// Columns are centered and scaled; zero-variance columns are dropped (if all
// are dropped the fit degenerates to the cross-path mean); directions with
// singular values below 1e-9 of the largest are truncated. Coefficients are
// reported in the raw (unstandardized) basis so they can be blended across
// iterations and evaluated on new samples.
class StepDesign {
public:
    // feats: paths x feature_dim raw feature values.
    StepDesign(const Eigen::MatrixXd& feats, int degree, std::size_t step);

    // Returns raw-basis coefficients (basis_size x targets.cols()).
    Eigen::MatrixXd fit(const Eigen::Ref<const Eigen::MatrixXd>& targets) const;

    // In-sample predictions for raw coefficients (paths x coef.cols()).
    Eigen::MatrixXd predict(const Eigen::Ref<const Eigen::MatrixXd>& raw_coef) const;

    double condition() const { return condition_; }
    bool mean_only() const { return kept_.empty(); }
    int basis() const { return basis_; }

private:
    std::size_t step_;
    int degree_;
    int basis_;
    std::vector<int> kept_;        // raw basis columns (>=1) that survived
    Eigen::VectorXd mu_, sd_;      // stats of raw basis columns
    Eigen::MatrixXd phi_raw_;      // paths x basis raw design
    Eigen::MatrixXd u_;            // thin SVD factors of the standardized design
    Eigen::VectorXd s_;
    Eigen::MatrixXd v_;
    int rank_ = 0;
    double condition_ = 1.0;
};

}  // namespace fbsde
