#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "plcguard/preprocess.hpp"

namespace plcguard::preprocess {

PcaModel fit_pca(const DenseMatrix& normalized, std::size_t n_components) {
  const auto n = static_cast<Eigen::Index>(normalized.rows());
  const auto d = static_cast<Eigen::Index>(normalized.cols());
  if (n_components == 0 || n_components > normalized.cols())
    throw std::invalid_argument("fit_pca: n_components must be in [1, columns]");
  if (normalized.rows() < std::max<std::size_t>(3, n_components))
    throw std::invalid_argument("fit_pca: need at least 3 rows and no fewer rows than components");

  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
      normalized.data().data(), n, d);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  const Eigen::MatrixXd cov = (centered.adjoint() * centered) / double(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw std::runtime_error("fit_pca: eigendecomposition failed");

  // Eigen returns eigenvalues in ascending order.
  const Eigen::VectorXd values = solver.eigenvalues().cwiseMax(0.0);
  const double total = values.sum();

  PcaModel model;
  model.mean.assign(mean.data(), mean.data() + d);
  for (std::size_t c = 0; c < n_components; ++c) {
    const Eigen::Index col = d - 1 - static_cast<Eigen::Index>(c);
    Eigen::VectorXd v = solver.eigenvectors().col(col).normalized();
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    model.components.emplace_back(v.data(), v.data() + d);
    model.eigenvalues.push_back(values(col));
    model.explained_variance_ratio.push_back(total > 0 ? values(col) / total : 0.0);
  }
  return model;
}

}  // namespace plcguard::preprocess
