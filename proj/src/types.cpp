#include "hdinfer/types.hpp"

#include <algorithm>

namespace hdinfer {

namespace {

void check_finite(const Matrix& x, const Vector& y) {
  if (!x.allFinite()) throw DimensionError("design matrix contains non-finite entries");
  if (!y.allFinite()) throw DimensionError("response contains non-finite entries");
}

}  // namespace

Dataset make_dataset(Matrix x, Vector y) {
  if (x.rows() < 3) throw DimensionError("need at least 3 samples");
  if (x.cols() < 1) throw DimensionError("need at least 1 variable");
  if (x.rows() != y.size())
    throw DimensionError("design matrix and response have different sample counts");
  check_finite(x, y);
  const Index n = x.rows(), p = x.cols();
  for (Index j = 0; j < p; ++j) {
    double mean = x.col(j).mean();
    double msq = (x.col(j).array() - mean).square().mean();
    if (msq <= 1e-24)
      throw DimensionError("column " + std::to_string(j) +
                           " has zero variance; remove it before fitting");
  }
  Dataset d;
  d.x = std::move(x);
  d.y = std::move(y);
  d.standardized = false;
  d.column_means = Vector::Zero(p);
  d.column_scales = Vector::Ones(p);
  (void)n;
  return d;
}

Dataset standardize(const Dataset& data) {
  if (data.standardized) return data;
  const Index n = data.n(), p = data.p();
  Dataset out;
  out.x.resize(n, p);
  out.column_means.resize(p);
  out.column_scales.resize(p);
  for (Index j = 0; j < p; ++j) {
    double mean = data.x.col(j).mean();
    Vector centered = data.x.col(j).array() - mean;
    double scale = std::sqrt(centered.squaredNorm() / static_cast<double>(n));
    if (scale <= 1e-12)
      throw DimensionError("column " + std::to_string(j) +
                           " has zero variance; remove it before fitting");
    out.x.col(j) = centered / scale;
    out.column_means[j] = mean;
    out.column_scales[j] = scale;
  }
  out.y_mean = data.y.mean();
  out.y = data.y.array() - out.y_mean;
  out.standardized = true;
  return out;
}

Dataset standardize_lenient(const Dataset& data) {
  if (data.standardized) return data;
  const Index n = data.n(), p = data.p();
  Dataset out;
  out.x.resize(n, p);
  out.column_means.resize(p);
  out.column_scales.resize(p);
  for (Index j = 0; j < p; ++j) {
    double mean = data.x.col(j).mean();
    Vector centered = data.x.col(j).array() - mean;
    double scale = std::sqrt(centered.squaredNorm() / static_cast<double>(n));
    out.column_means[j] = mean;
    if (scale <= 1e-12) {
      out.x.col(j).setZero();
      out.column_scales[j] = 0.0;  // marks an unusable column
    } else {
      out.x.col(j) = centered / scale;
      out.column_scales[j] = scale;
    }
  }
  out.y_mean = data.y.mean();
  out.y = data.y.array() - out.y_mean;
  out.standardized = true;
  return out;
}

Dataset subset_rows(const Dataset& data, const std::vector<int>& rows) {
  Dataset out;
  out.x.resize(static_cast<Index>(rows.size()), data.p());
  out.y.resize(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.x.row(static_cast<Index>(i)) = data.x.row(rows[i]);
    out.y[static_cast<Index>(i)] = data.y[rows[i]];
  }
  out.standardized = false;
  out.column_means = Vector::Zero(data.p());
  out.column_scales = Vector::Ones(data.p());
  return out;
}

void refresh_support(CoefficientEstimate& est) {
  est.support.clear();
  for (Index j = 0; j < est.beta.size(); ++j)
    if (est.beta[j] != 0.0) est.support.push_back(static_cast<int>(j));
}

CoefficientEstimate destandardize(const Dataset& sd, const CoefficientEstimate& est) {
  if (!sd.standardized)
    throw ConfigError("destandardize expects a standardized dataset");
  CoefficientEstimate out = est;
  for (Index j = 0; j < out.beta.size(); ++j) {
    double scale = sd.column_scales[j];
    out.beta[j] = scale > 0.0 ? est.beta[j] / scale : 0.0;
  }
  out.intercept = sd.y_mean - sd.column_means.dot(out.beta);
  refresh_support(out);
  return out;
}

std::string to_string(NoiseMethod m) {
  switch (m) {
    case NoiseMethod::ScaledLasso: return "scaled-lasso";
    case NoiseMethod::CvLassoResidual: return "cv-lasso-residual";
    case NoiseMethod::Fixed: return "fixed";
  }
  return "unknown";
}

}  // namespace hdinfer
