#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace hdinfer {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = Mat<double>;
using Vector = Vec<double>;
using Index = Eigen::Index;

// ---- error taxonomy ------------------------------------------------------

struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConvergenceError : std::runtime_error {
  ConvergenceError(const std::string& msg, double last_gap_)
      : std::runtime_error(msg), last_gap(last_gap_) {}
  double last_gap = 0.0;
};
struct RankError : std::runtime_error {
  RankError(const std::string& msg, std::vector<int> columns_)
      : std::runtime_error(msg), columns(std::move(columns_)) {}
  std::vector<int> columns;
};
struct DegenerateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MethodError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- core data types -----------------------------------------------------

/// Regression data (n samples x p variables).  When `standardized` is set,
/// every column of `x` has mean 0 and mean square 1 and `y` is centered;
/// `column_means`, `column_scales` and `y_mean` hold what is needed to map
/// estimates back to the original scale.
struct Dataset {
  Matrix x;
  Vector y;
  bool standardized = false;
  Vector column_means;
  Vector column_scales;
  double y_mean = 0.0;

  Index n() const { return x.rows(); }
  Index p() const { return x.cols(); }
};

/// Validates dimensions and finiteness; rejects constant columns outright.
Dataset make_dataset(Matrix x, Vector y);

/// Center/scale columns to mean 0 and mean square 1, center y.
/// No-op when already standardized.
Dataset standardize(const Dataset& data);

/// Standardization for resampled row subsets: constant columns are mapped
/// to all-zero columns (so they can never be selected) instead of throwing.
Dataset standardize_lenient(const Dataset& data);

/// Rows of `data` restricted to `rows`, original scale.
Dataset subset_rows(const Dataset& data, const std::vector<int>& rows);

struct CoefficientEstimate {
  Vector beta;               // length p
  double intercept = 0.0;
  double lambda = 0.0;
  std::vector<int> support;  // sorted indices with beta[j] != 0
  bool converged = true;
};

/// Recompute `support` from `beta`.
void refresh_support(CoefficientEstimate& est);

/// Map a fit on standardized data back to the original x/y scale.
CoefficientEstimate destandardize(const Dataset& standardized_data,
                                  const CoefficientEstimate& est);

enum class NoiseMethod { ScaledLasso, CvLassoResidual, Fixed };

struct NoiseEstimate {
  double sigma = 1.0;
  NoiseMethod method = NoiseMethod::Fixed;
};

std::string to_string(NoiseMethod m);

/// Per-variable inference output shared by all methods.  Undefined entries
/// (variables a method cannot handle) carry NaN and `defined[j] == false`.
struct InferenceResult {
  std::string method;
  std::string family = "gaussian";
  Vector estimate;
  Vector se;
  Vector p_raw;
  Vector p_adjusted;
  Vector ci_lower;
  Vector ci_upper;
  std::vector<bool> ci_defined;
  double level = 0.95;
  double alpha = 0.05;
  NoiseEstimate noise;
  std::vector<std::string> warnings;

  Index p() const { return estimate.size(); }
};

inline bool is_finite(double v) { return std::isfinite(v); }

}  // namespace hdinfer
