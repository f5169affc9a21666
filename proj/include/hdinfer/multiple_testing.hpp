#pragma once

#include "hdinfer/types.hpp"

namespace hdinfer {

enum class Adjustment { Bonferroni, Holm, BenjaminiYekutieli };

Adjustment adjustment_from_string(const std::string& name);
std::string to_string(Adjustment a);

/// Multiplicity-adjusted p-values, clipped to [0, 1].  Holm and
/// Benjamini-Yekutieli preserve the ordering of the input order statistics.
Vector adjust_pvalues(const Vector& p, Adjustment method);

}  // namespace hdinfer
