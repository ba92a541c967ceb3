// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <vector>

namespace itm {

/// Camera response function sampled on a uniform grid over [0,1].
///
/// Samples are non-decreasing with samples.front() == 0 and samples.back() == 1.
class ResponseCurve
{
public:
  static constexpr std::size_t kSamples = 1024;

  ResponseCurve() = default;

  /// Resamples an arbitrary (irradiance, brightness) table onto the uniform grid.
  /// Both columns are normalized to [0,1]; non-monotone or out-of-range data is
  /// rejected with an InputError naming the curve.
  static ResponseCurve from_table(std::string name, std::span<const double> irradiance,
                                  std::span<const double> brightness);

  static ResponseCurve identity();
  /// x^(1/gamma)
  static ResponseCurve gamma(double gamma);

  const std::string& name() const { return name_; }
  std::span<const double> samples() const { return samples_; }

  /// Piecewise-linear evaluation; input is clamped to [0,1].
  double operator()(double x) const;
  /// Smallest x with f(x) == y (piecewise-linear inverse).
  double inverse(double y) const;

private:
  std::string name_;
  std::vector<double> samples_;
};

enum class CurveSplit { All, Train, Test };

/// Curves reserved for training out of a full 201-curve database.
inline constexpr std::size_t kTrainingCurveCount = 171;

/// Parses the DoRF text layout: a name line, then "I =" and "B =" blocks of
/// whitespace-separated samples. The compact form (name line, irradiance line,
/// brightness line) is accepted too.
std::vector<ResponseCurve> read_dorf(std::istream& in, const std::string& source = "<stream>");
std::vector<ResponseCurve> read_dorf(const std::filesystem::path& path);

/// `count` curves x^(1/g) with g evenly spaced over [1.8, 2.6].
std::vector<ResponseCurve> gamma_family(std::size_t count);

/// Train: the first 171 curves in file order. Test: the remainder.
std::vector<ResponseCurve> select_split(const std::vector<ResponseCurve>& curves, CurveSplit split);

/// Resolves a CRF source string: "identity", "gamma:<g>", "gamma-family:<n>",
/// or a path to a DoRF file.
std::vector<ResponseCurve> load_response_curves(const std::string& source, CurveSplit split = CurveSplit::All);

} // namespace itm
