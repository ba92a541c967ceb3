// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#include "itm/response_curve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "itm/error.hpp"

namespace itm {

namespace {

double uniform_grid(std::size_t j)
{
  return static_cast<double>(j) / static_cast<double>(ResponseCurve::kSamples - 1);
}

std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_numbers(std::string text, std::vector<double>& out)
{
  std::replace(text.begin(), text.end(), ',', ' ');
  std::istringstream ss(text);
  std::string tok;
  std::vector<double> values;
  while (ss >> tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
      return false;
    values.push_back(v);
  }
  out.insert(out.end(), values.begin(), values.end());
  return !values.empty();
}

bool starts_with_label(const std::string& line, char label)
{
  // "I =" / "B =" with arbitrary spacing
  if (line.empty() || line[0] != label)
    return false;
  const auto rest = trim(line.substr(1));
  return !rest.empty() && rest[0] == '=';
}

} // namespace

ResponseCurve ResponseCurve::from_table(std::string name, std::span<const double> irradiance,
                                        std::span<const double> brightness)
{
  if (irradiance.size() != brightness.size())
    throw InputError("response curve '" + name + "': " + std::to_string(irradiance.size()) +
                     " irradiance samples but " + std::to_string(brightness.size()) + " brightness samples");
  if (irradiance.size() < 2)
    throw InputError("response curve '" + name + "': needs at least 2 samples");
  for (std::size_t i = 0; i < irradiance.size(); ++i) {
    const double x = irradiance[i], y = brightness[i];
    if (!std::isfinite(x) || !std::isfinite(y) || x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0)
      throw InputError("response curve '" + name + "': sample " + std::to_string(i) + " out of range [0,1]");
    if (i > 0 && (x < irradiance[i - 1] || y < brightness[i - 1]))
      throw InputError("response curve '" + name + "': not monotone at sample " + std::to_string(i));
  }
  const double x0 = irradiance.front(), x1 = irradiance.back();
  const double y0 = brightness.front(), y1 = brightness.back();
  if (!(x1 > x0) || !(y1 > y0))
    throw InputError("response curve '" + name + "': degenerate (constant) table");

  ResponseCurve curve;
  curve.name_ = std::move(name);
  curve.samples_.resize(kSamples);
  std::size_t seg = 0;
  for (std::size_t j = 0; j < kSamples; ++j) {
    const double x = x0 + uniform_grid(j) * (x1 - x0);
    while (seg + 2 < irradiance.size() && irradiance[seg + 1] < x)
      ++seg;
    const double xa = irradiance[seg], xb = irradiance[seg + 1];
    const double ya = brightness[seg], yb = brightness[seg + 1];
    const double t = xb > xa ? std::clamp((x - xa) / (xb - xa), 0.0, 1.0) : 1.0;
    curve.samples_[j] = (ya + t * (yb - ya) - y0) / (y1 - y0);
  }
  curve.samples_.front() = 0.0;
  curve.samples_.back() = 1.0;
  for (std::size_t j = 1; j < kSamples; ++j)
    curve.samples_[j] = std::max(curve.samples_[j], curve.samples_[j - 1]);
  return curve;
}

ResponseCurve ResponseCurve::identity()
{
  ResponseCurve c;
  c.name_ = "identity";
  c.samples_.resize(kSamples);
  for (std::size_t j = 0; j < kSamples; ++j)
    c.samples_[j] = uniform_grid(j);
  return c;
}

ResponseCurve ResponseCurve::gamma(double g)
{
  if (!(g > 0.0))
    throw ConfigError("gamma must be positive");
  ResponseCurve c;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "gamma-%.3f", g);
  c.name_ = buf;
  c.samples_.resize(kSamples);
  for (std::size_t j = 0; j < kSamples; ++j)
    c.samples_[j] = std::pow(uniform_grid(j), 1.0 / g);
  return c;
}

double ResponseCurve::operator()(double x) const
{
  if (samples_.empty())
    throw RuntimeError("evaluating an empty response curve");
  if (!(x > 0.0))
    return samples_.front();
  if (x >= 1.0)
    return samples_.back();
  const double pos = x * static_cast<double>(kSamples - 1);
  const auto i = static_cast<std::size_t>(pos);
  const double t = pos - static_cast<double>(i);
  return samples_[i] + t * (samples_[i + 1] - samples_[i]);
}

double ResponseCurve::inverse(double y) const
{
  if (samples_.empty())
    throw RuntimeError("inverting an empty response curve");
  if (!(y > 0.0))
    return 0.0;
  if (y >= 1.0) {
    const auto it = std::lower_bound(samples_.begin(), samples_.end(), 1.0);
    return uniform_grid(static_cast<std::size_t>(it - samples_.begin()));
  }
  const auto it = std::lower_bound(samples_.begin(), samples_.end(), y);
  const auto j = static_cast<std::size_t>(it - samples_.begin());
  if (j == 0)
    return 0.0;
  const double ya = samples_[j - 1], yb = samples_[j];
  const double t = yb > ya ? (y - ya) / (yb - ya) : 0.0;
  return uniform_grid(j - 1) + t * (uniform_grid(j) - uniform_grid(j - 1));
}

std::vector<ResponseCurve> read_dorf(std::istream& in, const std::string& source)
{
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    line = trim(line);
    if (!line.empty())
      lines.push_back(line);
  }

  std::vector<ResponseCurve> curves;
  std::size_t i = 0;
  while (i < lines.size()) {
    const std::string name = lines[i++];
    if (i < lines.size() && lines[i].rfind("graph", 0) == 0)
      ++i;
    std::vector<double> irr, bri;
    std::vector<double> scratch;
    if (i < lines.size() && starts_with_label(lines[i], 'I')) {
      parse_numbers(lines[i].substr(lines[i].find('=') + 1), irr);
      ++i;
      while (i < lines.size() && !starts_with_label(lines[i], 'B') && parse_numbers(lines[i], irr))
        ++i;
      if (i >= lines.size() || !starts_with_label(lines[i], 'B'))
        throw InputError(source + ": curve '" + name + "' is missing its 'B =' block");
      parse_numbers(lines[i].substr(lines[i].find('=') + 1), bri);
      ++i;
      while (i < lines.size() && parse_numbers(lines[i], scratch)) {
        bri.insert(bri.end(), scratch.begin(), scratch.end());
        scratch.clear();
        ++i;
      }
    } else {
      if (i + 1 >= lines.size() || !parse_numbers(lines[i], irr) || !parse_numbers(lines[i + 1], bri))
        throw InputError(source + ": curve '" + name + "' is not followed by irradiance and brightness lines");
      i += 2;
    }
    curves.push_back(ResponseCurve::from_table(name, irr, bri));
  }
  if (curves.empty())
    throw InputError(source + ": no response curves found");
  return curves;
}

std::vector<ResponseCurve> read_dorf(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw InputError("cannot open response curve file " + path.string());
  return read_dorf(in, path.string());
}

std::vector<ResponseCurve> gamma_family(std::size_t count)
{
  if (count == 0)
    throw ConfigError("gamma family needs at least one curve");
  std::vector<ResponseCurve> out;
  for (std::size_t i = 0; i < count; ++i) {
    const double g = count == 1 ? 2.2 : 1.8 + 0.8 * static_cast<double>(i) / static_cast<double>(count - 1);
    out.push_back(ResponseCurve::gamma(g));
  }
  return out;
}

std::vector<ResponseCurve> select_split(const std::vector<ResponseCurve>& curves, CurveSplit split)
{
  const std::size_t cut = std::min(curves.size(), kTrainingCurveCount);
  switch (split) {
  case CurveSplit::All:
    return curves;
  case CurveSplit::Train:
    return {curves.begin(), curves.begin() + static_cast<long>(cut)};
  case CurveSplit::Test:
    return {curves.begin() + static_cast<long>(cut), curves.end()};
  }
  return curves;
}

std::vector<ResponseCurve> load_response_curves(const std::string& source, CurveSplit split)
{
  std::vector<ResponseCurve> curves;
  if (source.empty() || source == "identity") {
    curves.push_back(ResponseCurve::identity());
  } else if (source.rfind("gamma-family:", 0) == 0) {
    curves = gamma_family(std::stoul(source.substr(13)));
  } else if (source.rfind("gamma:", 0) == 0) {
    curves.push_back(ResponseCurve::gamma(std::stod(source.substr(6))));
  } else {
    curves = read_dorf(std::filesystem::path(source));
  }
  return select_split(curves, split);
}

} // namespace itm
