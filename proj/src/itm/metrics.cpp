// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#include "itm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>

#include "itm/hdr_io.hpp"
#include "itm/logging.hpp"

namespace itm {

namespace {

// log10 of the photopic detection threshold at adapting luminance L.
double log_tvi(double log_l)
{
  if (log_l <= -2.6)
    return -0.72;
  if (log_l >= 1.9)
    return log_l - 1.255;
  return std::pow(0.249 * log_l + 0.65, 2.7) - 0.72;
}

class PuTable
{
public:
  static constexpr std::size_t kSize = 4096;

  PuTable()
  {
    lo_ = std::log10(kPuMinLuminance);
    hi_ = std::log10(kPuMaxLuminance);
    step_ = (hi_ - lo_) / static_cast<double>(kSize - 1);
    values_.resize(kSize);
    // dL / tvi(L) with dL = L ln(10) dlog10(L), trapezoid rule
    auto integrand = [](double log_l) { return std::log(10.0) * std::pow(10.0, log_l - log_tvi(log_l)); };
    values_[0] = 0.0;
    double prev = integrand(lo_);
    for (std::size_t i = 1; i < kSize; ++i) {
      const double cur = integrand(lo_ + step_ * static_cast<double>(i));
      values_[i] = values_[i - 1] + 0.5 * (prev + cur) * step_;
      prev = cur;
    }
    const double top = values_.back();
    for (double& v : values_)
      v /= top;
  }

  double operator()(double luminance) const
  {
    const double l = std::clamp(luminance, kPuMinLuminance, kPuMaxLuminance);
    const double pos = (std::log10(l) - lo_) / step_;
    if (pos <= 0.0)
      return 0.0;
    const auto i = static_cast<std::size_t>(pos);
    if (i >= kSize - 1)
      return 1.0;
    const double f = pos - static_cast<double>(i);
    return values_[i] + f * (values_[i + 1] - values_[i]);
  }

private:
  double lo_, hi_, step_;
  std::vector<double> values_;
};

const PuTable& pu_table()
{
  static const PuTable table;
  return table;
}

void require_same_geometry(const PlanarImage& a, const PlanarImage& b, const char* what)
{
  if (!a.same_geometry(b))
    throw InputError(std::string(what) + ": images differ in size (" + std::to_string(a.width()) + "x" +
                     std::to_string(a.height()) + "x" + std::to_string(a.channels()) + " vs " +
                     std::to_string(b.width()) + "x" + std::to_string(b.height()) + "x" +
                     std::to_string(b.channels()) + ")");
}

std::vector<double> gaussian_window(const SsimParams& p)
{
  std::vector<double> w(static_cast<std::size_t>(p.window));
  const double c = 0.5 * (p.window - 1);
  double sum = 0.0;
  for (int i = 0; i < p.window; ++i) {
    const double d = i - c;
    w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * p.sigma * p.sigma));
    sum += w[static_cast<std::size_t>(i)];
  }
  for (double& v : w)
    v /= sum;
  return w;
}

// Separable valid-mode filter of a single plane.
std::vector<double> filter_valid(std::span<const double> src, std::size_t w, std::size_t h,
                                 const std::vector<double>& k)
{
  const std::size_t n = k.size();
  const std::size_t ow = w - n + 1, oh = h - n + 1;
  std::vector<double> tmp(ow * h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        acc += k[i] * src[y * w + x + i];
      tmp[y * ow + x] = acc;
    }
  std::vector<double> out(ow * oh);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        acc += k[i] * tmp[(y + i) * ow + x];
      out[y * ow + x] = acc;
    }
  return out;
}

struct SsimParts
{
  double ssim = 0.0;
  double cs = 0.0;  // contrast-structure term alone
};

SsimParts ssim_plane(std::span<const double> a, std::span<const double> b, std::size_t w, std::size_t h,
                     const SsimParams& p, const std::vector<double>& k)
{
  const double c1 = std::pow(p.k1 * p.dynamic_range, 2);
  const double c2 = std::pow(p.k2 * p.dynamic_range, 2);
  std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto mu_a = filter_valid(a, w, h, k);
  const auto mu_b = filter_valid(b, w, h, k);
  const auto e_aa = filter_valid(aa, w, h, k);
  const auto e_bb = filter_valid(bb, w, h, k);
  const auto e_ab = filter_valid(ab, w, h, k);
  double s = 0.0, cs = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double va = e_aa[i] - mu_a[i] * mu_a[i];
    const double vb = e_bb[i] - mu_b[i] * mu_b[i];
    const double cov = e_ab[i] - mu_a[i] * mu_b[i];
    const double c = (2.0 * cov + c2) / (va + vb + c2);
    const double l = (2.0 * mu_a[i] * mu_b[i] + c1) / (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1);
    s += l * c;
    cs += c;
  }
  const double n = static_cast<double>(mu_a.size());
  return {s / n, cs / n};
}

SsimParts ssim_parts(const PlanarImage& a, const PlanarImage& b, const SsimParams& p)
{
  const auto k = gaussian_window(p);
  SsimParts total;
  for (std::size_t c = 0; c < a.channels(); ++c) {
    const auto part = ssim_plane(a.plane(c), b.plane(c), a.width(), a.height(), p, k);
    total.ssim += part.ssim;
    total.cs += part.cs;
  }
  const double n = static_cast<double>(a.channels());
  return {total.ssim / n, total.cs / n};
}

PlanarImage downsample2(const PlanarImage& in)
{
  PlanarImage out(in.width() / 2, in.height() / 2, in.channels());
  for (std::size_t c = 0; c < in.channels(); ++c)
    for (std::size_t y = 0; y < out.height(); ++y)
      for (std::size_t x = 0; x < out.width(); ++x)
        out.at(c, y, x) = 0.25 * (in.at(c, 2 * y, 2 * x) + in.at(c, 2 * y, 2 * x + 1) + in.at(c, 2 * y + 1, 2 * x) +
                                  in.at(c, 2 * y + 1, 2 * x + 1));
  return out;
}

void check_window(const PlanarImage& a, const SsimParams& p)
{
  if (p.window < 1 || !(p.sigma > 0.0))
    throw ConfigError("ssim window must be >= 1 with sigma > 0");
  const auto win = static_cast<std::size_t>(p.window);
  if (a.width() < win || a.height() < win)
    throw InputError("image " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                     " is smaller than the " + std::to_string(win) + "px SSIM window");
}

} // namespace

double pu_curve(double luminance)
{
  return pu_table()(luminance);
}

double percentile(const PlanarImage& img, double pct)
{
  if (img.empty())
    throw InputError("percentile of an empty image");
  std::vector<double> v(img.data().begin(), img.data().end());
  // Nearest rank; the small slack keeps e.g. 99.9% of 3000 at rank 2997.
  const double rank = std::ceil(pct / 100.0 * static_cast<double>(v.size()) - 1e-9);
  const std::size_t idx = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(v.size()))) - 1;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(idx), v.end());
  return v[idx];
}

PuAnchor make_anchor(const HdrImage& anchor)
{
  anchor.validate();
  double ref = percentile(anchor, kAnchorPercentile);
  if (!(ref > 0.0))
    ref = anchor.max_value();
  if (!(ref > 0.0))
    throw InputError("PU anchor image is all zero");
  return PuAnchor{kAnchorLuminance / ref, ref, kAnchorLuminance};
}

PuImage pu_encode(const HdrImage& h, const PuAnchor& anchor)
{
  h.validate();
  PuImage out(h.width(), h.height(), h.channels());
  out.anchor = anchor;
  auto src = h.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i)
    dst[i] = pu_curve(src[i] * anchor.scale);
  return out;
}

PuImage pu_encode(const HdrImage& h, const HdrImage& anchor)
{
  return pu_encode(h, make_anchor(anchor));
}

double psnr(const PlanarImage& a, const PlanarImage& b)
{
  require_same_geometry(a, b, "psnr");
  if (a.empty())
    throw InputError("psnr: empty images");
  double se = 0.0;
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i)
    se += (x[i] - y[i]) * (x[i] - y[i]);
  const double mse = se / static_cast<double>(x.size());
  if (mse == 0.0)
    return kPsnrCapDb;
  return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
}

double ssim(const PlanarImage& a, const PlanarImage& b, const SsimParams& p)
{
  require_same_geometry(a, b, "ssim");
  check_window(a, p);
  return ssim_parts(a, b, p).ssim;
}

std::size_t ms_ssim_scales(std::size_t min_dim, const SsimParams& p)
{
  std::size_t scales = 0;
  for (std::size_t d = min_dim; scales < kMsSsimWeights.size() && d >= static_cast<std::size_t>(p.window); d /= 2)
    ++scales;
  return scales;
}

double ms_ssim(const PlanarImage& a, const PlanarImage& b, const SsimParams& p)
{
  require_same_geometry(a, b, "ms_ssim");
  check_window(a, p);
  const std::size_t scales = ms_ssim_scales(std::min(a.width(), a.height()), p);
  double wsum = 0.0;
  for (std::size_t i = 0; i < scales; ++i)
    wsum += kMsSsimWeights[i];

  PlanarImage x = a, y = b;
  double result = 1.0;
  for (std::size_t i = 0; i < scales; ++i) {
    const auto parts = ssim_parts(x, y, p);
    const double w = kMsSsimWeights[i] / wsum;
    // Negative components would make the fractional power undefined.
    const double term = i + 1 == scales ? parts.ssim : parts.cs;
    result *= std::pow(std::max(term, 0.0), w);
    if (i + 1 < scales) {
      x = downsample2(x);
      y = downsample2(y);
    }
  }
  return result;
}

MetricRow score_pair(const HdrImage& pred, const HdrImage& ref, const std::string& name)
{
  require_same_geometry(pred, ref, name.empty() ? "score" : name.c_str());
  const PuAnchor anchor = make_anchor(ref);
  const PuImage p = pu_encode(pred, anchor);
  const PuImage r = pu_encode(ref, anchor);
  return MetricRow{name, psnr(p, r), ssim(p, r), ms_ssim(p, r)};
}

namespace {

std::map<std::string, std::filesystem::path> list_hdr_files(const std::filesystem::path& dir)
{
  if (!std::filesystem::is_directory(dir))
    throw InputError("not a directory: " + dir.string());
  std::map<std::string, std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file())
      continue;
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext != ".hdr" && ext != ".pfm")
      continue;
    const auto stem = e.path().stem().string();
    auto it = out.find(stem);
    if (it == out.end() || e.path().filename() < it->second.filename())
      out[stem] = e.path();
  }
  return out;
}

} // namespace

MetricReport evaluate(const std::filesystem::path& pred_dir, const std::filesystem::path& ref_dir,
                      const std::filesystem::path& out_csv)
{
  const auto preds = list_hdr_files(pred_dir);
  const auto refs = list_hdr_files(ref_dir);

  MetricReport report;
  for (const auto& [stem, path] : preds)
    if (!refs.count(stem))
      report.missing.push_back("reference missing for " + path.filename().string());
  for (const auto& [stem, path] : refs)
    if (!preds.count(stem))
      report.missing.push_back("prediction missing for " + path.filename().string());
  for (const auto& m : report.missing)
    log::warn(m);

  for (const auto& [stem, ref_path] : refs) {
    auto it = preds.find(stem);
    if (it == preds.end())
      continue;
    const HdrImage pred = read_hdr_image(it->second);
    const HdrImage ref = read_hdr_image(ref_path);
    report.rows.push_back(score_pair(pred, ref, ref_path.filename().string()));
  }
  if (report.rows.empty())
    throw InputError("no prediction/reference pairs in " + pred_dir.string() + " and " + ref_dir.string());

  report.mean.filename = "mean";
  for (const auto& r : report.rows) {
    report.mean.pu_psnr_db += r.pu_psnr_db;
    report.mean.pu_ssim += r.pu_ssim;
    report.mean.pu_ms_ssim += r.pu_ms_ssim;
  }
  const double n = static_cast<double>(report.rows.size());
  report.mean.pu_psnr_db /= n;
  report.mean.pu_ssim /= n;
  report.mean.pu_ms_ssim /= n;

  const SsimParams sp;
  report.echo = {{"pred_dir", pred_dir.string()},
                 {"ref_dir", ref_dir.string()},
                 {"anchor_luminance", kAnchorLuminance},
                 {"anchor_percentile", kAnchorPercentile},
                 {"pu_range", {kPuMinLuminance, kPuMaxLuminance}},
                 {"psnr_cap_db", kPsnrCapDb},
                 {"ssim", {{"window", sp.window}, {"sigma", sp.sigma}, {"k1", sp.k1}, {"k2", sp.k2}}},
                 {"ms_ssim_weights", kMsSsimWeights},
                 {"images", report.rows.size()},
                 {"missing", report.missing},
                 {"mean",
                  {{"pu_psnr_db", report.mean.pu_psnr_db},
                   {"pu_ssim", report.mean.pu_ssim},
                   {"pu_ms_ssim", report.mean.pu_ms_ssim}}}};
  write_metric_csv(out_csv, report);
  std::filesystem::path sidecar = out_csv;
  sidecar += ".json";
  std::ofstream js(sidecar);
  js << report.echo.dump(2) << '\n';
  if (!js)
    throw RuntimeError("cannot write " + sidecar.string());
  return report;
}

void write_metric_csv(const std::filesystem::path& path, const MetricReport& report)
{
  std::ofstream out(path);
  if (!out)
    throw RuntimeError("cannot write " + path.string());
  out << "filename,pu_psnr_db,pu_ssim,pu_ms_ssim\n" << std::setprecision(9);
  auto row = [&](const MetricRow& r) {
    out << r.filename << ',' << r.pu_psnr_db << ',' << r.pu_ssim << ',' << r.pu_ms_ssim << '\n';
  };
  for (const auto& r : report.rows)
    row(r);
  row(report.mean);
  if (!out)
    throw RuntimeError("write failed for " + path.string());
}

} // namespace itm
