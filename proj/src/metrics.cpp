// SPDX-License-Identifier: Apache-2.0
#include "dpl/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "dpl/image_tensor.hpp"
#include "dpl/quality.hpp"
#include "dpl/transforms.hpp"

namespace dpl::inline DPL_PRECISION_NS {
namespace {

// Per-position unit vectors of a [C,H,W] tap; zero vectors stay zero.
std::vector<double> unit_columns(const Tensor& tap) {
  const std::size_t C = tap.dim(0), P = tap.dim(1) * tap.dim(2);
  const auto v = tap.data();
  std::vector<double> out(C * P);
  for (std::size_t p = 0; p < P; ++p) {
    double n2 = 0.0;
    for (std::size_t c = 0; c < C; ++c) n2 += static_cast<double>(v[c * P + p]) * static_cast<double>(v[c * P + p]);
    const double inv = n2 > 0.0 ? 1.0 / std::sqrt(n2) : 0.0;
    for (std::size_t c = 0; c < C; ++c) out[c * P + p] = static_cast<double>(v[c * P + p]) * inv;
  }
  return out;
}

double single_view_distance(const Image& a, const Image& b, const FeatureNetPsi& psi) {
  Tape tape;
  const auto fa = psi.forward(tape, image_to_tensor(a));
  const auto fb = psi.forward(tape, image_to_tensor(b));
  double total = 0.0;
  for (std::size_t t = 0; t < fa.size(); ++t) {
    const auto ua = unit_columns(fa[t]);
    const auto ub = unit_columns(fb[t]);
    double s = 0.0;
    for (std::size_t i = 0; i < ua.size(); ++i) s += (ua[i] - ub[i]) * (ua[i] - ub[i]);
    total += s / static_cast<double>(ua.size());
  }
  return total / static_cast<double>(fa.size());
}

}  // namespace

double feature_distance(const Image& a, const Image& b, const FeatureNetPsi& psi) {
  if (a.height() != b.height() || a.width() != b.width())
    throw std::invalid_argument("feature_distance: image extents differ");
  if (a.height() % 4 != 0 || a.width() % 4 != 0)
    throw std::invalid_argument("feature_distance: extent must be divisible by 4");
  // Every flip/rotation of the pair, so a joint transform of both inputs only
  // permutes the terms. Sorting fixes the summation order.
  std::vector<AugmentDraw> views;
  const int turn_step = a.height() == a.width() ? 1 : 2;
  for (int flip = 0; flip < 2; ++flip)
    for (int turns = 0; turns < 4; turns += turn_step) views.push_back({flip == 1, false, turns});
  std::vector<double> terms;
  for (const auto& v : views) terms.push_back(single_view_distance(apply_augment(a, v), apply_augment(b, v), psi));
  std::sort(terms.begin(), terms.end());
  double total = 0.0;
  for (double t : terms) total += t;
  return total / static_cast<double>(terms.size());
}

MetricReport make_report(std::vector<MetricRow> rows) {
  if (rows.empty()) throw std::invalid_argument("metric report needs at least one image");
  MetricReport r;
  r.rows = std::move(rows);
  r.mean.id = "mean";
  for (const auto& row : r.rows) {
    r.mean.psnr += row.psnr;
    r.mean.ms_ssim += row.ms_ssim;
    r.mean.dfd += row.dfd;
  }
  const double n = static_cast<double>(r.rows.size());
  r.mean.psnr /= n;
  r.mean.ms_ssim /= n;
  r.mean.dfd /= n;
  return r;
}

MetricReport evaluate(const GeneratorF& f, const FeatureNetPsi& psi, std::span<const ImagePair> pairs) {
  std::vector<MetricRow> rows;
  rows.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    Tape tape;
    const Image out = tensor_to_image(f.forward(tape, image_to_tensor(pairs[i].x)));
    char id[24];
    std::snprintf(id, sizeof id, "%04zu", i + 1);
    rows.push_back({id, psnr(out, pairs[i].y), ms_ssim(out, pairs[i].y), feature_distance(out, pairs[i].y, psi)});
  }
  return make_report(std::move(rows));
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string report_csv(const MetricReport& report, std::span<const std::string> metrics) {
  auto wanted = [&](const char* name) { return std::find(metrics.begin(), metrics.end(), name) != metrics.end(); };
  const bool p = wanted("psnr"), m = wanted("ms_ssim"), d = wanted("dfd");
  std::string out = "id,psnr,ms_ssim,dfd\n";
  auto line = [&](const MetricRow& r) {
    out += r.id + "," + (p ? format_number(r.psnr) : "") + "," + (m ? format_number(r.ms_ssim) : "") + "," +
           (d ? format_number(r.dfd) : "") + "\n";
  };
  for (const auto& r : report.rows) line(r);
  line(report.mean);
  return out;
}

void write_report_csv(const MetricReport& report, const std::filesystem::path& path,
                      std::span<const std::string> metrics) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write report '" + path.string() + "'");
  out << report_csv(report, metrics);
  if (!out) throw std::runtime_error("failed writing report '" + path.string() + "'");
}

}  // namespace dpl::inline DPL_PRECISION_NS
