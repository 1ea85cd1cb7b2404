// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dpl/image.hpp"
#include "dpl/networks.hpp"
#include "dpl/synthetic.hpp"

namespace dpl::inline DPL_PRECISION_NS {

/// DFD: mean over taps of the mean squared difference between features that
/// are unit-normalised per spatial position across channels, averaged over
/// every flip/rotation applied jointly to both images (the four flips and
/// half turns when the images are not square).
double feature_distance(const Image& a, const Image& b, const FeatureNetPsi& psi);

inline const std::string kAllMetrics[] = {"psnr", "ms_ssim", "dfd"};

struct MetricRow {
  std::string id;
  double psnr = 0.0;
  double ms_ssim = 0.0;
  double dfd = 0.0;
};

struct MetricReport {
  std::vector<MetricRow> rows;
  MetricRow mean;  // id "mean"

  std::size_t count() const noexcept { return rows.size(); }
};

/// Aggregates rows into a report; the mean row is the arithmetic mean of
/// each column (+inf propagates).
MetricReport make_report(std::vector<MetricRow> rows);

/// Scores F(x) against y for every pair; ids are 1-based, zero-padded to 4.
MetricReport evaluate(const GeneratorF& f, const FeatureNetPsi& psi, std::span<const ImagePair> pairs);

/// id,psnr,ms_ssim,dfd with a trailing mean row. Columns not named in
/// `metrics` are left empty.
std::string report_csv(const MetricReport& report, std::span<const std::string> metrics = kAllMetrics);
void write_report_csv(const MetricReport& report, const std::filesystem::path& path,
                      std::span<const std::string> metrics = kAllMetrics);

/// Shortest round-trip decimal; "inf"/"-inf"/"nan" for non-finite values.
std::string format_number(double value);

}  // namespace dpl::inline DPL_PRECISION_NS
