#pragma once

// Pixel metrics on the 8-bit scale and the A-Error / C-Error aggregation.

#include "vinpaint/feature_map.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vinpaint {

constexpr double kPsnrCap = 99.0;

class MetricsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Pairwise (cascade) summation; the reduction tree depends only on the length.
double pairwise_sum(std::span<const double> values);

/// Mean |pred - gt| * 255 over every channel of the included pixels. With
/// masks, only hole pixels are included. No included pixels gives 0.
double mae(const std::vector<Frame>& pred, const std::vector<Frame>& gt, const std::vector<Mask>* masks = nullptr);

/// 10 log10(255^2 / MSE) on the 8-bit scale, capped at kPsnrCap.
double psnr(const std::vector<Frame>& pred, const std::vector<Frame>& gt, const std::vector<Mask>* masks = nullptr);

struct ExternalScores {
    double w_fid = 0;
    double w_lpips = 0;
    std::optional<double> w_mae;
    std::optional<double> w_psnr;
};

ExternalScores parse_external(const nlohmann::json& doc);
ExternalScores ingest_external(const std::filesystem::path& scores_file);

struct AggregationWeights {
    double alpha_mae = 0.5;
    double alpha_psnr = 0.5;
    double beta_fid = 0.5;
    double beta_lpips = 0.5;

    void validate() const;
    /// "alpha_mae,alpha_psnr,beta_fid,beta_lpips"
    static AggregationWeights parse(const std::string& text);
};

struct NormalizedScores {
    double w_mae = 0;
    double w_psnr = 0;
    double w_fid = 0;
    double w_lpips = 0;
};

struct Aggregates {
    double a_error = 0;
    double c_error = 0;
};

Aggregates aggregate(const NormalizedScores& norm, const AggregationWeights& w = {});

struct MetricReport {
    std::string name;
    std::optional<double> mae;
    std::optional<double> psnr;
    std::optional<double> w_mae;
    std::optional<double> w_psnr;
    std::optional<double> w_fid;
    std::optional<double> w_lpips;
    std::optional<double> a_error;
    std::optional<double> c_error;

    void attach(const ExternalScores& scores);
    /// Fills a_error / c_error when all four normalized values are present,
    /// clears them otherwise.
    void update_aggregates(const AggregationWeights& w = {});
    void validate() const;

    nlohmann::json to_json() const;
    static MetricReport from_json(const nlohmann::json& doc);
};

/// Indices of `reports` sorted by c_error, then a_error, then name.
std::vector<std::size_t> rank(const std::vector<MetricReport>& reports);

/// Sorted PNG frames of a directory as unit-interval RGB.
std::vector<Frame> load_frames(const std::filesystem::path& dir);
std::vector<Mask> load_masks(const std::filesystem::path& dir);

}  // namespace vinpaint
