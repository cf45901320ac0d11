#include "vinpaint/metrics.hpp"

#include "vinpaint/image_io.hpp"
#include "vinpaint/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace vinpaint {

namespace {

constexpr std::size_t kPairwiseBlock = 64;

struct ErrorSums {
    double abs = 0;
    double sq = 0;
    std::size_t count = 0;
};

ErrorSums accumulate_errors(const std::vector<Frame>& pred, const std::vector<Frame>& gt,
                            const std::vector<Mask>* masks) {
    if (pred.size() != gt.size()) throw ShapeError("metrics: sequence lengths differ");
    if (masks && masks->size() != pred.size()) throw ShapeError("metrics: mask count differs from frame count");
    std::vector<double> frame_abs, frame_sq;
    std::vector<double> abs_err, sq_err;
    std::size_t count = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const Frame& p = pred[i];
        const Frame& g = gt[i];
        if (!p.same_shape(g)) throw ShapeError("metrics: frame " + std::to_string(i) + " shapes differ");
        if (masks && !(*masks)[i].same_dims(p.height(), p.width())) {
            throw ShapeError("metrics: mask " + std::to_string(i) + " dims differ from the frame");
        }
        abs_err.clear();
        sq_err.clear();
        for (int y = 0; y < p.height(); ++y) {
            for (int x = 0; x < p.width(); ++x) {
                if (masks && !(*masks)[i].at(y, x)) continue;
                for (int c = 0; c < p.channels(); ++c) {
                    const double d = (p.at(y, x, c) - g.at(y, x, c)) * 255.0;
                    abs_err.push_back(std::abs(d));
                    sq_err.push_back(d * d);
                }
            }
        }
        count += abs_err.size();
        frame_abs.push_back(pairwise_sum(abs_err));
        frame_sq.push_back(pairwise_sum(sq_err));
    }
    return {pairwise_sum(frame_abs), pairwise_sum(frame_sq), count};
}

double finite_field(const nlohmann::json& doc, const char* key) {
    const auto it = doc.find(key);
    if (it == doc.end()) throw MetricsError(std::string("missing field ") + key);
    if (!it->is_number()) throw MetricsError(std::string("field ") + key + " is not a number");
    const double v = it->get<double>();
    if (!std::isfinite(v)) throw MetricsError(std::string("field ") + key + " is not finite");
    return v;
}

std::optional<double> optional_field(const nlohmann::json& doc, const char* key) {
    if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
    return finite_field(doc, key);
}

void check_pair(double a, double b, const char* what) {
    if (!(std::isfinite(a) && std::isfinite(b)) || a < 0 || b < 0) {
        throw MetricsError(std::string(what) + " weights must be finite and non-negative");
    }
    if (std::abs(a + b - 1.0) > 1e-9) throw MetricsError(std::string(what) + " weights must sum to 1");
}

void put_optional(nlohmann::json& j, const char* key, const std::optional<double>& v) {
    j[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= kPairwiseBlock) return std::accumulate(values.begin(), values.end(), 0.0);
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double mae(const std::vector<Frame>& pred, const std::vector<Frame>& gt, const std::vector<Mask>* masks) {
    const ErrorSums s = accumulate_errors(pred, gt, masks);
    return s.count == 0 ? 0.0 : s.abs / static_cast<double>(s.count);
}

double psnr(const std::vector<Frame>& pred, const std::vector<Frame>& gt, const std::vector<Mask>* masks) {
    const ErrorSums s = accumulate_errors(pred, gt, masks);
    if (s.count == 0 || s.sq == 0.0) return kPsnrCap;
    const double mse = s.sq / static_cast<double>(s.count);
    return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

ExternalScores parse_external(const nlohmann::json& doc) {
    if (!doc.is_object()) throw MetricsError("external scores must be a JSON object");
    ExternalScores s;
    s.w_fid = finite_field(doc, "w_fid");
    s.w_lpips = finite_field(doc, "w_lpips");
    s.w_mae = optional_field(doc, "w_mae");
    s.w_psnr = optional_field(doc, "w_psnr");
    return s;
}

ExternalScores ingest_external(const std::filesystem::path& scores_file) {
    std::ifstream in(scores_file);
    if (!in) throw MetricsError("cannot open " + scores_file.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw MetricsError(scores_file.string() + ": " + e.what());
    }
    return parse_external(doc);
}

void AggregationWeights::validate() const {
    check_pair(alpha_mae, alpha_psnr, "accuracy");
    check_pair(beta_fid, beta_lpips, "consistency");
}

AggregationWeights AggregationWeights::parse(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double x = 0;
        try {
            x = std::stod(item, &used);
        } catch (const std::exception&) {
            throw MetricsError("bad weight '" + item + "'");
        }
        if (item.find_first_not_of(" \t", used) != std::string::npos) throw MetricsError("bad weight '" + item + "'");
        v.push_back(x);
    }
    if (v.size() != 4) throw MetricsError("expected four comma-separated weights, got '" + text + "'");
    AggregationWeights w{v[0], v[1], v[2], v[3]};
    w.validate();
    return w;
}

Aggregates aggregate(const NormalizedScores& n, const AggregationWeights& w) {
    w.validate();
    for (double v : {n.w_mae, n.w_psnr, n.w_fid, n.w_lpips}) {
        if (!std::isfinite(v)) throw MetricsError("aggregate: normalized scores must be finite");
    }
    return {w.alpha_mae * n.w_mae + w.alpha_psnr * n.w_psnr, w.beta_fid * n.w_fid + w.beta_lpips * n.w_lpips};
}

void MetricReport::attach(const ExternalScores& scores) {
    w_fid = scores.w_fid;
    w_lpips = scores.w_lpips;
    if (scores.w_mae) w_mae = scores.w_mae;
    if (scores.w_psnr) w_psnr = scores.w_psnr;
}

void MetricReport::update_aggregates(const AggregationWeights& w) {
    if (w_mae && w_psnr && w_fid && w_lpips) {
        const Aggregates a = aggregate({*w_mae, *w_psnr, *w_fid, *w_lpips}, w);
        a_error = a.a_error;
        c_error = a.c_error;
    } else {
        a_error.reset();
        c_error.reset();
    }
}

void MetricReport::validate() const {
    for (const auto* v : {&mae, &psnr, &w_mae, &w_psnr, &w_fid, &w_lpips, &a_error, &c_error}) {
        if (*v && !std::isfinite(**v)) throw MetricsError("report '" + name + "' has a non-finite value");
    }
    const bool all_norm = w_mae && w_psnr && w_fid && w_lpips;
    if (a_error.has_value() != all_norm || c_error.has_value() != all_norm) {
        throw MetricsError("report '" + name + "': aggregates must be present exactly when all normalized scores are");
    }
}

nlohmann::json MetricReport::to_json() const {
    nlohmann::json j;
    j["name"] = name;
    put_optional(j["raw"], "mae", mae);
    put_optional(j["raw"], "psnr", psnr);
    put_optional(j["normalized"], "w_mae", w_mae);
    put_optional(j["normalized"], "w_psnr", w_psnr);
    put_optional(j["normalized"], "w_fid", w_fid);
    put_optional(j["normalized"], "w_lpips", w_lpips);
    put_optional(j["aggregates"], "a_error", a_error);
    put_optional(j["aggregates"], "c_error", c_error);
    return j;
}

MetricReport MetricReport::from_json(const nlohmann::json& doc) {
    static const nlohmann::json empty = nlohmann::json::object();
    auto section = [&](const char* key) -> const nlohmann::json& {
        return doc.contains(key) && doc.at(key).is_object() ? doc.at(key) : empty;
    };
    if (!doc.is_object()) throw MetricsError("report must be a JSON object");
    MetricReport r;
    if (doc.contains("name")) r.name = doc.at("name").get<std::string>();
    r.mae = optional_field(section("raw"), "mae");
    r.psnr = optional_field(section("raw"), "psnr");
    r.w_mae = optional_field(section("normalized"), "w_mae");
    r.w_psnr = optional_field(section("normalized"), "w_psnr");
    r.w_fid = optional_field(section("normalized"), "w_fid");
    r.w_lpips = optional_field(section("normalized"), "w_lpips");
    r.a_error = optional_field(section("aggregates"), "a_error");
    r.c_error = optional_field(section("aggregates"), "c_error");
    return r;
}

std::vector<std::size_t> rank(const std::vector<MetricReport>& reports) {
    for (const auto& r : reports) {
        if (!r.a_error || !r.c_error) throw MetricsError("rank: report '" + r.name + "' has no aggregates");
    }
    std::vector<std::size_t> order(reports.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const MetricReport& x = reports[a];
        const MetricReport& y = reports[b];
        if (*x.c_error != *y.c_error) return *x.c_error < *y.c_error;
        if (*x.a_error != *y.a_error) return *x.a_error < *y.a_error;
        return x.name < y.name;
    });
    return order;
}

std::vector<Frame> load_frames(const std::filesystem::path& dir) {
    std::vector<Frame> out;
    for (const auto& p : list_png_files(dir)) out.push_back(to_frame(read_png(p, 3)));
    return out;
}

std::vector<Mask> load_masks(const std::filesystem::path& dir) {
    std::vector<Mask> out;
    for (const auto& p : list_png_files(dir)) out.push_back(to_mask(read_png(p, 1)));
    return out;
}

}  // namespace vinpaint
