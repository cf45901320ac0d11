// Scores predictions against ground truth and aggregates external scores.

#include "vinpaint/metrics.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

int rank_reports(const std::vector<std::string>& files) {
    std::vector<vinpaint::MetricReport> reports;
    for (const auto& f : files) {
        std::ifstream in(f);
        if (!in) throw vinpaint::MetricsError("cannot open " + f);
        reports.push_back(vinpaint::MetricReport::from_json(nlohmann::json::parse(in)));
        if (reports.back().name.empty()) reports.back().name = f;
    }
    const auto order = vinpaint::rank(reports);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto& r = reports[order[i]];
        std::cout << i + 1 << ' ' << r.name << " c_error=" << *r.c_error << " a_error=" << *r.a_error << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pixel metrics and A-Error / C-Error aggregation"};
    std::string pred, gt, masks, external, weights = "0.5,0.5,0.5,0.5", report, name;
    std::vector<std::string> rank_files;

    app.add_option("--pred", pred, "Directory of predicted frames");
    app.add_option("--gt", gt, "Directory of ground-truth frames");
    app.add_option("--masks", masks, "Directory of masks; restricts MAE/PSNR to hole pixels");
    app.add_option("--external", external, "JSON with w_fid, w_lpips (and optionally w_mae, w_psnr)");
    app.add_option("--weights", weights, "alpha_mae,alpha_psnr,beta_fid,beta_lpips")->capture_default_str();
    app.add_option("--report", report, "Write the JSON metric report here");
    app.add_option("--name", name, "Scene or entry name stored in the report");
    app.add_option("--rank", rank_files, "Rank existing report files instead of scoring");
    CLI11_PARSE(app, argc, argv);

    try {
        if (!rank_files.empty()) return rank_reports(rank_files);
        const auto w = vinpaint::AggregationWeights::parse(weights);
        vinpaint::MetricReport r;
        r.name = name;
        if (!pred.empty() || !gt.empty()) {
            if (pred.empty() || gt.empty()) throw vinpaint::MetricsError("--pred and --gt go together");
            const auto p = vinpaint::load_frames(pred);
            const auto g = vinpaint::load_frames(gt);
            std::vector<vinpaint::Mask> m;
            if (!masks.empty()) m = vinpaint::load_masks(masks);
            const auto* mp = masks.empty() ? nullptr : &m;
            r.mae = vinpaint::mae(p, g, mp);
            r.psnr = vinpaint::psnr(p, g, mp);
        }
        if (!external.empty()) r.attach(vinpaint::ingest_external(external));
        r.update_aggregates(w);
        r.validate();
        const std::string text = r.to_json().dump(2);
        if (report.empty()) {
            std::cout << text << '\n';
        } else {
            std::ofstream out(report);
            if (!out) throw vinpaint::MetricsError("cannot write " + report);
            out << text << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "evaluate: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
