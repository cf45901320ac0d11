// Command-line front end: inpaint one scene directory.

#include "vinpaint/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Flow-guided video inpainting of a PNG frame sequence"};
    vinpaint::RunOptions opt;
    std::string mode = "classical";
    std::string weights;
    std::string report;

    app.add_option("--frames", opt.frames_dir, "Directory of RGB frames (*.png)")->required();
    app.add_option("--masks", opt.masks_dir, "Directory of masks (*.png, >= 128 is occluded)")->required();
    app.add_option("--out", opt.out_dir, "Output directory")->required();
    app.add_option("--scale", opt.cfg.scale_factor, "Processing scale factor")->capture_default_str();
    app.add_option("--dilate", opt.cfg.dilation_radius, "Mask dilation radius (processing pixels)")->capture_default_str();
    app.add_option("--neighbors", opt.cfg.neighbor_count, "Local frames per output frame")->capture_default_str();
    app.add_option("--ref-stride", opt.cfg.ref_stride, "Global reference stride")->capture_default_str();
    app.add_option("--eps-flow", opt.cfg.eps_flow, "Flow consistency threshold (pixels)")->capture_default_str();
    app.add_option("--mode", mode, "classical | neural")->capture_default_str();
    app.add_option("--weights", weights, "Tensor file for neural mode");
    app.add_option("--budget", opt.cfg.resident_budget, "Max resident frames (0 = automatic)")->capture_default_str();
    app.add_option("--report", report, "Write a JSON run report");
    CLI11_PARSE(app, argc, argv);

    try {
        opt.cfg.mode = vinpaint::parse_mode(mode);
        if (!weights.empty()) opt.cfg.weights_path = weights;
        if (!report.empty()) opt.report_path = report;
        const vinpaint::RunStats stats = vinpaint::run_inpaint(opt);
        std::cout << stats.frames << " frames written to " << opt.out_dir.string() << " (" << stats.frames_inpainted
                  << " inpainted, peak " << stats.peak_resident_frames << " resident frames)\n";
    } catch (const std::exception& e) {
        std::cerr << "inpaint: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
