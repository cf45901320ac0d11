// Writes a seeded random weight file for --mode neural.

#include "vinpaint/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Generate a seeded random neural weight file"};
    std::string out;
    std::uint64_t seed = 1;
    vinpaint::MsvtConfig cfg;
    app.add_option("--out", out, "Output tensor file")->required();
    app.add_option("--seed", seed, "Random seed")->capture_default_str();
    app.add_option("--depth", cfg.depth, "Transformer blocks")->capture_default_str();
    app.add_option("--ffn-expansion", cfg.ffn_expansion, "FFN hidden width multiplier")->capture_default_str();
    CLI11_PARSE(app, argc, argv);
    try {
        vinpaint::NeuralWeights::random(seed, cfg).to_bundle().save(out);
    } catch (const std::exception& e) {
        std::cerr << "make_weights: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
