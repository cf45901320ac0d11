#include "leaderboard.hpp"
#include "scenes.hpp"

#include "vinpaint/metrics.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <limits>

using namespace vinpaint;
namespace fs = std::filesystem;

namespace {

std::vector<Frame> constant_seq(int n, double v) { return std::vector<Frame>(n, FeatureMap(6, 8, 3, v)); }

std::vector<Frame> offset(std::vector<Frame> seq, double d) {
    for (auto& f : seq) {
        for (auto& v : f.data()) v += d;
    }
    return seq;
}

fs::path write_json(const fs::path& dir, const std::string& name, const std::string& text) {
    const fs::path p = dir / name;
    std::ofstream(p) << text;
    return p;
}

}  // namespace

TEST_CASE("mae: examples") {
    const auto gt = constant_seq(3, 0.4);
    CHECK(mae(gt, gt) == 0.0);
    CHECK(mae(offset(gt, 10.0 / 255.0), gt) == doctest::Approx(10.0).epsilon(1e-12));

    // Offset only on the left half; the mask selects that half.
    auto pred = gt;
    std::vector<Mask> masks;
    for (auto& f : pred) {
        for (int y = 0; y < 6; ++y) {
            for (int x = 0; x < 4; ++x) {
                for (int c = 0; c < 3; ++c) f.at(y, x, c) += 10.0 / 255.0;
            }
        }
        masks.push_back(oracle::rect_mask(6, 8, 0, 0, 6, 4));
    }
    CHECK(mae(pred, gt, &masks) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(mae(pred, gt) == doctest::Approx(5.0).epsilon(1e-12));
    const std::vector<Mask> none(3, Mask(6, 8));
    CHECK(mae(pred, gt, &none) == 0.0);
}

TEST_CASE("psnr: examples") {
    const auto gt = constant_seq(2, 0.4);
    CHECK(psnr(gt, gt) == kPsnrCap);
    CHECK(psnr(offset(gt, 10.0 / 255.0), gt) == doctest::Approx(20.0 * std::log10(25.5)).epsilon(1e-12));
    CHECK(psnr(offset(gt, 10.0 / 255.0), gt) == doctest::Approx(28.13).epsilon(1e-4));
    CHECK(psnr(constant_seq(2, 0.0), constant_seq(2, 1.0)) == doctest::Approx(0.0));
}

TEST_CASE("pixel metrics: shape errors") {
    const auto a = constant_seq(2, 0.1);
    CHECK_THROWS_AS(mae(a, constant_seq(3, 0.1)), ShapeError);
    CHECK_THROWS_AS(psnr(a, std::vector<Frame>(2, FeatureMap(6, 9, 3))), ShapeError);
    const std::vector<Mask> wrong(2, Mask(5, 8));
    CHECK_THROWS_AS(mae(a, a, &wrong), ShapeError);
    const std::vector<Mask> short_masks(1, Mask(6, 8));
    CHECK_THROWS_AS(psnr(a, a, &short_masks), ShapeError);
}

TEST_CASE("pixel metrics: properties on random data") {
    oracle::Rng rng(90);
    for (int trial = 0; trial < 20; ++trial) {
        const int h = rng.integer(1, 20), w = rng.integer(1, 20);
        std::vector<Frame> gt, pred;
        for (int i = 0; i < 3; ++i) {
            gt.push_back(oracle::random_map(rng, h, w, 3, 0, 1));
            pred.push_back(oracle::random_map(rng, h, w, 3, 0, 1));
        }
        // Direct mean over every sample.
        double sum = 0, sq = 0;
        for (std::size_t i = 0; i < gt.size(); ++i) {
            for (std::size_t k = 0; k < gt[i].data().size(); ++k) {
                const double d = (pred[i].data()[k] - gt[i].data()[k]) * 255.0;
                sum += std::abs(d);
                sq += d * d;
            }
        }
        const double n = 3.0 * h * w * 3;
        CHECK(mae(pred, gt) == doctest::Approx(sum / n).epsilon(1e-12));
        CHECK(psnr(pred, gt) == doctest::Approx(10 * std::log10(255.0 * 255.0 / (sq / n))).epsilon(1e-12));
        CHECK(mae(pred, gt) > 0.0);
        // PSNR falls as the error grows.
        CHECK(psnr(offset(gt, 0.02), gt) > psnr(offset(gt, 0.03), gt));
    }
}

TEST_CASE("pairwise_sum is exact on small integers and order-stable") {
    std::vector<double> v(1000);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
    CHECK(pairwise_sum(v) == 499500.0);
    CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
}

TEST_CASE("external scores: ingestion") {
    const fs::path dir = scenes::temp_dir("external");
    const ExternalScores s = ingest_external(write_json(dir, "a.json", R"({"w_fid": 0.224, "w_lpips": 0.329})"));
    CHECK(s.w_fid == 0.224);
    CHECK(s.w_lpips == 0.329);
    CHECK(!s.w_mae);
    const ExternalScores zero = ingest_external(write_json(dir, "b.json", R"({"w_fid": 0.0, "w_lpips": 0.0})"));
    CHECK(zero.w_fid == 0.0);
    const ExternalScores full =
        ingest_external(write_json(dir, "c.json", R"({"w_fid": 0.1, "w_lpips": 0.2, "w_mae": 0.3, "w_psnr": 0.4})"));
    CHECK(full.w_psnr == 0.4);
    CHECK_THROWS_AS(ingest_external(write_json(dir, "d.json", R"({"w_fid": "x"})")), MetricsError);
    CHECK_THROWS_AS(ingest_external(write_json(dir, "e.json", R"({"w_fid": 0.1})")), MetricsError);
    CHECK_THROWS_AS(ingest_external(write_json(dir, "f.json", R"({"w_fid": 0.1, "w_lpips": 1e999})")), MetricsError);
    CHECK_THROWS_AS(ingest_external(write_json(dir, "g.json", "{not json")), MetricsError);
    CHECK_THROWS_AS(ingest_external(dir / "missing.json"), MetricsError);
    fs::remove_all(dir);
}

TEST_CASE("aggregate: published rows") {
    const Aggregates local = aggregate(leaderboard::kLocal.scores);
    CHECK(std::abs(local.a_error - leaderboard::kLocal.a_error) <= 0.001);
    CHECK(std::abs(local.c_error - leaderboard::kLocal.c_error) <= 0.001);
    CHECK(local.a_error == doctest::Approx(0.2625));
    CHECK(local.c_error == doctest::Approx(0.2765));
    for (const auto& row : leaderboard::kOnline) {
        const Aggregates a = aggregate(row.scores);
        CHECK(std::abs(a.a_error - row.a_error) <= 0.001);
        CHECK(std::abs(a.c_error - row.c_error) <= 0.001);
    }
    const Aggregates zero = aggregate({0, 0, 0, 0});
    CHECK(zero.a_error == 0.0);
    CHECK(zero.c_error == 0.0);
}

TEST_CASE("aggregate: linearity and scaling") {
    oracle::Rng rng(91);
    for (int trial = 0; trial < 50; ++trial) {
        const double am = rng.uniform(), bf = rng.uniform();
        const AggregationWeights w{am, 1 - am, bf, 1 - bf};
        const NormalizedScores x{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
        const NormalizedScores y{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
        const double s = rng.uniform(0.1, 10);
        const Aggregates ax = aggregate(x, w), ay = aggregate(y, w);
        const Aggregates sum = aggregate({x.w_mae + y.w_mae, x.w_psnr + y.w_psnr, x.w_fid + y.w_fid, x.w_lpips + y.w_lpips}, w);
        CHECK(sum.a_error == doctest::Approx(ax.a_error + ay.a_error));
        CHECK(sum.c_error == doctest::Approx(ax.c_error + ay.c_error));
        const Aggregates scaled = aggregate({s * x.w_mae, s * x.w_psnr, s * x.w_fid, s * x.w_lpips}, w);
        CHECK(scaled.a_error == doctest::Approx(s * ax.a_error));
        CHECK(scaled.c_error == doctest::Approx(s * ax.c_error));
    }
}

TEST_CASE("aggregation weights: validation and parsing") {
    CHECK_NOTHROW(AggregationWeights{}.validate());
    CHECK_THROWS_AS((AggregationWeights{0.6, 0.5, 0.5, 0.5}.validate()), MetricsError);
    CHECK_THROWS_AS((AggregationWeights{1.2, -0.2, 0.5, 0.5}.validate()), MetricsError);
    CHECK_THROWS_AS(aggregate({0, 0, 0, 0}, {0.5, 0.5, 0.7, 0.2}), MetricsError);
    const AggregationWeights w = AggregationWeights::parse("0.25,0.75, 1,0");
    CHECK(w.alpha_mae == 0.25);
    CHECK(w.beta_lpips == 0.0);
    CHECK_THROWS_AS(AggregationWeights::parse("0.5,0.5,0.5"), MetricsError);
    CHECK_THROWS_AS(AggregationWeights::parse("0.5,0.5,0.5,abc"), MetricsError);
    CHECK_THROWS_AS(AggregationWeights::parse("0.5,0.5,0.5,0.5x"), MetricsError);
    CHECK_THROWS_AS(AggregationWeights::parse("0.5,0.4,0.5,0.5"), MetricsError);
}

TEST_CASE("rank: ordering rules") {
    const auto reports = leaderboard::reports(leaderboard::kOnline);
    const auto order = rank(reports);
    std::vector<std::string> names;
    for (auto i : order) names.push_back(reports[i].name);
    CHECK(names == std::vector<std::string>{"Ours", "Team 3", "Team 1", "Team 2", "Baseline"});

    // Rescaling every report leaves the winner unchanged.
    auto scaled = reports;
    for (auto& r : scaled) {
        *r.a_error *= 3.7;
        *r.c_error *= 3.7;
    }
    CHECK(rank(scaled).front() == order.front());

    MetricReport a, b, c;
    a.name = "b";
    a.a_error = 0.3;
    a.c_error = 0.2;
    b.name = "a";
    b.a_error = 0.1;
    b.c_error = 0.2;
    c.name = "0";
    c.a_error = 0.1;
    c.c_error = 0.2;
    CHECK(rank({a, b}) == std::vector<std::size_t>{1, 0});
    CHECK(rank({a, b, c}) == std::vector<std::size_t>{2, 1, 0});
    CHECK(rank({a}) == std::vector<std::size_t>{0});
    MetricReport missing;
    missing.name = "x";
    CHECK_THROWS_AS(rank({a, missing}), MetricsError);
}

TEST_CASE("metric report: invariants and JSON round trip") {
    MetricReport r;
    r.name = "scene";
    r.mae = 3.5;
    r.psnr = 31.0;
    r.attach(ExternalScores{0.2, 0.4, std::nullopt, std::nullopt});
    r.update_aggregates();
    CHECK(!r.a_error);
    CHECK_NOTHROW(r.validate());
    r.attach(ExternalScores{0.2, 0.4, 0.1, 0.3});
    r.update_aggregates();
    REQUIRE(r.a_error);
    CHECK(*r.a_error == doctest::Approx(0.2));
    CHECK(*r.c_error == doctest::Approx(0.3));
    const MetricReport back = MetricReport::from_json(r.to_json());
    CHECK(back.to_json() == r.to_json());
    CHECK(r.to_json().at("raw").at("mae") == 3.5);

    MetricReport bad = r;
    bad.w_fid.reset();
    CHECK_THROWS_AS(bad.validate(), MetricsError);
    bad = r;
    bad.mae = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(bad.validate(), MetricsError);
}

TEST_CASE("evaluate CLI: report from directories") {
    const fs::path root = scenes::temp_dir("evaluate");
    const auto s = scenes::moving_scene(92, 3, 20, 24, 0, 1, 6, 0, 1);
    scenes::write_scene(root / "gt", s.frames, s.masks);
    std::vector<Frame> pred;
    for (const auto& f : s.frames) pred.push_back(scenes::quantize(offset({f}, 10.0 / 255.0)[0]));
    scenes::write_scene(root / "pred", pred, {});
    write_json(root, "ext.json", R"({"w_fid": 0.071, "w_lpips": 0.287, "w_mae": 0.259, "w_psnr": 0.221})");
    const std::string exe = EVALUATE_EXE;
    const std::string cmd = exe + " --pred " + (root / "pred" / "frames").string() + " --gt " +
                            (root / "gt" / "frames").string() + " --masks " + (root / "gt" / "masks").string() +
                            " --external " + (root / "ext.json").string() + " --report " +
                            (root / "report.json").string() + " --name ours > /dev/null 2>&1";
    REQUIRE(std::system(cmd.c_str()) == 0);
    nlohmann::json j;
    std::ifstream(root / "report.json") >> j;
    const MetricReport r = MetricReport::from_json(j);
    CHECK(r.name == "ours");
    REQUIRE(r.c_error);
    CHECK(std::abs(*r.c_error - 0.179) <= 0.001);
    CHECK(std::abs(*r.a_error - 0.240) <= 0.001);
    REQUIRE(r.mae);
    CHECK(*r.mae <= 10.0 + 1e-9);
    CHECK(*r.mae > 0.0);
    CHECK(std::system((exe + " --gt x > /dev/null 2>&1").c_str()) != 0);
    fs::remove_all(root);
}
