#include <catch2/catch.hpp>

#include <cmath>

#include <editkit/weighting.hpp>

#include "oracles.hpp"

using namespace editkit;

namespace {

constexpr WeightFunctionKind kAllKinds[] = {
    WeightFunctionKind::Linear, WeightFunctionKind::ExponentialRoot,
    WeightFunctionKind::Logarithmic, WeightFunctionKind::QuadraticRoot};

} // namespace

TEST_CASE("every weight function maps one to one", "[weighting]") {
    for (WeightFunctionKind kind : kAllKinds) {
        REQUIRE(evaluate(kind, 1.0) == Approx(1.0).margin(1e-15));
    }
}

TEST_CASE("pinned weight values", "[weighting]") {
    REQUIRE(evaluate(WeightFunctionKind::Logarithmic, 4.0) == Approx(3.0).margin(1e-12));
    REQUIRE(evaluate(WeightFunctionKind::Logarithmic, 1024.0) == Approx(11.0).margin(1e-12));
    REQUIRE(evaluate(WeightFunctionKind::ExponentialRoot, 4.0) == Approx(2.0).margin(1e-12));
    REQUIRE(evaluate(WeightFunctionKind::QuadraticRoot, 9.0) == Approx(5.0).margin(1e-12));
    REQUIRE(evaluate(WeightFunctionKind::Linear, 7.5) == 7.5);
}

TEST_CASE("ratios below one are rejected", "[weighting]") {
    for (WeightFunctionKind kind : kAllKinds) {
        REQUIRE_THROWS_AS(evaluate(kind, 0.999), std::invalid_argument);
        REQUIRE_THROWS_AS(evaluate(kind, -3.0), std::invalid_argument);
        REQUIRE_THROWS_AS(evaluate(kind, std::nan("")), std::invalid_argument);
    }
}

TEST_CASE("weight functions are nondecreasing on a log-spaced grid", "[weighting][property]") {
    for (WeightFunctionKind kind : kAllKinds) {
        double previous = evaluate(kind, 1.0);
        for (int i = 1; i <= 200; ++i) {
            const double x = std::pow(10.0, 6.0 * i / 200.0);
            const double w = evaluate(kind, x);
            REQUIRE(w >= previous);
            REQUIRE(w >= 1.0);
            previous = w;
        }
    }
}

TEST_CASE("growth ordering at large ratios", "[weighting]") {
    const double x = 1e4;
    const double log_w = evaluate(WeightFunctionKind::Logarithmic, x);
    const double quad_w = evaluate(WeightFunctionKind::QuadraticRoot, x);
    const double lin_w = evaluate(WeightFunctionKind::Linear, x);
    const double exp_w = evaluate(WeightFunctionKind::ExponentialRoot, x);
    REQUIRE(log_w < quad_w);
    REQUIRE(quad_w < lin_w);
    REQUIRE(lin_w < exp_w);
}

TEST_CASE("weight kind names round-trip", "[weighting]") {
    for (WeightFunctionKind kind : kAllKinds) {
        REQUIRE(parse_weight_kind(weight_kind_name(kind)) == kind);
    }
    REQUIRE_THROWS_AS(parse_weight_kind("sigmoid"), std::invalid_argument);
}

namespace {

BinaryMask pooled_mask_from(const BinaryMask& cells, int scale) {
    BinaryMask mask(cells.width(), cells.height(), scale);
    mask.values() = cells.values();
    return mask;
}

} // namespace

TEST_CASE("a full edit reverts to uniform weights", "[weighting]") {
    BinaryMask mask(4, 4, 16);
    for (auto& v : mask.values()) {
        v = 1;
    }
    const EditStats stats = edit_stats_for(mask, 64 * 64);
    REQUIRE(stats.degenerate_full_edit);
    const BuiltWeights built = build_weight_map(mask, stats, WeightFunctionKind::Logarithmic);
    REQUIRE(built.spec.w == 1.0);
    for (float v : built.map.values) {
        REQUIRE(v == 1.0f);
    }
}

TEST_CASE("a no-edit pair yields a flagged all-ones map", "[weighting]") {
    const BinaryMask mask(8, 8, 16);
    const EditStats stats = edit_stats_for(mask, 128 * 128);
    REQUIRE(stats.degenerate_no_edit);
    const BuiltWeights built = build_weight_map(mask, stats, WeightFunctionKind::Linear);
    REQUIRE(built.spec.w == 1.0);
    REQUIRE(built.map.edited_cells == 0);
    for (float v : built.map.values) {
        REQUIRE(v == 1.0f);
    }
}

TEST_CASE("a single edited cell on a 32x32 pooled grid gets the pinned log weight",
          "[weighting]") {
    BinaryMask mask(32, 32, 16);
    mask.set(5, 9, true);
    const EditStats stats = edit_stats_for(mask, 512ull * 512ull);
    REQUIRE(*stats.x == 1024.0);
    const BuiltWeights built = build_weight_map(mask, stats, WeightFunctionKind::Logarithmic,
                                                std::numeric_limits<double>::infinity());
    REQUIRE(built.spec.w == Approx(11.0).margin(1e-12));
    REQUIRE(built.map.values[9 * 32 + 5] == Approx(11.0f));
    REQUIRE(built.map.values[0] == 1.0f);
    REQUIRE(built.map.edited_cells == 1);
}

TEST_CASE("the cap clamps the ratio before evaluation", "[weighting]") {
    BinaryMask mask(64, 64, 16);
    mask.set(0, 0, true);
    const EditStats stats = edit_stats_for(mask, 1024ull * 1024ull);
    REQUIRE(*stats.x == 4096.0);
    const BuiltWeights uncapped =
        build_weight_map(mask, stats, WeightFunctionKind::Linear, 1e9);
    REQUIRE(uncapped.spec.w == 4096.0);
    const BuiltWeights capped = build_weight_map(mask, stats, WeightFunctionKind::Linear, 100.0);
    REQUIRE(capped.spec.w == 100.0);
    REQUIRE(capped.spec.x == 4096.0); // the raw ratio is preserved
}

TEST_CASE("weight maps have at most two distinct values", "[weighting][property]") {
    for (std::uint64_t seed = 1; seed < 6; ++seed) {
        const BinaryMask cells = oracles::random_mask(16, 12, 0.3, seed);
        const BinaryMask mask = pooled_mask_from(cells, 8);
        const EditStats stats = edit_stats_for(mask, 16 * 12 * 64);
        const BuiltWeights built = build_weight_map(mask, stats, WeightFunctionKind::Logarithmic);
        const auto w = static_cast<float>(built.spec.w);
        for (float v : built.map.values) {
            REQUIRE((v == 1.0f || v == w));
        }
        const WeightSummary summary = weight_summary(built.map);
        REQUIRE(summary.mean >= 1.0);
    }
}

TEST_CASE("inconsistent stats are rejected", "[weighting]") {
    BinaryMask mask(4, 4, 16);
    mask.set(1, 1, true);
    EditStats stats = edit_stats_for(mask, 64 * 64);
    stats.a_edit += 1;
    REQUIRE_THROWS_AS(build_weight_map(mask, stats, WeightFunctionKind::Logarithmic),
                      std::runtime_error);
}

TEST_CASE("weight summary over simple maps", "[weighting]") {
    SECTION("all ones") {
        WeightMap map;
        map.width = 4;
        map.height = 2;
        map.edited_cells = 0;
        map.values.assign(8, 1.0f);
        const WeightSummary s = weight_summary(map);
        REQUIRE(s.mean == 1.0);
        REQUIRE(s.max == 1.0);
        REQUIRE(s.edited_fraction == 0.0);
    }
    SECTION("half edited at weight three") {
        WeightMap map;
        map.width = 2;
        map.height = 2;
        map.edited_cells = 2;
        map.values = {1.0f, 3.0f, 3.0f, 1.0f};
        const WeightSummary s = weight_summary(map);
        REQUIRE(s.mean == Approx(2.0));
        REQUIRE(s.max == 3.0);
        REQUIRE(s.edited_fraction == Approx(0.5));
    }
}

TEST_CASE("weight summary matches a direct sum", "[weighting][oracle]") {
    const BinaryMask cells = oracles::random_mask(32, 32, 0.25, 9);
    const BinaryMask mask = pooled_mask_from(cells, 16);
    const EditStats stats = edit_stats_for(mask, 512ull * 512ull);
    const BuiltWeights built = build_weight_map(mask, stats, WeightFunctionKind::QuadraticRoot);
    const WeightSummary s = weight_summary(built.map);

    double sum = 0.0;
    double max = 0.0;
    std::size_t edited = 0;
    for (std::size_t i = 0; i < built.map.values.size(); ++i) {
        sum += built.map.values[i];
        max = std::max(max, double(built.map.values[i]));
        edited += cells.values()[i] != 0;
    }
    REQUIRE(s.mean == Approx(sum / double(built.map.values.size())));
    REQUIRE(s.max == max);
    REQUIRE(s.edited_fraction == Approx(double(edited) / double(built.map.values.size())));
}
