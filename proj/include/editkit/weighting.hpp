#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "editkit/image.hpp"
#include "editkit/maskgen.hpp"

// Loss-weight assignment for edited cells. The weight is a function of the
// area ratio x = a_total / a_edit, so small edits receive large weights and
// a full-image edit (x = 1) falls back to uniform weighting. Four candidate
// weight functions are provided; the logarithmic one is the default.

namespace editkit {

enum class WeightFunctionKind {
    Linear,          // w(x) = x
    ExponentialRoot, // w(x) = 2^(sqrt(x) - 1)
    Logarithmic,     // w(x) = log2(x) + 1
    QuadraticRoot,   // w(x) = (sqrt(x) - 1)^2 + 1
};

inline constexpr WeightFunctionKind kDefaultWeightKind = WeightFunctionKind::Logarithmic;
inline constexpr double kDefaultXCap = 4096.0;

inline const char* weight_kind_name(WeightFunctionKind kind) {
    switch (kind) {
    case WeightFunctionKind::Linear:
        return "linear";
    case WeightFunctionKind::ExponentialRoot:
        return "exp-root";
    case WeightFunctionKind::Logarithmic:
        return "log";
    case WeightFunctionKind::QuadraticRoot:
        return "quad-root";
    }
    return "log";
}

inline WeightFunctionKind parse_weight_kind(const std::string& name) {
    if (name == "linear") {
        return WeightFunctionKind::Linear;
    }
    if (name == "exp-root") {
        return WeightFunctionKind::ExponentialRoot;
    }
    if (name == "log") {
        return WeightFunctionKind::Logarithmic;
    }
    if (name == "quad-root") {
        return WeightFunctionKind::QuadraticRoot;
    }
    throw std::invalid_argument("unknown weight function: " + name);
}

// Evaluates the chosen weight function at x >= 1. All four satisfy
// w(1) = 1 and are nondecreasing in x.
inline double evaluate(WeightFunctionKind kind, double x) {
    if (!(x >= 1.0)) {
        throw std::invalid_argument("evaluate: area ratio x must be >= 1");
    }
    switch (kind) {
    case WeightFunctionKind::Linear:
        return x;
    case WeightFunctionKind::ExponentialRoot:
        return std::exp2(std::sqrt(x) - 1.0);
    case WeightFunctionKind::Logarithmic:
        return std::log2(x) + 1.0;
    case WeightFunctionKind::QuadraticRoot: {
        const double d = std::sqrt(x) - 1.0;
        return d * d + 1.0;
    }
    }
    throw std::invalid_argument("evaluate: unknown weight function kind");
}

// The scalar weight applied to a pair's edited cells. x is the raw ratio;
// the cap is applied before evaluation, so w == evaluate(kind, min(x, x_cap)).
struct WeightSpec {
    WeightFunctionKind kind = kDefaultWeightKind;
    double x = 1.0;
    double w = 1.0;
    double x_cap = kDefaultXCap;
};

// Per-cell weights on the pooled grid. Values take at most two distinct
// levels: 1 for background cells and the pair's w for edited cells.
// edited_cells carries the mask-derived count for reporting.
struct WeightMap {
    int width = 0;
    int height = 0;
    std::size_t edited_cells = 0;
    std::vector<float> values;
};

struct BuiltWeights {
    WeightMap map;
    WeightSpec spec;
};

// Assembles the weight map for a pooled mask. Degenerate no-edit pairs get
// a uniform all-ones map with w = 1; the caller sees the condition through
// the stats flags. Throws if the stats do not match the mask.
inline BuiltWeights build_weight_map(const BinaryMask& mask, const EditStats& stats,
                                     WeightFunctionKind kind, double x_cap = kDefaultXCap) {
    if (!(x_cap >= 1.0)) {
        throw std::invalid_argument("build_weight_map: x_cap must be >= 1");
    }
    const auto k = static_cast<std::uint64_t>(mask.cell_scale());
    const std::size_t edited = mask.true_count();
    const std::uint64_t recomputed = std::min(edited * k * k, stats.a_total);
    if (recomputed != stats.a_edit) {
        throw std::runtime_error("build_weight_map: stats disagree with mask true-cell count");
    }

    WeightSpec spec;
    spec.kind = kind;
    spec.x_cap = x_cap;
    if (stats.degenerate_no_edit) {
        spec.x = 1.0;
        spec.w = 1.0;
    } else {
        spec.x = *stats.x;
        spec.w = evaluate(kind, std::min(spec.x, x_cap));
    }

    WeightMap map;
    map.width = mask.width();
    map.height = mask.height();
    map.edited_cells = edited;
    map.values.resize(mask.cell_count());
    const auto w = static_cast<float>(spec.w);
    const auto& cells = mask.values();
    for (std::size_t i = 0; i < cells.size(); ++i) {
        map.values[i] = cells[i] ? w : 1.0f;
    }
    return BuiltWeights{std::move(map), spec};
}

struct WeightSummary {
    double mean = 1.0;
    double max = 1.0;
    double edited_fraction = 0.0;
};

inline WeightSummary weight_summary(const WeightMap& map) {
    WeightSummary summary;
    if (map.values.empty()) {
        return summary;
    }
    double sum = 0.0;
    double max = 0.0;
    for (float v : map.values) {
        sum += v;
        max = std::max(max, static_cast<double>(v));
    }
    summary.mean = sum / static_cast<double>(map.values.size());
    summary.max = max;
    summary.edited_fraction =
        static_cast<double>(map.edited_cells) / static_cast<double>(map.values.size());
    return summary;
}

} // namespace editkit
