#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "editkit/rng.hpp"

// Sharded FP32 EMA simulation. A flat parameter vector is partitioned into
// contiguous near-equal shards, one per logical worker; every worker updates
// only its own shard each step. Because the update is elementwise, sharding
// is a pure data-layout change: the gathered result must be bitwise equal to
// a monolithic EMA over the same trajectory, which simulate() verifies.

namespace editkit {

struct IndexRange {
    std::uint64_t begin = 0;
    std::uint64_t end = 0;
    std::uint64_t size() const noexcept { return end - begin; }
};

struct ShardLayout {
    std::uint64_t total_params = 0;
    std::uint32_t workers = 0;
    std::vector<IndexRange> ranges; // disjoint, ordered, covering [0, total_params)
};

// Contiguous near-equal split: the first (P mod N) shards hold one extra
// element.
inline ShardLayout partition(std::uint64_t total_params, std::uint32_t workers) {
    if (workers == 0) {
        throw std::invalid_argument("partition: worker count must be >= 1");
    }
    if (total_params == 0) {
        throw std::invalid_argument("partition: total_params must be >= 1");
    }
    if (workers > total_params) {
        throw std::invalid_argument("partition: more workers than parameters");
    }
    ShardLayout layout;
    layout.total_params = total_params;
    layout.workers = workers;
    layout.ranges.reserve(workers);
    const std::uint64_t base = total_params / workers;
    const std::uint64_t longer = total_params % workers;
    std::uint64_t cursor = 0;
    for (std::uint32_t i = 0; i < workers; ++i) {
        const std::uint64_t size = base + (i < longer ? 1 : 0);
        layout.ranges.push_back(IndexRange{cursor, cursor + size});
        cursor += size;
    }
    return layout;
}

struct EmaConfig {
    double decay = 0.999;          // in (0, 1)
    std::uint64_t steps = 0;       // trajectory length
    std::uint32_t update_every = 1; // steps between EMA updates

    void validate() const {
        if (!(decay > 0.0 && decay < 1.0)) {
            throw std::invalid_argument("EmaConfig: decay must be in (0, 1)");
        }
        if (update_every < 1) {
            throw std::invalid_argument("EmaConfig: update_every must be >= 1");
        }
    }
};

struct EmaWorkerState {
    std::uint32_t worker_id = 0;
    IndexRange range;
    std::vector<float> ema_shard;
};

// One FP32 EMA step for a single element: decay*ema + (1-decay)*param,
// evaluated as a fused ema + (1-decay)*(param-ema). The fused form keeps
// ema bit-exact when param == ema for any decay, and the single shared
// definition makes sharded and monolithic runs agree bitwise.
inline float ema_update(float ema, float param, float decay) noexcept {
    return std::fma(1.0f - decay, param - ema, ema);
}

inline void ema_step(EmaWorkerState& worker, std::span<const float> params_shard, double decay) {
    if (params_shard.size() != worker.ema_shard.size() ||
        worker.ema_shard.size() != worker.range.size()) {
        throw std::invalid_argument("ema_step: shard length mismatch");
    }
    const auto d = static_cast<float>(decay);
    for (std::size_t i = 0; i < worker.ema_shard.size(); ++i) {
        worker.ema_shard[i] = ema_update(worker.ema_shard[i], params_shard[i], d);
    }
}

// Concatenates worker shards in range order. Workers must cover the layout
// exactly.
inline std::vector<float> gather(const ShardLayout& layout,
                                 const std::vector<EmaWorkerState>& workers) {
    if (workers.size() != layout.ranges.size()) {
        throw std::invalid_argument("gather: worker count does not match layout");
    }
    std::vector<float> full;
    full.reserve(layout.total_params);
    std::uint64_t cursor = 0;
    for (std::size_t i = 0; i < workers.size(); ++i) {
        const IndexRange& expected = layout.ranges[i];
        const EmaWorkerState& w = workers[i];
        if (w.range.begin != expected.begin || w.range.end != expected.end ||
            w.range.begin != cursor) {
            throw std::invalid_argument("gather: missing or overlapping worker ranges");
        }
        if (w.ema_shard.size() != w.range.size()) {
            throw std::invalid_argument("gather: shard length mismatch");
        }
        full.insert(full.end(), w.ema_shard.begin(), w.ema_shard.end());
        cursor = w.range.end;
    }
    return full;
}

// Reference implementation: the same elementwise update applied to the full
// vector each scheduled step.
inline std::vector<float> monolithic_ema(std::vector<float> initial,
                                         std::span<const std::vector<float>> trajectory,
                                         const EmaConfig& config) {
    config.validate();
    const auto d = static_cast<float>(config.decay);
    std::uint64_t step = 0;
    for (const std::vector<float>& params : trajectory) {
        if (params.size() != initial.size()) {
            throw std::invalid_argument("monolithic_ema: trajectory length mismatch");
        }
        ++step;
        if (step % config.update_every != 0) {
            continue;
        }
        for (std::size_t i = 0; i < initial.size(); ++i) {
            initial[i] = ema_update(initial[i], params[i], d);
        }
    }
    return initial;
}

// Rounds an FP32 value through bfloat16 (round to nearest even on the top
// 16 bits). Used to mimic a lower-precision training model feeding the
// FP32 EMA.
inline float round_through_bfloat16(float v) noexcept {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
    if ((bits & 0x7F800000u) == 0x7F800000u) {
        return v; // inf and NaN pass through
    }
    bits += 0x7FFFu + ((bits >> 16) & 1u);
    bits &= 0xFFFF0000u;
    return std::bit_cast<float>(bits);
}

// Deterministic parameter trajectory: a counter-based random walk with
// per-element increments, so every worker can regenerate exactly its own
// slice. Constant mode freezes the walk at the initial vector; the
// quantize mode rounds every observed parameter through bfloat16.
struct TrajectoryOptions {
    bool constant = false;
    bool quantize_16bit = false;
};

class TrajectoryModel {
public:
    TrajectoryModel(std::uint64_t seed, TrajectoryOptions options = {})
        : init_(seed, 11), ema0_(seed, 13), walk_(seed, 17), options_(options) {}

    float initial_param(std::uint64_t index) const noexcept {
        return init_.symmetric(index, 1.0f);
    }
    float initial_ema(std::uint64_t index) const noexcept {
        return ema0_.symmetric(index, 1.0f);
    }

    // Advances params (covering `range`) from step-1 to step, in place.
    // The (step, index) pair maps injectively onto the walk counter for
    // any index below 2^40.
    void advance(std::uint64_t step, IndexRange range, std::span<float> params) const {
        if (options_.constant) {
            return;
        }
        for (std::uint64_t i = range.begin; i < range.end; ++i) {
            params[static_cast<std::size_t>(i - range.begin)] +=
                walk_.symmetric((step << 40) + i, 0.01f);
        }
    }

    // The value the EMA consumes for a raw parameter.
    float observe(float param) const noexcept {
        return options_.quantize_16bit ? round_through_bfloat16(param) : param;
    }

    bool constant() const noexcept { return options_.constant; }

private:
    CounterRng init_;
    CounterRng ema0_;
    CounterRng walk_;
    TrajectoryOptions options_;
};

struct MemoryReport {
    std::uint64_t per_worker_bytes = 0; // largest shard, ceil(P/N) * 4
    std::uint64_t total_bytes = 0;      // P * 4
    bool formula_check = false;
};

inline MemoryReport memory_report(const ShardLayout& layout) {
    MemoryReport report;
    std::uint64_t max_size = 0;
    std::uint64_t sum = 0;
    for (const IndexRange& r : layout.ranges) {
        max_size = std::max(max_size, r.size());
        sum += r.size();
    }
    const std::uint64_t expected =
        (layout.total_params + layout.workers - 1) / layout.workers;
    report.per_worker_bytes = max_size * 4;
    report.total_bytes = layout.total_params * 4;
    report.formula_check = max_size == expected && sum == layout.total_params;
    return report;
}

struct ComputeReport {
    std::vector<std::uint64_t> per_worker_elements_per_step; // shard sizes
    std::uint64_t elements_per_step_total = 0;               // P
    double max_worker_share = 0.0;                           // ~1/N
};

inline ComputeReport compute_report(const ShardLayout& layout) {
    ComputeReport report;
    report.per_worker_elements_per_step.reserve(layout.ranges.size());
    std::uint64_t max_size = 0;
    for (const IndexRange& r : layout.ranges) {
        report.per_worker_elements_per_step.push_back(r.size());
        max_size = std::max(max_size, r.size());
    }
    report.elements_per_step_total = layout.total_params;
    report.max_worker_share =
        static_cast<double>(max_size) / static_cast<double>(layout.total_params);
    return report;
}

struct SimulationResult {
    std::vector<float> sharded_result;
    std::vector<float> monolithic_result;
    bool bitwise_equal = false;
    MemoryReport memory;
    ComputeReport compute;
    // Largest relative deviation from the per-element closed form
    // p + decay^k (e0 - p); only meaningful for constant trajectories.
    std::optional<double> closed_form_max_rel_dev;
};

namespace detail {

inline std::vector<float> run_ema_over_range(const TrajectoryModel& model, const EmaConfig& config,
                                             IndexRange range) {
    std::vector<float> params(static_cast<std::size_t>(range.size()));
    std::vector<float> ema(static_cast<std::size_t>(range.size()));
    for (std::uint64_t i = range.begin; i < range.end; ++i) {
        params[static_cast<std::size_t>(i - range.begin)] = model.initial_param(i);
        ema[static_cast<std::size_t>(i - range.begin)] = model.initial_ema(i);
    }
    const auto d = static_cast<float>(config.decay);
    for (std::uint64_t step = 1; step <= config.steps; ++step) {
        model.advance(step, range, params);
        if (step % config.update_every != 0) {
            continue;
        }
        for (std::size_t i = 0; i < ema.size(); ++i) {
            ema[i] = ema_update(ema[i], model.observe(params[i]), d);
        }
    }
    return ema;
}

} // namespace detail

// Runs the sharded layout and the monolithic reference over the identical
// trajectory and compares the results bitwise.
inline SimulationResult simulate(std::uint64_t total_params, std::uint32_t workers,
                                 const EmaConfig& config, std::uint64_t trajectory_seed,
                                 TrajectoryOptions options = {}) {
    config.validate();
    const ShardLayout layout = partition(total_params, workers);
    const TrajectoryModel model(trajectory_seed, options);

    SimulationResult result;
    result.memory = memory_report(layout);
    result.compute = compute_report(layout);

    // Sharded run: every worker owns exactly its slice of the walk and the
    // EMA state. Shards are independent, so update order across workers is
    // immaterial.
    std::vector<EmaWorkerState> states;
    states.reserve(workers);
    for (std::uint32_t i = 0; i < workers; ++i) {
        states.push_back(EmaWorkerState{
            i, layout.ranges[i], detail::run_ema_over_range(model, config, layout.ranges[i])});
    }
    result.sharded_result = gather(layout, states);

    result.monolithic_result =
        detail::run_ema_over_range(model, config, IndexRange{0, total_params});
    result.bitwise_equal = result.sharded_result == result.monolithic_result;

    if (options.constant) {
        // Against the closed form in double precision: after k updates,
        // ema = p + decay^k (e0 - p) per element. The deviation is taken
        // relative to the element's data magnitude, not the closed-form
        // value alone: (e0 + p) can cancel to ~0 and no finite-precision
        // EMA could meet a tolerance measured against that.
        const std::uint64_t k = config.steps / config.update_every;
        const double decay_pow = std::pow(config.decay, static_cast<double>(k));
        double worst = 0.0;
        for (std::uint64_t i = 0; i < total_params; ++i) {
            const double p = model.observe(model.initial_param(i));
            const double e0 = model.initial_ema(i);
            const double closed = p + decay_pow * (e0 - p);
            const double got = result.sharded_result[static_cast<std::size_t>(i)];
            const double scale =
                std::max({std::abs(closed), std::abs(p), std::abs(e0), 1e-12});
            worst = std::max(worst, std::abs(got - closed) / scale);
        }
        result.closed_form_max_rel_dev = worst;
    }
    return result;
}

} // namespace editkit
