#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "editkit/image.hpp"
#include "editkit/rng.hpp"

// Ground-truth pair generator for the test and benchmark corpus. A pair is
// a reference image plus a target that differs from it in exactly three
// controlled ways: a strong recoloring inside the edit region, bounded
// per-sample noise everywhere, and a list of isolated single-pixel speckles.
// Everything is a pure function of (spec, seed).

namespace editkit {

enum class RegionShape { Rect, Ellipse };

// Axis-aligned edit region in pixel coordinates. Rect covers
// [x, x+width) x [y, y+height); Ellipse is inscribed in that box and
// rasterized by pixel-center sampling. Zero width or height means an
// empty region.
struct EditRegion {
    RegionShape shape = RegionShape::Rect;
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;

    bool contains(int px, int py) const noexcept {
        if (width <= 0 || height <= 0) {
            return false;
        }
        if (shape == RegionShape::Rect) {
            return px >= x && px < x + width && py >= y && py < y + height;
        }
        const double rx = width / 2.0;
        const double ry = height / 2.0;
        const double dx = (px + 0.5 - (x + rx)) / rx;
        const double dy = (py + 0.5 - (y + ry)) / ry;
        return dx * dx + dy * dy <= 1.0;
    }
};

struct PixelCoord {
    int x = 0;
    int y = 0;
};

// Speckle entries are single pixels (area 1 each). After dilation with
// radius r a speckle grows to at most (2r+1)^2 cells, so callers that want
// speckles filtered out must keep that below their component-area floor
// and space the entries far enough apart not to merge.
struct SynthSpec {
    int width = 0;
    int height = 0;
    EditRegion edit_region;
    int noise_amplitude = 0; // max |target - reference| outside the region, 8-bit units
    std::vector<PixelCoord> speckle;
};

struct SynthPair {
    ImageBuffer reference;
    ImageBuffer target;
    BinaryMask truth; // the exact edit region at cell_scale 1
};

namespace detail {

inline void validate_synth_spec(const SynthSpec& spec) {
    if (spec.width < 1 || spec.height < 1) {
        throw std::invalid_argument("synth_pair: image dimensions must be >= 1");
    }
    const EditRegion& r = spec.edit_region;
    if (r.width < 0 || r.height < 0 || r.x < 0 || r.y < 0 || r.x + r.width > spec.width ||
        r.y + r.height > spec.height) {
        throw std::invalid_argument("synth_pair: edit region out of bounds");
    }
    if (spec.noise_amplitude < 0 || spec.noise_amplitude > 255) {
        throw std::invalid_argument("synth_pair: noise amplitude must be in [0, 255]");
    }
    for (const PixelCoord& p : spec.speckle) {
        if (p.x < 0 || p.y < 0 || p.x >= spec.width || p.y >= spec.height) {
            throw std::invalid_argument("synth_pair: speckle pixel out of bounds");
        }
    }
}

} // namespace detail

// Deterministic pair synthesis. The reference is integer ramp content plus
// 16x16-block texture drawn from CounterRng. The target recoloring flips
// the top bit of every sample in the region and at speckle pixels, which
// fixes the per-channel delta at exactly 128 before noise; noise is a
// clamped per-sample offset in [-noise_amplitude, +noise_amplitude].
inline SynthPair synth_pair(const SynthSpec& spec, std::uint64_t seed) {
    detail::validate_synth_spec(spec);

    constexpr std::uint64_t kContentStream = 1;
    constexpr std::uint64_t kTextureStream = 2;
    constexpr std::uint64_t kNoiseStream = 3;

    const CounterRng content(seed, kContentStream);
    const CounterRng texture(seed, kTextureStream);
    const CounterRng noise(seed, kNoiseStream);

    const int w = spec.width;
    const int h = spec.height;
    ImageBuffer reference(w, h, 3);
    ImageBuffer target(w, h, 3);
    BinaryMask truth(w, h, 1);

    // Per-channel ramp slopes in [1, 4], fixed by the seed.
    int slope_x[3];
    int slope_y[3];
    for (int c = 0; c < 3; ++c) {
        slope_x[c] = content.range(static_cast<std::uint64_t>(c), 1, 4);
        slope_y[c] = content.range(static_cast<std::uint64_t>(c) + 8, 1, 4);
    }

    const int blocks_x = (w + 15) / 16;
    std::vector<std::uint8_t> speckled(static_cast<std::size_t>(w) * h, 0);
    for (const PixelCoord& p : spec.speckle) {
        speckled[static_cast<std::size_t>(p.y) * w + p.x] = 1;
    }

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const bool in_region = spec.edit_region.contains(x, y);
            truth.set(x, y, in_region);
            const bool recolor = in_region || speckled[static_cast<std::size_t>(y) * w + x];
            const std::uint64_t block =
                static_cast<std::uint64_t>(y / 16) * blocks_x + static_cast<std::uint64_t>(x / 16);
            for (int c = 0; c < 3; ++c) {
                const int ramp = (x * slope_x[c] + y * slope_y[c]) / 2;
                const int tex = static_cast<int>(texture.bits(block * 3 + c) & 31);
                const auto ref = static_cast<std::uint8_t>((ramp + tex) & 0xFF);
                reference.at(x, y, c) = ref;

                int tgt = recolor ? (ref ^ 0x80) : ref;
                if (spec.noise_amplitude > 0) {
                    const std::uint64_t counter =
                        (static_cast<std::uint64_t>(y) * w + x) * 3 + static_cast<std::uint64_t>(c);
                    tgt += noise.range(counter, -spec.noise_amplitude, spec.noise_amplitude);
                }
                target.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(tgt, 0, 255));
            }
        }
    }

    return SynthPair{std::move(reference), std::move(target), std::move(truth)};
}

} // namespace editkit
