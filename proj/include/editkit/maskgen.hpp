#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "editkit/image.hpp"

// Edit-mask extraction for a (reference, target) pair: per-pixel
// differencing, dilation, small-component removal, max-pool downsampling,
// in that order, plus edited-area statistics. All operations are pure.

namespace editkit {

struct MaskGenConfig {
    int tolerance = 12;                  // per-channel absolute difference threshold
    int dilation_radius = 2;             // Chebyshev radius, cells
    std::size_t min_component_area = 64; // cells; components strictly below this are removed
    int connectivity = 8;                // 4 or 8
    int pool_kernel = 16;                // pooling window edge; stride equals kernel

    void validate() const {
        if (tolerance < 0 || tolerance > 255) {
            throw std::invalid_argument("MaskGenConfig: tolerance must be in [0, 255]");
        }
        if (dilation_radius < 0) {
            throw std::invalid_argument("MaskGenConfig: dilation_radius must be >= 0");
        }
        if (connectivity != 4 && connectivity != 8) {
            throw std::invalid_argument("MaskGenConfig: connectivity must be 4 or 8");
        }
        if (pool_kernel < 1) {
            throw std::invalid_argument("MaskGenConfig: pool_kernel must be >= 1");
        }
    }
};

// Edited-area accounting for one pair. a_edit is measured on the pooled
// grid and rescaled by kernel^2, clamped to a_total; the ratio x is
// defined only when something was edited.
struct EditStats {
    std::uint64_t a_edit = 0;
    std::uint64_t a_total = 0;
    std::optional<double> x; // a_total / a_edit, present iff a_edit > 0
    bool degenerate_no_edit = false;
    bool degenerate_full_edit = false;
};

struct MaskGenResult {
    BinaryMask mask; // pooled, cell_scale == pool_kernel
    EditStats stats;
};

// Step 1: cell (i,j) is edited iff the per-channel absolute difference
// exceeds the tolerance on at least one channel (strictly greater).
inline BinaryMask pixel_diff(const ImageBuffer& reference, const ImageBuffer& target,
                             int tolerance) {
    if (!reference.same_shape(target)) {
        throw std::invalid_argument("pixel_diff: dimension or channel mismatch");
    }
    const int w = reference.width();
    const int h = reference.height();
    const int channels = reference.channels();
    BinaryMask mask(w, h, 1);
    const std::uint8_t* a = reference.data().data();
    const std::uint8_t* b = target.data().data();
    std::uint8_t* out = mask.values().data();
    const std::size_t pixels = static_cast<std::size_t>(w) * h;
    for (std::size_t p = 0; p < pixels; ++p) {
        int max_diff = 0;
        for (int c = 0; c < channels; ++c) {
            const int d = std::abs(static_cast<int>(a[p * channels + c]) -
                                   static_cast<int>(b[p * channels + c]));
            max_diff = std::max(max_diff, d);
        }
        out[p] = max_diff > tolerance ? 1 : 0;
    }
    return mask;
}

// Step 2: square (Chebyshev) dilation of edge 2*radius+1. Separable:
// a horizontal window-OR pass followed by a vertical one, each via
// prefix counts.
inline BinaryMask dilate(const BinaryMask& mask, int radius) {
    if (mask.cell_scale() != 1) {
        throw std::invalid_argument("dilate: expected a full-resolution mask (cell_scale 1)");
    }
    if (radius < 0) {
        throw std::invalid_argument("dilate: radius must be >= 0");
    }
    if (radius == 0) {
        return mask;
    }
    const int w = mask.width();
    const int h = mask.height();

    BinaryMask horiz(w, h, 1);
    std::vector<std::uint32_t> prefix(static_cast<std::size_t>(std::max(w, h)) + 1);
    for (int y = 0; y < h; ++y) {
        prefix[0] = 0;
        for (int x = 0; x < w; ++x) {
            prefix[x + 1] = prefix[x] + (mask.get(x, y) ? 1 : 0);
        }
        for (int x = 0; x < w; ++x) {
            const int lo = std::max(0, x - radius);
            const int hi = std::min(w, x + radius + 1);
            horiz.set(x, y, prefix[hi] - prefix[lo] > 0);
        }
    }

    BinaryMask out(w, h, 1);
    for (int x = 0; x < w; ++x) {
        prefix[0] = 0;
        for (int y = 0; y < h; ++y) {
            prefix[y + 1] = prefix[y] + (horiz.get(x, y) ? 1 : 0);
        }
        for (int y = 0; y < h; ++y) {
            const int lo = std::max(0, y - radius);
            const int hi = std::min(h, y + radius + 1);
            out.set(x, y, prefix[hi] - prefix[lo] > 0);
        }
    }
    return out;
}

namespace detail {

// Union-find over provisional component labels.
class LabelForest {
public:
    std::uint32_t make() {
        parent_.push_back(static_cast<std::uint32_t>(parent_.size()));
        return parent_.back();
    }
    std::uint32_t find(std::uint32_t v) {
        while (parent_[v] != v) {
            parent_[v] = parent_[parent_[v]];
            v = parent_[v];
        }
        return v;
    }
    void merge(std::uint32_t a, std::uint32_t b) {
        a = find(a);
        b = find(b);
        if (a != b) {
            parent_[std::max(a, b)] = std::min(a, b);
        }
    }
    std::size_t size() const { return parent_.size(); }

private:
    std::vector<std::uint32_t> parent_;
};

} // namespace detail

// Step 3: clears every connected component whose area is strictly below
// min_component_area. Two-pass union-find labeling.
inline BinaryMask filter_components(const BinaryMask& mask, std::size_t min_component_area,
                                    int connectivity) {
    if (mask.cell_scale() != 1) {
        throw std::invalid_argument(
            "filter_components: expected a full-resolution mask (cell_scale 1)");
    }
    if (connectivity != 4 && connectivity != 8) {
        throw std::invalid_argument("filter_components: connectivity must be 4 or 8");
    }
    if (min_component_area <= 1) {
        return mask; // every existing component has area >= 1
    }

    const int w = mask.width();
    const int h = mask.height();
    constexpr std::uint32_t kNone = 0xFFFFFFFFu;
    std::vector<std::uint32_t> label(static_cast<std::size_t>(w) * h, kNone);
    detail::LabelForest forest;

    auto label_at = [&](int x, int y) -> std::uint32_t {
        if (x < 0 || y < 0 || x >= w) {
            return kNone;
        }
        return label[static_cast<std::size_t>(y) * w + x];
    };

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask.get(x, y)) {
                continue;
            }
            std::uint32_t neighbors[4];
            int count = 0;
            neighbors[count++] = label_at(x - 1, y);
            neighbors[count++] = label_at(x, y - 1);
            if (connectivity == 8) {
                neighbors[count++] = label_at(x - 1, y - 1);
                neighbors[count++] = label_at(x + 1, y - 1);
            }
            std::uint32_t current = kNone;
            for (int i = 0; i < count; ++i) {
                if (neighbors[i] == kNone) {
                    continue;
                }
                if (current == kNone) {
                    current = neighbors[i];
                } else {
                    forest.merge(current, neighbors[i]);
                }
            }
            if (current == kNone) {
                current = forest.make();
            }
            label[static_cast<std::size_t>(y) * w + x] = current;
        }
    }

    std::vector<std::uint64_t> area(forest.size(), 0);
    for (std::uint32_t& l : label) {
        if (l != kNone) {
            l = forest.find(l);
            ++area[l];
        }
    }

    BinaryMask out(w, h, 1);
    for (std::size_t i = 0; i < label.size(); ++i) {
        out.values()[i] = (label[i] != kNone && area[label[i]] >= min_component_area) ? 1 : 0;
    }
    return out;
}

// Step 4: non-overlapping window-OR downsampling. Output dimensions are
// ceil(w/k) x ceil(h/k); edge windows are clipped; the result records the
// kernel as its cell_scale.
inline BinaryMask maxpool(const BinaryMask& mask, int pool_kernel) {
    if (mask.cell_scale() != 1) {
        throw std::invalid_argument("maxpool: expected a full-resolution mask (cell_scale 1)");
    }
    if (pool_kernel < 1) {
        throw std::invalid_argument("maxpool: pool_kernel must be >= 1");
    }
    if (pool_kernel == 1) {
        return mask;
    }
    const int w = mask.width();
    const int h = mask.height();
    const int k = pool_kernel;
    const int ow = (w + k - 1) / k;
    const int oh = (h + k - 1) / k;

    BinaryMask out(ow, oh, k);
    for (int oy = 0; oy < oh; ++oy) {
        const int y0 = oy * k;
        const int y1 = std::min(h, y0 + k);
        for (int ox = 0; ox < ow; ++ox) {
            const int x0 = ox * k;
            const int x1 = std::min(w, x0 + k);
            bool any = false;
            for (int y = y0; y < y1 && !any; ++y) {
                for (int x = x0; x < x1; ++x) {
                    if (mask.get(x, y)) {
                        any = true;
                        break;
                    }
                }
            }
            out.set(ox, oy, any);
        }
    }
    return out;
}

inline EditStats edit_stats_for(const BinaryMask& pooled, std::uint64_t a_total) {
    const auto k = static_cast<std::uint64_t>(pooled.cell_scale());
    EditStats stats;
    stats.a_total = a_total;
    stats.a_edit = std::min(pooled.true_count() * k * k, a_total);
    stats.degenerate_no_edit = stats.a_edit == 0;
    stats.degenerate_full_edit = stats.a_edit == a_total;
    if (stats.a_edit > 0) {
        stats.x = static_cast<double>(stats.a_total) / static_cast<double>(stats.a_edit);
    }
    return stats;
}

// Full pipeline: diff, dilate, filter, pool, then area accounting on the
// pooled grid.
inline MaskGenResult generate_mask(const ImageBuffer& reference, const ImageBuffer& target,
                                   const MaskGenConfig& config) {
    config.validate();
    BinaryMask mask = pixel_diff(reference, target, config.tolerance);
    mask = dilate(mask, config.dilation_radius);
    mask = filter_components(mask, config.min_component_area, config.connectivity);
    mask = maxpool(mask, config.pool_kernel);
    EditStats stats = edit_stats_for(mask, reference.pixel_count());
    return MaskGenResult{std::move(mask), stats};
}

} // namespace editkit
