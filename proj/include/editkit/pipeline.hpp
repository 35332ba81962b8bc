#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "editkit/codec.hpp"
#include "editkit/manifest.hpp"
#include "editkit/maskgen.hpp"
#include "editkit/weighting.hpp"

// Manifest-driven batch processing: load each (reference, target) pair, run
// mask generation and weighting, persist the pooled mask, and emit one
// output record per input record. Records fan out across a bounded worker
// pool; a reorder buffer at the writer keeps the output manifest in input
// order, so results are byte-identical for any parallelism.

namespace editkit {

struct RunConfig {
    MaskGenConfig maskgen;
    WeightFunctionKind weight_kind = kDefaultWeightKind;
    double x_cap = kDefaultXCap;
    unsigned parallelism = 1;
    std::filesystem::path output_dir;
    bool fail_fast = false;

    void validate() const {
        maskgen.validate();
        if (parallelism < 1) {
            throw std::invalid_argument("RunConfig: parallelism must be >= 1");
        }
        if (output_dir.empty()) {
            throw std::invalid_argument("RunConfig: output directory must be set");
        }
        if (!(x_cap >= 1.0)) {
            throw std::invalid_argument("RunConfig: x_cap must be >= 1");
        }
    }
};

struct BatchSummary {
    std::size_t ok = 0;
    std::size_t degenerate = 0;
    std::size_t error = 0;
    std::size_t total() const noexcept { return ok + degenerate + error; }
};

struct BatchResult {
    std::filesystem::path output_manifest;
    BatchSummary summary;
};

namespace detail {

// Mask artifacts are named after the record id, so the id must stay inside
// the output directory.
inline void validate_id_for_filename(const std::string& id) {
    if (id.find('/') != std::string::npos || id.find('\\') != std::string::npos ||
        id.find("..") != std::string::npos) {
        throw std::runtime_error("id is not filesystem-safe: " + id);
    }
}

inline std::filesystem::path resolve_against(const std::filesystem::path& base,
                                             const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_absolute() || base.empty()) {
        return path;
    }
    return base / path;
}

} // namespace detail

// Processes one record. Per-sample failures land in OutputRecord::error;
// nothing is written for a failed record. Relative image paths resolve
// against base_dir (the input manifest's directory).
inline OutputRecord process_pair(const ManifestRecord& record, const RunConfig& config,
                                 const std::filesystem::path& base_dir = {}) {
    OutputRecord out;
    out.id = record.id;
    out.extra = record.extra;
    // task_tag and instruction ride along so the output manifest stays
    // self-contained for reporting.
    if (record.task_tag) {
        out.extra["task_tag"] = *record.task_tag;
    }
    if (record.instruction) {
        out.extra["instruction"] = *record.instruction;
    }
    out.weight_kind = config.weight_kind;

    const std::string mask_name = record.id + ".mask.png";
    const std::filesystem::path mask_path = config.output_dir / mask_name;
    try {
        detail::validate_id_for_filename(record.id);
        const ImageBuffer reference =
            load_image(detail::resolve_against(base_dir, record.reference_path));
        const ImageBuffer target = load_image(detail::resolve_against(base_dir, record.target_path));
        MaskGenResult generated = generate_mask(reference, target, config.maskgen);
        const BuiltWeights weights =
            build_weight_map(generated.mask, generated.stats, config.weight_kind, config.x_cap);
        save_mask(generated.mask, mask_path);

        out.mask_path = mask_name;
        out.a_edit = generated.stats.a_edit;
        out.a_total = generated.stats.a_total;
        out.x = generated.stats.x;
        out.w = weights.spec.w;
        out.degenerate_no_edit = generated.stats.degenerate_no_edit;
        out.degenerate_full_edit = generated.stats.degenerate_full_edit;
    } catch (const std::exception& e) {
        std::error_code ec;
        std::filesystem::remove(mask_path, ec); // drop partial artifacts
        OutputRecord failed;
        failed.id = record.id;
        failed.extra = out.extra;
        failed.error = e.what();
        return failed;
    }
    return out;
}

// Runs every record of the manifest with up to config.parallelism workers.
// The calling thread is the writer: it drains completed records through a
// reorder buffer and emits them in input order. With fail_fast the first
// failed record aborts the batch by rethrowing after the pool drains.
inline BatchResult run_batch(const std::filesystem::path& manifest_path, const RunConfig& config) {
    config.validate();
    const std::vector<ManifestRecord> records = ingest_manifest(manifest_path);
    const std::filesystem::path base_dir = manifest_path.parent_path();

    std::filesystem::create_directories(config.output_dir);
    const std::filesystem::path out_path = config.output_dir / "output.jsonl";
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write output manifest: " + out_path.string());
    }

    const std::size_t n = records.size();
    BatchSummary summary;

    std::mutex mu;
    std::condition_variable cv;
    std::map<std::size_t, OutputRecord> ready; // reorder buffer, keyed by input index
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    unsigned active = 0;
    std::string first_error;

    auto work = [&] {
        while (!stop.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) {
                break;
            }
            OutputRecord rec = process_pair(records[i], config, base_dir);
            {
                std::lock_guard<std::mutex> lock(mu);
                if (rec.error && config.fail_fast && first_error.empty()) {
                    first_error = "record '" + rec.id + "' failed: " + *rec.error;
                    stop.store(true, std::memory_order_relaxed);
                }
                ready.emplace(i, std::move(rec));
            }
            cv.notify_one();
        }
        {
            std::lock_guard<std::mutex> lock(mu);
            --active;
        }
        cv.notify_one();
    };

    auto write_prefix = [&](std::size_t& written) {
        while (true) {
            auto it = ready.find(written);
            if (it == ready.end()) {
                return;
            }
            const OutputRecord& rec = it->second;
            if (rec.error) {
                ++summary.error;
            } else if (rec.degenerate_no_edit || rec.degenerate_full_edit) {
                ++summary.degenerate;
            } else {
                ++summary.ok;
            }
            out << output_record_to_json(rec).dump() << '\n';
            ready.erase(it);
            ++written;
        }
    };

    std::vector<std::thread> workers;
    if (n > 0) {
        const auto pool =
            static_cast<unsigned>(std::min<std::size_t>(config.parallelism, n));
        workers.reserve(pool);
        active = pool;
        for (unsigned t = 0; t < pool; ++t) {
            workers.emplace_back(work);
        }
    }

    std::size_t written = 0;
    {
        std::unique_lock<std::mutex> lock(mu);
        while (written < n) {
            cv.wait(lock, [&] { return ready.contains(written) || active == 0; });
            write_prefix(written);
            if (active == 0 && !ready.contains(written)) {
                break; // fail_fast: later indices will never arrive
            }
        }
    }
    for (std::thread& w : workers) {
        w.join();
    }
    out.close();
    if (!out) {
        throw std::runtime_error("failed writing output manifest: " + out_path.string());
    }
    if (!first_error.empty()) {
        throw std::runtime_error(first_error);
    }
    return BatchResult{out_path, summary};
}

// ---------------------------------------------------------------------------
// Corpus-level reporting

struct WeightKindStats {
    std::size_t count = 0;
    double w_min = 0.0;
    double w_max = 0.0;
    double w_sum = 0.0;
};

struct TagStats {
    std::size_t total = 0;
    std::size_t ok = 0;
    std::size_t degenerate = 0;
    std::size_t error = 0;
};

struct CorpusReport {
    std::size_t total = 0;
    std::size_t ok = 0;
    std::size_t degenerate_no_edit = 0;
    std::size_t degenerate_full_edit = 0;
    std::size_t errors = 0;
    // Log-spaced histogram of x: bin b counts x in [2^b, 2^(b+1)),
    // b = 0..kXBins-1; the last bin absorbs everything above.
    static constexpr int kXBins = 21;
    std::array<std::size_t, kXBins> x_histogram{};
    std::map<std::string, WeightKindStats> weight_by_kind;
    std::map<std::string, TagStats> by_task_tag;

    double error_rate() const {
        return total == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(total);
    }
    double degenerate_rate() const {
        return total == 0 ? 0.0
                          : static_cast<double>(degenerate_no_edit + degenerate_full_edit) /
                                static_cast<double>(total);
    }

    json to_json() const;
    std::string to_text() const;
};

inline CorpusReport report(const std::filesystem::path& output_manifest_path) {
    std::ifstream in(output_manifest_path);
    if (!in) {
        throw std::runtime_error("cannot open manifest: " + output_manifest_path.string());
    }
    CorpusReport rep;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw std::runtime_error("manifest " + output_manifest_path.string() + " line " +
                                     std::to_string(line_no) + ": malformed JSON");
        }
        OutputRecord rec = output_record_from_json(j);
        ++rep.total;

        std::string tag = "(untagged)";
        if (rec.extra.contains("task_tag") && rec.extra["task_tag"].is_string()) {
            tag = rec.extra["task_tag"].get<std::string>();
        }
        TagStats& ts = rep.by_task_tag[tag];
        ++ts.total;

        if (rec.error) {
            ++rep.errors;
            ++ts.error;
            continue;
        }
        if (rec.degenerate_no_edit) {
            ++rep.degenerate_no_edit;
            ++ts.degenerate;
        } else if (rec.degenerate_full_edit) {
            ++rep.degenerate_full_edit;
            ++ts.degenerate;
        } else {
            ++rep.ok;
            ++ts.ok;
        }

        if (rec.x) {
            const int bin = std::clamp(static_cast<int>(std::floor(std::log2(*rec.x))), 0,
                                       CorpusReport::kXBins - 1);
            ++rep.x_histogram[static_cast<std::size_t>(bin)];
        }
        WeightKindStats& ws = rep.weight_by_kind[weight_kind_name(rec.weight_kind)];
        if (ws.count == 0) {
            ws.w_min = rec.w;
            ws.w_max = rec.w;
        } else {
            ws.w_min = std::min(ws.w_min, rec.w);
            ws.w_max = std::max(ws.w_max, rec.w);
        }
        ++ws.count;
        ws.w_sum += rec.w;
    }
    return rep;
}

inline json CorpusReport::to_json() const {
    json j;
    j["total"] = total;
    j["ok"] = ok;
    j["degenerate_no_edit"] = degenerate_no_edit;
    j["degenerate_full_edit"] = degenerate_full_edit;
    j["errors"] = errors;
    j["error_rate"] = error_rate();
    j["degenerate_rate"] = degenerate_rate();
    json bins = json::array();
    for (int b = 0; b < kXBins; ++b) {
        json bin;
        bin["x_lo"] = std::exp2(static_cast<double>(b));
        bin["x_hi"] = b + 1 == kXBins ? std::numeric_limits<double>::infinity()
                                      : std::exp2(static_cast<double>(b + 1));
        bin["count"] = x_histogram[static_cast<std::size_t>(b)];
        bins.push_back(bin);
    }
    j["x_histogram"] = bins;
    json kinds = json::object();
    for (const auto& [name, ws] : weight_by_kind) {
        json k;
        k["count"] = ws.count;
        k["w_min"] = ws.w_min;
        k["w_max"] = ws.w_max;
        k["w_mean"] = ws.count == 0 ? 0.0 : ws.w_sum / static_cast<double>(ws.count);
        kinds[name] = k;
    }
    j["weight_by_kind"] = kinds;
    json tags = json::object();
    for (const auto& [name, ts] : by_task_tag) {
        json t;
        t["total"] = ts.total;
        t["ok"] = ts.ok;
        t["degenerate"] = ts.degenerate;
        t["error"] = ts.error;
        tags[name] = t;
    }
    j["by_task_tag"] = tags;
    return j;
}

inline std::string CorpusReport::to_text() const {
    std::ostringstream os;
    os << "records: " << total << "  ok: " << ok << "  degenerate: "
       << (degenerate_no_edit + degenerate_full_edit) << " (no-edit " << degenerate_no_edit
       << ", full-edit " << degenerate_full_edit << ")  errors: " << errors << "\n";
    os << std::fixed << std::setprecision(4) << "error rate: " << error_rate()
       << "  degenerate rate: " << degenerate_rate() << "\n";
    os << "\nx histogram (log2 bins):\n";
    for (int b = 0; b < kXBins; ++b) {
        const std::size_t count = x_histogram[static_cast<std::size_t>(b)];
        if (count == 0) {
            continue;
        }
        os << "  [" << std::setw(9) << std::setprecision(0) << std::exp2(double(b)) << ", ";
        if (b + 1 == kXBins) {
            os << "      inf";
        } else {
            os << std::setw(9) << std::exp2(double(b + 1));
        }
        os << ")  " << count << "\n";
    }
    os << "\nweights by kind:\n" << std::setprecision(4);
    for (const auto& [name, ws] : weight_by_kind) {
        os << "  " << std::setw(9) << name << "  count " << ws.count << "  w in [" << ws.w_min
           << ", " << ws.w_max << "]  mean "
           << (ws.count == 0 ? 0.0 : ws.w_sum / static_cast<double>(ws.count)) << "\n";
    }
    os << "\nby task tag:\n";
    for (const auto& [name, ts] : by_task_tag) {
        os << "  " << std::setw(12) << name << "  total " << ts.total << "  ok " << ts.ok
           << "  degenerate " << ts.degenerate << "  error " << ts.error << "\n";
    }
    return os.str();
}

} // namespace editkit
