// editkit command-line tool: synthetic pair generation, single-pair mask
// debugging, manifest batch runs, corpus reports, and sharded-EMA
// simulation sweeps.
//
// Exit codes: 0 success, 1 data errors, 2 usage errors.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <editkit/editkit.hpp>

namespace fs = std::filesystem;
using namespace editkit;

namespace {

// Flag-level misuse detected after CLI11 parsing (bad region syntax, flag
// combinations that cannot work). Carries the offending flag name.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

EditRegion parse_region(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw UsageError("--region: expected 'rect:x,y,w,h' or 'ellipse:x,y,w,h'");
    }
    const std::string kind = text.substr(0, colon);
    EditRegion region;
    if (kind == "rect") {
        region.shape = RegionShape::Rect;
    } else if (kind == "ellipse") {
        region.shape = RegionShape::Ellipse;
    } else {
        throw UsageError("--region: unknown shape '" + kind + "'");
    }
    int values[4];
    int count = 0;
    std::stringstream ss(text.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (count == 4) {
            throw UsageError("--region: expected four comma-separated integers");
        }
        try {
            values[count++] = std::stoi(item);
        } catch (const std::exception&) {
            throw UsageError("--region: '" + item + "' is not an integer");
        }
    }
    if (count != 4) {
        throw UsageError("--region: expected four comma-separated integers");
    }
    region.x = values[0];
    region.y = values[1];
    region.width = values[2];
    region.height = values[3];
    return region;
}

std::vector<PixelCoord> place_speckles(int count, const EditRegion& region, int width, int height,
                                       const CounterRng& rng) {
    // Speckles stay clear of the edit region, each other, and the image
    // border so that dilation never merges them into anything.
    constexpr int kGap = 8;
    std::vector<PixelCoord> out;
    std::uint64_t counter = 0;
    int attempts = 0;
    const int limit = 200 * std::max(count, 1);
    while (static_cast<int>(out.size()) < count && attempts < limit) {
        ++attempts;
        const int x = rng.range(counter++, kGap, width - 1 - kGap);
        const int y = rng.range(counter++, kGap, height - 1 - kGap);
        if (region.width > 0 && region.height > 0 && x >= region.x - kGap &&
            x < region.x + region.width + kGap && y >= region.y - kGap &&
            y < region.y + region.height + kGap) {
            continue;
        }
        bool clear = true;
        for (const PixelCoord& p : out) {
            if (std::abs(p.x - x) <= kGap && std::abs(p.y - y) <= kGap) {
                clear = false;
                break;
            }
        }
        if (clear) {
            out.push_back(PixelCoord{x, y});
        }
    }
    if (static_cast<int>(out.size()) < count) {
        throw UsageError("--speckle: cannot place that many isolated pixels outside the region");
    }
    return out;
}

struct SynthArgs {
    int count = 4;
    int width = 512;
    int height = 512;
    std::string region = "rect:128,128,256,256";
    int noise = 0;
    int speckle = 0;
    std::uint64_t seed = 0;
    std::string outdir;
};

int cmd_synth(const SynthArgs& args) {
    if (args.count < 0) {
        throw UsageError("--count: must be >= 0");
    }
    if (args.width < 1 || args.height < 1) {
        throw UsageError("--width/--height: must be >= 1");
    }
    const EditRegion region = parse_region(args.region);
    if (region.x < 0 || region.y < 0 || region.width < 0 || region.height < 0 ||
        region.x + region.width > args.width || region.y + region.height > args.height) {
        throw UsageError("--region: region out of bounds for the requested image size");
    }
    if (args.noise < 0 || args.noise > 255) {
        throw UsageError("--noise: must be in [0, 255]");
    }
    if (args.speckle < 0) {
        throw UsageError("--speckle: must be >= 0");
    }

    // Validate every pair's spec before writing anything.
    const CounterRng pair_seeds(args.seed, 99);
    std::vector<SynthSpec> specs;
    specs.reserve(static_cast<std::size_t>(args.count));
    for (int i = 0; i < args.count; ++i) {
        SynthSpec spec;
        spec.width = args.width;
        spec.height = args.height;
        spec.edit_region = region;
        spec.noise_amplitude = args.noise;
        spec.speckle = place_speckles(args.speckle, region, args.width, args.height,
                                      CounterRng(pair_seeds.bits(static_cast<std::uint64_t>(i)), 7));
        specs.push_back(std::move(spec));
    }

    fs::create_directories(args.outdir);
    std::ofstream manifest(fs::path(args.outdir) / "manifest.jsonl",
                           std::ios::binary | std::ios::trunc);
    if (!manifest) {
        throw std::runtime_error("cannot write manifest in " + args.outdir);
    }
    for (int i = 0; i < args.count; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "pair-%04d", i);
        const SynthPair pair =
            synth_pair(specs[static_cast<std::size_t>(i)], pair_seeds.bits(static_cast<std::uint64_t>(i)));
        const std::string ref_name = std::string(id) + ".ref.png";
        const std::string tgt_name = std::string(id) + ".tgt.png";
        const std::string truth_name = std::string(id) + ".truth.png";
        save_image_png(pair.reference, fs::path(args.outdir) / ref_name);
        save_image_png(pair.target, fs::path(args.outdir) / tgt_name);
        save_mask(pair.truth, fs::path(args.outdir) / truth_name);

        ManifestRecord record;
        record.id = id;
        record.reference_path = ref_name;
        record.target_path = tgt_name;
        record.task_tag = region.shape == RegionShape::Rect ? "rect" : "ellipse";
        record.extra["truth_path"] = truth_name;
        manifest << manifest_record_to_json(record).dump() << '\n';
    }
    manifest.close();
    if (!manifest) {
        throw std::runtime_error("failed writing manifest in " + args.outdir);
    }
    std::cout << "wrote " << args.count << " pairs to " << args.outdir << "\n";
    return 0;
}

struct MaskGenArgs {
    std::string reference;
    std::string target;
    MaskGenConfig config;
    std::string out_prefix;
};

void validate_flags_or_usage_error(const MaskGenConfig& config) {
    try {
        config.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

int cmd_maskgen(const MaskGenArgs& args) {
    validate_flags_or_usage_error(args.config);
    const ImageBuffer reference = load_image(args.reference);
    const ImageBuffer target = load_image(args.target);

    const BinaryMask step1 = pixel_diff(reference, target, args.config.tolerance);
    const BinaryMask step2 = dilate(step1, args.config.dilation_radius);
    const BinaryMask step3 =
        filter_components(step2, args.config.min_component_area, args.config.connectivity);
    const BinaryMask step4 = maxpool(step3, args.config.pool_kernel);
    const EditStats stats = edit_stats_for(step4, reference.pixel_count());

    save_mask(step1, args.out_prefix + ".step1.png");
    save_mask(step2, args.out_prefix + ".step2.png");
    save_mask(step3, args.out_prefix + ".step3.png");
    save_mask(step4, args.out_prefix + ".step4.png");

    json j;
    j["a_edit"] = stats.a_edit;
    j["a_total"] = stats.a_total;
    if (stats.x) {
        j["x"] = *stats.x;
    } else {
        j["x"] = nullptr;
    }
    j["degenerate_no_edit"] = stats.degenerate_no_edit;
    j["degenerate_full_edit"] = stats.degenerate_full_edit;
    json weights;
    for (WeightFunctionKind kind :
         {WeightFunctionKind::Linear, WeightFunctionKind::ExponentialRoot,
          WeightFunctionKind::Logarithmic, WeightFunctionKind::QuadraticRoot}) {
        weights[weight_kind_name(kind)] = stats.x ? evaluate(kind, *stats.x) : 1.0;
    }
    j["w"] = weights;
    json config;
    config["tolerance"] = args.config.tolerance;
    config["dilation_radius"] = args.config.dilation_radius;
    config["min_component_area"] = args.config.min_component_area;
    config["connectivity"] = args.config.connectivity;
    config["pool_kernel"] = args.config.pool_kernel;
    j["config"] = config;

    std::ofstream stats_out(args.out_prefix + ".stats.json", std::ios::binary | std::ios::trunc);
    if (!stats_out) {
        throw std::runtime_error("cannot write " + args.out_prefix + ".stats.json");
    }
    stats_out << j.dump(2) << '\n';

    std::cout << "a_edit=" << stats.a_edit << " a_total=" << stats.a_total;
    if (stats.x) {
        std::cout << " x=" << *stats.x;
    }
    if (stats.degenerate_no_edit) {
        std::cout << " (no edit detected)";
    }
    if (stats.degenerate_full_edit) {
        std::cout << " (full-image edit)";
    }
    std::cout << "\n";
    return 0;
}

struct BatchArgs {
    std::string manifest;
    RunConfig config;
    std::string weight_fn = "log";
    bool allow_errors = false;
};

int cmd_batch(const BatchArgs& args) {
    RunConfig config = args.config;
    try {
        config.weight_kind = parse_weight_kind(args.weight_fn);
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("--weight-fn: ") + e.what());
    }
    validate_flags_or_usage_error(config.maskgen);
    if (config.parallelism < 1) {
        throw UsageError("--parallelism: must be >= 1");
    }
    if (!(config.x_cap >= 1.0)) {
        throw UsageError("--x-cap: must be >= 1");
    }
    std::cout << "batch: manifest=" << args.manifest << " outdir=" << config.output_dir.string()
              << " tolerance=" << config.maskgen.tolerance
              << " dilation=" << config.maskgen.dilation_radius
              << " min-area=" << config.maskgen.min_component_area
              << " connectivity=" << config.maskgen.connectivity
              << " pool=" << config.maskgen.pool_kernel << " weight-fn=" << args.weight_fn
              << " x-cap=" << config.x_cap << " parallelism=" << config.parallelism << "\n";
    const BatchResult result = run_batch(args.manifest, config);
    std::cout << "processed " << result.summary.total() << " records: ok " << result.summary.ok
              << ", degenerate " << result.summary.degenerate << ", error "
              << result.summary.error << "\n"
              << "output manifest: " << result.output_manifest.string() << "\n";
    if (result.summary.error > 0 && !args.allow_errors) {
        return 1;
    }
    return 0;
}

struct ReportArgs {
    std::string manifest;
    std::string out; // optional JSON destination
};

int cmd_report(const ReportArgs& args) {
    const CorpusReport rep = report(args.manifest);
    std::cout << rep.to_text();
    if (!args.out.empty()) {
        std::ofstream out(args.out, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + args.out);
        }
        out << rep.to_json().dump(2) << '\n';
    }
    return 0;
}

struct EmaSimArgs {
    std::string params = "10007";
    std::string workers = "1,2,4,8";
    double decay = 0.999;
    std::uint64_t steps = 100;
    std::uint64_t seed = 0;
    bool accounting_only = false;
    bool constant_trajectory = false;
    std::string out = "-";
};

std::uint64_t parse_param_count(const std::string& text) {
    try {
        std::size_t pos = 0;
        const long double v = std::stold(text, &pos);
        if (pos != text.size() || !(v >= 1.0L) || v > 1.8e19L || v != std::floor(v)) {
            throw std::invalid_argument(text);
        }
        return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
        throw UsageError("--params: '" + text + "' is not a positive integer");
    }
}

std::vector<std::uint32_t> parse_worker_list(const std::string& text) {
    std::vector<std::uint32_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            const unsigned long v = std::stoul(item);
            if (v < 1 || v > 0xFFFFFFFFul) {
                throw std::invalid_argument(item);
            }
            out.push_back(static_cast<std::uint32_t>(v));
        } catch (const std::exception&) {
            throw UsageError("--workers: '" + item + "' is not a positive integer");
        }
    }
    if (out.empty()) {
        throw UsageError("--workers: expected a comma-separated list of worker counts");
    }
    return out;
}

int cmd_ema_sim(const EmaSimArgs& args) {
    const std::uint64_t total_params = parse_param_count(args.params);
    const std::vector<std::uint32_t> worker_counts = parse_worker_list(args.workers);
    for (std::uint32_t n : worker_counts) {
        if (n > total_params) {
            throw UsageError("--workers: worker count exceeds --params");
        }
    }
    EmaConfig config;
    config.decay = args.decay;
    config.steps = args.steps;
    try {
        config.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    constexpr std::uint64_t kSimulationLimit = 1ull << 28;
    if (!args.accounting_only && total_params > kSimulationLimit) {
        throw std::runtime_error(
            "refusing to allocate more than 2^28 parameters; pass --accounting-only");
    }

    json report;
    report["params"] = total_params;
    report["decay"] = args.decay;
    report["steps"] = args.steps;
    report["seed"] = args.seed;
    report["update_every"] = 1;
    report["accounting_only"] = args.accounting_only;
    report["constant_trajectory"] = args.constant_trajectory;
    json results = json::array();

    std::cout << "ema-sim: params=" << total_params << " decay=" << args.decay
              << " steps=" << args.steps << " seed=" << args.seed
              << " mode=" << (args.constant_trajectory ? "constant" : "walk")
              << (args.accounting_only ? " (accounting only)" : "") << "\n";
    std::cout << "  N      equal   bytes/worker        GiB/worker  elems/worker/step  share\n";

    bool all_equal = true;
    for (std::uint32_t n : worker_counts) {
        const ShardLayout layout = partition(total_params, n);
        const MemoryReport memory = memory_report(layout);
        const ComputeReport compute = compute_report(layout);
        const std::uint64_t max_elems =
            *std::max_element(compute.per_worker_elements_per_step.begin(),
                              compute.per_worker_elements_per_step.end());
        // Decimal gigabytes (1e9 bytes), the convention of the N-way
        // sizing rule this table checks.
        const double gib = static_cast<double>(memory.per_worker_bytes) / 1e9;

        json entry;
        entry["workers"] = n;
        entry["per_worker_bytes"] = memory.per_worker_bytes;
        entry["total_bytes"] = memory.total_bytes;
        entry["formula_check"] = memory.formula_check;
        entry["gib_per_worker"] = gib;
        entry["elements_per_worker_per_step"] = max_elems;
        entry["worker_share"] = compute.max_worker_share;

        std::ostringstream row;
        row << "  " << std::left << std::setw(7) << n;
        if (args.accounting_only) {
            row << std::setw(8) << "-";
            entry["bitwise_equal"] = nullptr;
        } else {
            TrajectoryOptions options;
            options.constant = args.constant_trajectory;
            const SimulationResult sim = simulate(total_params, n, config, args.seed, options);
            all_equal = all_equal && sim.bitwise_equal;
            row << std::setw(8) << (sim.bitwise_equal ? "yes" : "NO");
            entry["bitwise_equal"] = sim.bitwise_equal;
            if (sim.closed_form_max_rel_dev) {
                entry["closed_form_max_rel_dev"] = *sim.closed_form_max_rel_dev;
            }
        }
        row << std::right << std::setw(14) << memory.per_worker_bytes << "  " << std::setw(16)
            << std::fixed << std::setprecision(1) << gib << "  " << std::setw(17) << max_elems
            << "  " << std::setprecision(4) << compute.max_worker_share;
        std::cout << row.str() << "\n";
        results.push_back(entry);
    }
    report["results"] = results;

    if (args.out == "-") {
        std::cout << report.dump(2) << "\n";
    } else {
        std::ofstream out(args.out, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + args.out);
        }
        out << report.dump(2) << '\n';
        std::cout << "report: " << args.out << "\n";
    }
    return all_equal ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"editkit: edit-mask extraction, adaptive loss weighting, and sharded-EMA "
                 "simulation for image-editing corpora"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    CLI::App* synth = app.add_subcommand("synth", "generate synthetic (reference, target) pairs "
                                                  "with ground-truth masks and a manifest");
    synth->add_option("--count", synth_args.count, "number of pairs")->capture_default_str();
    synth->add_option("--width", synth_args.width, "image width, pixels")->capture_default_str();
    synth->add_option("--height", synth_args.height, "image height, pixels")->capture_default_str();
    synth->add_option("--region", synth_args.region, "edit region, rect:x,y,w,h or ellipse:x,y,w,h")
        ->capture_default_str();
    synth->add_option("--noise", synth_args.noise, "max |reference-target| noise outside the region")
        ->capture_default_str();
    synth->add_option("--speckle", synth_args.speckle, "number of isolated difference pixels")
        ->capture_default_str();
    synth->add_option("--seed", synth_args.seed, "generator seed")->capture_default_str();
    synth->add_option("--outdir", synth_args.outdir, "output directory")->required();

    MaskGenArgs maskgen_args;
    CLI::App* maskgen = app.add_subcommand(
        "maskgen", "run the mask pipeline on one pair and dump every intermediate step");
    maskgen->add_option("--reference", maskgen_args.reference, "reference image")->required();
    maskgen->add_option("--target", maskgen_args.target, "target image")->required();
    maskgen->add_option("--tolerance", maskgen_args.config.tolerance,
                        "per-channel difference threshold")
        ->capture_default_str();
    maskgen->add_option("--dilation", maskgen_args.config.dilation_radius, "dilation radius, cells")
        ->capture_default_str();
    maskgen->add_option("--min-area", maskgen_args.config.min_component_area,
                        "minimum connected-component area, cells")
        ->capture_default_str();
    maskgen->add_option("--connectivity", maskgen_args.config.connectivity, "4 or 8")
        ->capture_default_str();
    maskgen->add_option("--pool", maskgen_args.config.pool_kernel, "max-pool kernel, pixels")
        ->capture_default_str();
    maskgen->add_option("--out-prefix", maskgen_args.out_prefix, "prefix for step dumps and stats")
        ->required();

    BatchArgs batch_args;
    CLI::App* batch = app.add_subcommand("batch", "process a JSONL manifest of pairs");
    batch->add_option("--manifest", batch_args.manifest, "input manifest (JSONL)")->required();
    std::string batch_outdir;
    batch->add_option("--outdir", batch_outdir, "output directory")->required();
    batch->add_option("--tolerance", batch_args.config.maskgen.tolerance,
                      "per-channel difference threshold")
        ->capture_default_str();
    batch->add_option("--dilation", batch_args.config.maskgen.dilation_radius,
                      "dilation radius, cells")
        ->capture_default_str();
    batch->add_option("--min-area", batch_args.config.maskgen.min_component_area,
                      "minimum connected-component area, cells")
        ->capture_default_str();
    batch->add_option("--connectivity", batch_args.config.maskgen.connectivity, "4 or 8")
        ->capture_default_str();
    batch->add_option("--pool", batch_args.config.maskgen.pool_kernel, "max-pool kernel, pixels")
        ->capture_default_str();
    batch->add_option("--weight-fn", batch_args.weight_fn, "linear|exp-root|log|quad-root")
        ->capture_default_str();
    batch->add_option("--x-cap", batch_args.config.x_cap, "upper clamp on the area ratio x")
        ->capture_default_str();
    batch->add_option("--parallelism", batch_args.config.parallelism, "worker count")
        ->capture_default_str();
    batch->add_flag("--fail-fast", batch_args.config.fail_fast,
                    "abort on the first failed record");
    batch->add_flag("--allow-errors", batch_args.allow_errors,
                    "exit 0 even when some records failed");

    ReportArgs report_args;
    CLI::App* report_cmd =
        app.add_subcommand("report", "corpus statistics over an output manifest");
    report_cmd->add_option("--manifest", report_args.manifest, "output manifest (JSONL)")
        ->required();
    report_cmd->add_option("--out", report_args.out, "write the JSON report here");

    EmaSimArgs ema_args;
    CLI::App* ema = app.add_subcommand(
        "ema-sim", "verify sharded-EMA equivalence and report memory/compute per worker");
    ema->add_option("--params", ema_args.params, "flat parameter count (integers or 20e9 style)")
        ->capture_default_str();
    ema->add_option("--workers", ema_args.workers, "comma-separated worker counts")
        ->capture_default_str();
    ema->add_option("--decay", ema_args.decay, "EMA decay in (0,1)")->capture_default_str();
    ema->add_option("--steps", ema_args.steps, "trajectory steps")->capture_default_str();
    ema->add_option("--seed", ema_args.seed, "trajectory seed")->capture_default_str();
    ema->add_flag("--accounting-only", ema_args.accounting_only,
                  "memory/compute tables only, no allocation");
    ema->add_flag("--constant-trajectory", ema_args.constant_trajectory,
                  "hold parameters constant and check the closed form");
    ema->add_option("--out", ema_args.out, "JSON report destination ('-' for stdout)")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*synth) {
            return cmd_synth(synth_args);
        }
        if (*maskgen) {
            return cmd_maskgen(maskgen_args);
        }
        if (*batch) {
            batch_args.config.output_dir = batch_outdir;
            return cmd_batch(batch_args);
        }
        if (*report_cmd) {
            return cmd_report(report_args);
        }
        if (*ema) {
            return cmd_ema_sim(ema_args);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
