#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "editkit/weighting.hpp"

// JSONL corpus manifests. One JSON object per line; records are processed
// and re-emitted in file order. Fields this toolkit does not know are
// carried through to the output untouched.

namespace editkit {

using json = nlohmann::json;

struct ManifestRecord {
    std::string id;
    std::string reference_path;
    std::string target_path;
    std::optional<std::string> instruction;
    std::optional<std::string> task_tag;
    json extra = json::object(); // pass-through fields
};

struct OutputRecord {
    std::string id;
    std::string mask_path; // relative to the output manifest; empty on error
    std::uint64_t a_edit = 0;
    std::uint64_t a_total = 0;
    std::optional<double> x; // absent for no-edit pairs
    WeightFunctionKind weight_kind = kDefaultWeightKind;
    double w = 1.0;
    bool degenerate_no_edit = false;
    bool degenerate_full_edit = false;
    std::optional<std::string> error;
    json extra = json::object();
};

namespace detail {

inline const char* kKnownManifestKeys[] = {"id", "reference_path", "target_path", "instruction",
                                           "task_tag"};

inline bool is_known_manifest_key(const std::string& key) {
    for (const char* k : kKnownManifestKeys) {
        if (key == k) {
            return true;
        }
    }
    return false;
}

} // namespace detail

inline ManifestRecord manifest_record_from_json(const json& j) {
    if (!j.is_object()) {
        throw std::runtime_error("record is not a JSON object");
    }
    ManifestRecord record;
    record.id = j.value("id", std::string{});
    record.reference_path = j.value("reference_path", std::string{});
    record.target_path = j.value("target_path", std::string{});
    if (record.id.empty()) {
        throw std::runtime_error("record is missing a non-empty 'id'");
    }
    if (record.reference_path.empty() || record.target_path.empty()) {
        throw std::runtime_error("record '" + record.id +
                                 "' is missing 'reference_path' or 'target_path'");
    }
    if (j.contains("instruction") && j["instruction"].is_string()) {
        record.instruction = j["instruction"].get<std::string>();
    }
    if (j.contains("task_tag") && j["task_tag"].is_string()) {
        record.task_tag = j["task_tag"].get<std::string>();
    }
    for (const auto& [key, value] : j.items()) {
        if (!detail::is_known_manifest_key(key)) {
            record.extra[key] = value;
        }
    }
    return record;
}

inline json manifest_record_to_json(const ManifestRecord& record) {
    json j = record.extra;
    j["id"] = record.id;
    j["reference_path"] = record.reference_path;
    j["target_path"] = record.target_path;
    if (record.instruction) {
        j["instruction"] = *record.instruction;
    }
    if (record.task_tag) {
        j["task_tag"] = *record.task_tag;
    }
    return j;
}

// Parses a JSONL manifest. Malformed lines and duplicate ids are hard
// errors that name the offending line; record order is preserved.
inline std::vector<ManifestRecord> ingest_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open manifest: " + path.string());
    }
    std::vector<ManifestRecord> records;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw std::runtime_error("manifest " + path.string() + " line " +
                                     std::to_string(line_no) + ": malformed JSON");
        }
        ManifestRecord record;
        try {
            record = manifest_record_from_json(j);
        } catch (const std::exception& e) {
            throw std::runtime_error("manifest " + path.string() + " line " +
                                     std::to_string(line_no) + ": " + e.what());
        }
        if (!seen.insert(record.id).second) {
            throw std::runtime_error("manifest " + path.string() + " line " +
                                     std::to_string(line_no) + ": duplicate id '" + record.id +
                                     "'");
        }
        records.push_back(std::move(record));
    }
    return records;
}

inline json output_record_to_json(const OutputRecord& record) {
    json j = record.extra;
    j["id"] = record.id;
    if (record.error) {
        j["error"] = *record.error;
        return j;
    }
    j["mask_path"] = record.mask_path;
    j["a_edit"] = record.a_edit;
    j["a_total"] = record.a_total;
    if (record.x) {
        j["x"] = *record.x;
    }
    j["weight_kind"] = weight_kind_name(record.weight_kind);
    j["w"] = record.w;
    j["degenerate_no_edit"] = record.degenerate_no_edit;
    j["degenerate_full_edit"] = record.degenerate_full_edit;
    return j;
}

inline OutputRecord output_record_from_json(const json& j) {
    if (!j.is_object() || !j.contains("id")) {
        throw std::runtime_error("output record is not an object with an 'id'");
    }
    OutputRecord record;
    record.id = j["id"].get<std::string>();
    if (j.contains("error")) {
        record.error = j["error"].get<std::string>();
        return record;
    }
    record.mask_path = j.value("mask_path", std::string{});
    record.a_edit = j.value("a_edit", std::uint64_t{0});
    record.a_total = j.value("a_total", std::uint64_t{0});
    if (j.contains("x")) {
        record.x = j["x"].get<double>();
    }
    record.weight_kind = parse_weight_kind(j.value("weight_kind", std::string{"log"}));
    record.w = j.value("w", 1.0);
    record.degenerate_no_edit = j.value("degenerate_no_edit", false);
    record.degenerate_full_edit = j.value("degenerate_full_edit", false);
    for (const auto& [key, value] : j.items()) {
        static const std::unordered_set<std::string> known = {
            "id", "mask_path", "a_edit", "a_total", "x", "weight_kind", "w",
            "degenerate_no_edit", "degenerate_full_edit", "error"};
        if (!known.contains(key)) {
            record.extra[key] = value;
        }
    }
    return record;
}

} // namespace editkit
