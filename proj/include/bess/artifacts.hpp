#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <cereal/archives/portable_binary.hpp>
#include <cereal/types/string.hpp>
#include <cereal/types/vector.hpp>

#include "bess/arbitrage_policy.hpp"
#include "bess/errors.hpp"
#include "bess/io.hpp"
#include "bess/kernel_predictor.hpp"

namespace bess {

/// Bumped whenever a stored layout changes; older files are refused.
inline constexpr std::uint32_t kArtifactSchemaVersion = 1;

namespace detail {

struct KernelModelRecord {
    std::int64_t start_seconds = 0;
    std::int32_t step_minutes = 5;
    bool has_offset = false;
    std::int32_t offset_minutes = 0;
    std::uint64_t lookback = 0;
    double sigma = 0.0;
    std::uint64_t k = 0;
    double alpha = 0.0;
    std::vector<double> demand;
    std::vector<double> target_e;
    std::vector<double> target_p;

    template <class Archive>
    void serialize(Archive& ar) {
        ar(start_seconds, step_minutes, has_offset, offset_minutes, lookback, sigma, k, alpha, demand, target_e,
           target_p);
    }
};

struct ValueTableRecord {
    double e_lo = 0.0;
    double e_hi = 0.0;
    double dp_value = 0.0;
    std::vector<double> values;

    template <class Archive>
    void serialize(Archive& ar) {
        ar(e_lo, e_hi, dp_value, values);
    }
};

template <class Record>
std::string encode(const std::string& kind, const Record& record) {
    std::ostringstream out(std::ios::binary);
    {
        cereal::PortableBinaryOutputArchive ar(out);
        ar(kind, kArtifactSchemaVersion, record);
    }
    return out.str();
}

template <class Record>
Record decode(const std::filesystem::path& path, const std::string& kind) {
    if (!std::filesystem::exists(path)) throw DataError("artifact not found: " + path.string());
    std::istringstream in(io::read_file(path), std::ios::binary);
    std::string stored_kind;
    std::uint32_t version = 0;
    Record record;
    try {
        cereal::PortableBinaryInputArchive ar(in);
        ar(stored_kind);
        if (stored_kind != kind) {
            throw DataError(path.string() + ": expected a " + kind + " artifact, found '" + stored_kind + "'");
        }
        ar(version);
        if (version != kArtifactSchemaVersion) {
            throw DataError(path.string() + ": artifact schema version " + std::to_string(version) +
                            " is not supported (expected " + std::to_string(kArtifactSchemaVersion) + ")");
        }
        ar(record);
    } catch (const DataError&) {
        throw;
    } catch (const std::exception& e) {
        throw DataError(path.string() + ": corrupt artifact (" + e.what() + ")");
    }
    return record;
}

} // namespace detail

inline void save_kernel_model(const std::filesystem::path& path, const KernelModel& model) {
    const auto& ts = model.training();
    const auto& cfg = model.config();
    detail::KernelModelRecord r;
    r.start_seconds = ts.axis().start.time_since_epoch().count();
    r.step_minutes = ts.axis().step_minutes;
    r.has_offset = ts.axis().utc_offset.has_value();
    r.offset_minutes = r.has_offset ? static_cast<std::int32_t>(ts.axis().utc_offset->count()) : 0;
    r.lookback = cfg.lookback;
    r.sigma = cfg.sigma;
    r.k = cfg.k;
    r.alpha = cfg.alpha;
    r.demand = ts.demand();
    r.target_e = ts.target_e();
    r.target_p = ts.target_p();
    io::write_file_atomic(path, detail::encode("kernel-model", r));
}

inline KernelModel load_kernel_model(const std::filesystem::path& path) {
    const auto r = detail::decode<detail::KernelModelRecord>(path, "kernel-model");
    TimeAxis axis;
    axis.start = sys_seconds{std::chrono::seconds{r.start_seconds}};
    axis.step_minutes = r.step_minutes;
    if (r.has_offset) axis.utc_offset = minutes{r.offset_minutes};
    const std::size_t W = r.lookback;
    if (W < 1 || r.demand.size() <= W || r.target_e.size() != r.demand.size() - W ||
        r.target_p.size() != r.target_e.size()) {
        throw DataError(path.string() + ": inconsistent kernel model sizes");
    }
    // Entry j stores the target of step j + W.
    std::vector<double> e_full(r.demand.size(), 0.0), p_full(r.demand.size(), 0.0);
    std::copy(r.target_e.begin(), r.target_e.end(), e_full.begin() + static_cast<std::ptrdiff_t>(W));
    std::copy(r.target_p.begin(), r.target_p.end(), p_full.begin() + static_cast<std::ptrdiff_t>(W));
    auto ts = std::make_shared<const TrainingSet>(std::make_shared<const std::vector<double>>(r.demand), axis,
                                                  std::move(e_full), std::move(p_full), W);
    KernelConfig cfg;
    cfg.lookback = W;
    cfg.sigma = r.sigma;
    cfg.k = r.k;
    cfg.alpha = r.alpha;
    return KernelModel(std::make_shared<const NeighborIndex>(ts), cfg);
}

inline void save_value_table(const std::filesystem::path& path, const ValueTablePolicy& policy) {
    detail::ValueTableRecord r{policy.soc_low(), policy.soc_high(), policy.dp_value(), policy.table()};
    io::write_file_atomic(path, detail::encode("value-table", r));
}

inline ValueTablePolicy load_value_table(const std::filesystem::path& path) {
    auto r = detail::decode<detail::ValueTableRecord>(path, "value-table");
    try {
        return ValueTablePolicy(r.e_lo, r.e_hi, std::move(r.values), r.dp_value);
    } catch (const ConfigError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

} // namespace bess
