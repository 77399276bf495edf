#pragma once

// Declarative gateway configuration (one JSON document) and the adapters
// it describes. Relative paths resolve against the config file's directory.

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "livinglab/baseline.hpp"
#include "livinglab/codec.hpp"
#include "livinglab/gateway.hpp"
#include "livinglab/ingest.hpp"
#include "livinglab/metrics.hpp"
#include "livinglab/systems.hpp"

namespace livinglab {

class ConfigError : public DomainError {
public:
    using DomainError::DomainError;
};

struct SystemConfig {
    SystemDescriptor descriptor;
    std::filesystem::path source_path;  // corpus or run file; empty for remote systems
    std::string url;                    // live_remote only
    Schema schema = Schema::Literature;
    std::vector<std::string> fields;    // empty: index every field
    std::filesystem::path head_queries;
    std::filesystem::path publications;
    Bm25Params bm25;
    std::chrono::milliseconds timeout{2000};
};

struct GatewayConfig {
    GatewayOptions options;
    std::string listen_host = "127.0.0.1";
    int listen_port = 8080;
    std::filesystem::path feedback_log;
    std::optional<std::string> sink;
    std::chrono::seconds flush_interval{60};
    RewardWeights weights = RewardWeights::defaults();
    std::vector<SystemConfig> systems;
};

/// Parses and validates; every referenced file must exist. Throws
/// ConfigError naming the offending key or path.
GatewayConfig parse_config(const Json& doc, const std::filesystem::path& base_dir);
GatewayConfig load_config(const std::filesystem::path& path);

/// Loads corpora, run files and indexes and returns one adapter per system.
std::vector<SystemPtr> build_systems(const GatewayConfig& config);

}  // namespace livinglab
