#pragma once

#include "itlab/bayes_il.hpp"
#include "itlab/krr.hpp"
#include "itlab/results_io.hpp"
#include "itlab/sem_il.hpp"
#include "itlab/synth_data.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace itlab {

inline constexpr const char* kArtifactVersion = "1.0.0";

enum class ExperimentKind { mappings_census, bayes_il, krr, learning_speed, sem_il_sweep };

const char* to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

struct CensusParams {
    std::vector<int> cardinalities{2, 2};
    std::uint64_t cap = kDefaultEnumerationCap;
    std::string naming = "shapes_and_colors"; ///< or "generic"
};

struct BayesIlParams {
    ILConfig il;
    std::size_t initial_copies = 2; ///< D_0 = copies of the first holistic bijection's graph
    bool ablations = true;          ///< also run without interaction and with a uniform prior
};

struct KrrParams {
    std::size_t points = 10;
    krr::Kernel kernel = krr::Kernel::rbf(10.0);
    std::size_t generations = 10;
    krr::CSchedule schedule = krr::CSchedule::fixed(0.1);
    double threshold = 1e-3;
};

struct LearningSpeedParams {
    std::vector<int> cardinalities{2, 2};
    nn::TrainConfig train{0.1, 5e-4, 200, 4, nn::LossKind::cross_entropy, 0};
    int hidden_dim = 64;
    int code_dim = 16;
};

struct SemIlSweepParams {
    GeneratorConfig generator;
    nn::SemIlConfig model;
    std::vector<double> split_ratios{0.8, 0.5, 0.2, 0.1};
    std::vector<nn::Variant> variants{nn::Variant::baseline, nn::Variant::sem_only, nn::Variant::il_only,
                                      nn::Variant::sem_il, nn::Variant::given_g};
    bool argmax_ablation = true;
    std::size_t confidence_probe_points = 200; ///< 0 disables the confidence/speed record
    std::size_t confidence_trace_every = 20;
    double confidence_split = 0.5;
    bool write_curves = true;

    SemIlSweepParams();
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::mappings_census;
    std::vector<std::uint64_t> seeds{0};
    std::filesystem::path output_dir = "out";
    nlohmann::json params = nlohmann::json::object(); ///< normalized, defaults filled in

    CensusParams census() const;
    BayesIlParams bayes_il() const;
    KrrParams krr() const;
    LearningSpeedParams learning_speed() const;
    SemIlSweepParams sem_il_sweep() const;
};

/// {"kind": ..., "seeds": [...], "params": {...}}. Unknown keys and values
/// that violate the owning module's preconditions throw config_invalid.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Canonical JSON (kind, seeds, params with defaults) used for the hash.
nlohmann::json canonical_config(const ExperimentConfig& config);

/// "0..14" (inclusive range) or "0,3,7" or a single seed.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

struct RunStatus {
    std::string label;
    std::optional<std::uint64_t> seed;
    bool ok = true;
    std::string error;
    std::vector<std::string> files;
};

struct RunManifest {
    std::string kind;
    std::string version = kArtifactVersion;
    std::string config_hash;
    std::vector<RunStatus> runs;
    double duration_seconds = 0.0;

    bool all_ok() const;
    bool any_ok() const;
    nlohmann::ordered_json to_json() const;
};

/// Runs every seed (in parallel with `jobs` workers), writes per-run files
/// and finally manifest.json into config.output_dir.
RunManifest run_experiment(const ExperimentConfig& config, std::size_t jobs = 1);

// Per-kind tables, exposed for tests and the acceptance suite.
Table census_table(const CensusParams& params);
Table census_class_counts(const Table& census);
Table bayes_il_table(const BayesIlParams& params, std::uint64_t seed);
Table krr_table(const KrrParams& params, std::uint64_t seed, Table* active = nullptr);
Table learning_speed_table(const LearningSpeedParams& params, std::uint64_t seed);
Table metrics_table(const nn::SemIlRun& run);

} // namespace itlab
