#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "chronic/behavior.hpp"
#include "chronic/capability.hpp"
#include "chronic/condition.hpp"
#include "chronic/dataset.hpp"
#include "chronic/offline_q.hpp"
#include "chronic/reward.hpp"

namespace chronic {

/// Everything one condition needs: dynamics, clinician mixture, state grid.
struct ConditionBundle {
    ConditionSpec spec;
    BehaviorConfig behavior;
    /// Execution-intensity-naive grid; the aware grid adds eps_edges.
    DiscretizationSpec discretization;
    std::vector<double> eps_edges;

    DiscretizationSpec grid(bool eps_aware) const;
};

ConditionBundle default_bundle(Condition c);

struct StudyASettings {
    double beta = 2.5;
    double deploy_eps = 1.0;
};

struct StudyBSettings {
    std::vector<double> train_eps{0.25, 0.5, 0.75};
    double naive_eps = 0.5;
    std::vector<double> deploy_eps{0.25, 0.5, 0.75, 0.9};
    RewardKind reward = RewardKind::Terminal;
    double beta = 2.5;
    std::vector<std::uint64_t> seeds{1, 2, 3};
};

/// Full resolved configuration of an experiment. Defaults reproduce the
/// reference study settings, so a run with no config file is that run.
struct ExperimentConfig {
    std::vector<Condition> conditions{Condition::HTN, Condition::T2D};
    int train_patients = 2000;
    int eval_patients = 1000;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::array<ConditionBundle, 2> bundles{default_bundle(Condition::HTN), default_bundle(Condition::T2D)};
    RewardConfig reward;
    TrainConfig train;
    CapabilityConfig capability;
    StudyASettings study_a;
    StudyBSettings study_b;
    std::string output_dir = "out";

    const ConditionBundle& bundle(Condition c) const { return bundles[c == Condition::HTN ? 0 : 1]; }
    ConditionBundle& bundle(Condition c) { return bundles[c == Condition::HTN ? 0 : 1]; }

    void validate() const;
};

void to_json(nlohmann::json& j, const ConditionSpec& s);
void from_json(const nlohmann::json& j, ConditionSpec& s);
void to_json(nlohmann::json& j, const BehaviorConfig& b);
void from_json(const nlohmann::json& j, BehaviorConfig& b);
void to_json(nlohmann::json& j, const DiscretizationSpec& d);
void from_json(const nlohmann::json& j, DiscretizationSpec& d);
void to_json(nlohmann::json& j, const RewardConfig& r);
void from_json(const nlohmann::json& j, RewardConfig& r);
void to_json(nlohmann::json& j, const TrainConfig& t);
void from_json(const nlohmann::json& j, TrainConfig& t);
void to_json(nlohmann::json& j, const CapabilityConfig& c);
void from_json(const nlohmann::json& j, CapabilityConfig& c);
void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

/// Missing or mistyped field; the message names the full field path.
class ConfigFieldError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string dump_config(const ExperimentConfig& config);

/// Content hashes of the canonical JSON form.
std::uint64_t spec_hash(const ConditionSpec& s);
std::uint64_t spec_hash(const BehaviorConfig& b);
std::uint64_t spec_hash(const DiscretizationSpec& d);
std::uint64_t spec_hash(const RewardConfig& r);
std::uint64_t spec_hash(const TrainConfig& t);

}  // namespace chronic
