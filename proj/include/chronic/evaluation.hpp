#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "chronic/behavior.hpp"
#include "chronic/capability.hpp"
#include "chronic/config.hpp"
#include "chronic/env.hpp"
#include "chronic/offline_q.hpp"

namespace chronic {

struct Decision {
    Action action;
    /// The policy had no data for this state and used its default.
    bool fallback = false;
};

/// A treatment policy evaluated in fresh simulated patients.
class Policy {
public:
    virtual ~Policy() = default;
    virtual void begin_patient(Rng& /*policy_rng*/) {}
    virtual Decision choose(const PatientState& state, double eps_deploy, Rng& policy_rng) = 0;
};

/// The clinician archetype mixture that generated the offline data.
class BehaviorMixturePolicy final : public Policy {
public:
    BehaviorMixturePolicy(BehaviorConfig behavior, ConditionSpec spec);
    void begin_patient(Rng& rng) override;
    Decision choose(const PatientState& state, double eps_deploy, Rng& rng) override;

private:
    BehaviorConfig behavior_;
    ConditionSpec spec_;
    Archetype current_ = Archetype::Low;
};

/// Greedy policy read off a trained Q-table. Aware tables see the
/// deployment execution intensity as part of the state; a bucket absent
/// from training maps to the nearest trained bucket.
class GreedyQPolicy final : public Policy {
public:
    GreedyQPolicy(const QTable& table, double eps_min_med_change = 0.0);
    Decision choose(const PatientState& state, double eps_deploy, Rng& rng) override;

private:
    const QTable& table_;
    double eps_min_med_change_;
};

class FixedPolicy final : public Policy {
public:
    explicit FixedPolicy(Action action) : action_(action) {}
    Decision choose(const PatientState&, double, Rng&) override { return {action_, false}; }

private:
    Action action_;
};

struct PatientOutcome {
    bool ttg = false;
    bool tto = false;
    bool ttc = false;
    /// Baseline minus the mean of the final `kFinalWindow` observations.
    double reduction = 0.0;
    int deescalations = 0;
    int fallbacks = 0;
};

inline constexpr int kFinalWindow = 4;

struct SeedMetrics {
    std::uint64_t seed = 0;
    int n = 0;
    double ttg_rate = 0.0;  // percent
    double tto_rate = 0.0;
    double ttc_rate = 0.0;
    double mean_reduction = 0.0;
    long deescalations = 0;
    long fallbacks = 0;
};

SeedMetrics aggregate(const std::vector<PatientOutcome>& outcomes, std::uint64_t seed);

/// Simulates `n_patients` fresh patients (evaluation stream namespace) for
/// the full horizon. Medication changes execute with probability `eps_deploy`.
std::vector<PatientOutcome> rollout_policy(Policy& policy, const ConditionSpec& spec, int n_patients,
                                           double eps_deploy, std::uint64_t seed);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

/// Mean and sample standard deviation (n - 1); std is 0 for one value.
MeanStd summarize(const std::vector<double>& values);

struct EvalReport {
    std::string label;
    Condition condition = Condition::HTN;
    std::optional<double> eps_deploy;
    int n_patients = 0;
    std::vector<SeedMetrics> per_seed;

    MeanStd ttg() const;
    MeanStd tto() const;
    MeanStd ttc() const;
    MeanStd reduction() const;
    long deescalations() const;
    long fallbacks() const;
};

namespace labels {
inline constexpr const char* kBehavior = "behavior";
inline constexpr const char* kUniformTiered = "uniform-tiered";
inline constexpr const char* kCapabilityTiered = "capability-tiered";
inline constexpr const char* kCapabilityTerminal = "capability-terminal";
/// Not a headline row; the terminal-reward counterpart for the weighting comparison.
inline constexpr const char* kUniformTerminal = "uniform-terminal";
inline constexpr const char* kEpsNaive = "eps-naive";
inline constexpr const char* kEpsAware = "eps-aware";
}  // namespace labels

struct KappaRecord {
    Condition condition = Condition::HTN;
    std::uint64_t seed = 0;
    CapabilityEstimate estimate;
};

struct StudyResult {
    std::vector<EvalReport> reports;
    /// Extra configurations kept out of the headline table.
    std::vector<EvalReport> supplementary;
    std::vector<KappaRecord> kappas;

    const EvalReport* find(Condition c, const std::string& label, std::optional<double> eps = std::nullopt) const;
};

/// Behavior baseline plus the three trained configurations, per condition.
StudyResult study_a(const ExperimentConfig& config, const std::vector<std::uint64_t>& seeds, int jobs = 1);

/// Execution-intensity naive vs aware policies swept over deployment eps.
StudyResult study_b(const ExperimentConfig& config, const std::vector<std::uint64_t>& seeds, int jobs = 1);

/// One row per report x seed, then one summary row per report.
void write_reports_csv(const std::vector<EvalReport>& reports, const std::filesystem::path& path);
std::vector<EvalReport> read_reports_csv(const std::filesystem::path& path);
void write_kappa_csv(const std::vector<KappaRecord>& kappas, const std::filesystem::path& path);
std::string markdown_table(const std::vector<EvalReport>& reports);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

}  // namespace chronic
