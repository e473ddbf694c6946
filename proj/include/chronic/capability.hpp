#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <vector>

#include "chronic/condition.hpp"
#include "chronic/dataset.hpp"
#include "chronic/env.hpp"

namespace chronic {

/// Outcome-score settings. T2D reductions are multiplied by
/// `unit_scale` so scores are comparable with mmHg.
struct CapabilityConfig {
    double ttc_bonus = 5.0;
    double htn_unit_scale = 1.0;
    double t2d_unit_scale = 10.0;

    double unit_scale(Condition c) const { return c == Condition::HTN ? htn_unit_scale : t2d_unit_scale; }
};

/// Per-patient summary extracted from a dataset trajectory.
struct TrajectoryOutcome {
    std::uint32_t patient_id = 0;
    Archetype archetype = Archetype::Low;
    double mean_reduction = 0.0;  // over weeks 1..T_end, native units
    bool ttc = false;
};

std::vector<TrajectoryOutcome> trajectory_outcomes(const Dataset& data);

double outcome_score(double mean_reduction, bool ttc_achieved, double unit_scale, double ttc_bonus = 5.0);

struct CapabilityEstimate {
    std::array<bool, kNumArchetypes> present{};
    std::array<int, kNumArchetypes> patients{};
    std::array<double, kNumArchetypes> raw_score{};
    /// z-scores across the present archetypes (population std); 0 for absent ones.
    std::array<double, kNumArchetypes> kappa{};

    double operator[](Archetype a) const { return kappa[static_cast<int>(a)]; }
};

class DegenerateCapabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// z-normalizes group scores. Needs at least two groups with distinct means.
CapabilityEstimate z_normalize(const std::array<std::optional<double>, kNumArchetypes>& group_scores);

CapabilityEstimate infer_kappa(const Dataset& data, const CapabilityConfig& config = {});

/// w = exp(beta * kappa) per archetype. Throws ConfigError for beta < 0.
std::array<double, kNumArchetypes> transition_weights(const CapabilityEstimate& estimate, double beta);

void write_capability_csv(const CapabilityEstimate& estimate, double beta, Condition condition,
                          const std::filesystem::path& path);

}  // namespace chronic
