#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chronic/config.hpp"
#include "chronic/evaluation.hpp"

namespace chronic::acceptance {

struct Check {
    std::string what;
    bool pass = false;
};

struct CriterionResult {
    int number = 0;
    std::string title;
    std::vector<Check> checks;

    bool pass() const;
    /// "PASS [n] title" or "FAIL [n] title (k of m checks failed)".
    std::string summary_line() const;
};

/// Behavior-baseline TTG/TTC/reduction bands, plus runtime when measured.
CriterionResult behavior_calibration(const StudyResult& study_a, std::optional<double> behavior_seconds = {});

/// Archetype ordering on every seed and the extreme kappa bands.
CriterionResult kappa_ordering(const StudyResult& study_a);

/// Capability-weighted terminal vs behavior and uniform-tiered vs behavior on TTC.
CriterionResult study_a_headline(const StudyResult& study_a, std::optional<double> study_seconds = {});

/// Capability-weighted TTC >= uniform-weighted TTC on T2D for each reward kind.
CriterionResult capability_dominance(const StudyResult& study_a);

/// Aware vs naive across deployment eps.
CriterionResult study_b_generalization(const StudyResult& study_b);

/// Simulator, reward, capability, training, and serialization properties
/// checked on freshly generated data.
CriterionResult property_suites(const ExperimentConfig& config);

/// Positive-event density on a constructed population.
CriterionResult reward_density_bands(const ExperimentConfig& config);

/// A population of `patients` trajectories where `ttg_only` reach only the
/// first milestone and `full` reach all three and end controlled.
Dataset synthetic_density_population(const ConditionSpec& spec, int patients, int ttg_only, int full);

/// Orderings evaluated by the study commands' --check flag.
std::vector<CriterionResult> study_a_orderings(const StudyResult& study_a);
std::vector<CriterionResult> study_b_orderings(const StudyResult& study_b);

}  // namespace chronic::acceptance
