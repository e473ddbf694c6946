#pragma once

#include <array>
#include <cstdint>

#include "chronic/condition.hpp"
#include "chronic/dataset.hpp"
#include "chronic/env.hpp"
#include "chronic/rng.hpp"

namespace chronic {

/// Escalation and operational-action habits of one clinician cluster.
///
/// First-line escalation (m = 0, uncontrolled) happens with probability
/// min(escalate1_base + escalate1_slope * w, escalate1_cap). Second-line
/// escalation (m = 1, uncontrolled, w >= escalate2_min_weeks) happens with
/// probability min(escalate2_base + escalate2_slope * (w - min_weeks), cap).
struct ArchetypeSpec {
    Archetype id = Archetype::Low;
    double population_share = 0.0;
    double escalate1_base = 0.0;
    double escalate1_slope = 0.0;
    double escalate1_cap = 0.0;
    double escalate2_base = 0.0;
    double escalate2_slope = 0.0;
    double escalate2_cap = 0.0;
    int escalate2_min_weeks = 0;
    double op_prob_uncontrolled = 0.0;
    double op_prob_controlled = 0.0;

    double first_line_prob(int weeks_on) const;
    double second_line_prob(int weeks_on) const;
};

struct BehaviorConfig {
    std::array<ArchetypeSpec, kNumArchetypes> archetypes;

    const ArchetypeSpec& at(Archetype a) const { return archetypes[static_cast<int>(a)]; }
    void validate() const;
};

BehaviorConfig default_behavior(Condition c);

Archetype assign_archetype(const BehaviorConfig& config, Rng& rng);

/// The action a clinician of this archetype proposes at the current visit.
/// Never de-escalates.
Action behavior_action(const ArchetypeSpec& archetype, const PatientState& state,
                       const ConditionSpec& spec, Rng& rng);

/// Rolls out `pop_size` behavior-policy patients for the full horizon and
/// records every weekly transition. Each proposed medication change
/// executes with probability `eps_gate`; a blocked proposal is recorded as
/// holding the current level. Stored state indices use `disc`.
Dataset generate_dataset(int pop_size, const ConditionSpec& spec, const BehaviorConfig& behavior,
                         const DiscretizationSpec& disc, double eps_gate, std::uint64_t seed, std::uint64_t first_patient_id = 0);

}  // namespace chronic
