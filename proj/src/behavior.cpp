#include "chronic/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "chronic/config.hpp"
#include "chronic/dataset.hpp"

namespace chronic {

double ArchetypeSpec::first_line_prob(int weeks_on) const {
    return std::min(escalate1_base + escalate1_slope * weeks_on, escalate1_cap);
}

double ArchetypeSpec::second_line_prob(int weeks_on) const {
    if (weeks_on < escalate2_min_weeks) return 0.0;
    return std::min(escalate2_base + escalate2_slope * (weeks_on - escalate2_min_weeks), escalate2_cap);
}

void BehaviorConfig::validate() const {
    double total = 0.0;
    for (int i = 0; i < kNumArchetypes; ++i) {
        const ArchetypeSpec& a = archetypes[i];
        const std::string name(to_string(a.id));
        auto prob = [&](double p, const char* what) {
            if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("archetype " + name + ": " + what + " must be in [0, 1]");
        };
        if (static_cast<int>(a.id) != i) throw ConfigError("archetypes must be listed in order low, high, ops_augmented");
        prob(a.population_share, "population_share");
        prob(a.escalate1_base, "escalate1_base");
        prob(a.escalate1_cap, "escalate1_cap");
        prob(a.escalate2_base, "escalate2_base");
        prob(a.escalate2_cap, "escalate2_cap");
        prob(a.op_prob_uncontrolled, "op_prob_uncontrolled");
        prob(a.op_prob_controlled, "op_prob_controlled");
        if (a.escalate1_cap < a.escalate1_base || a.escalate2_cap < a.escalate2_base) {
            throw ConfigError("archetype " + name + ": escalation caps must be >= bases");
        }
        if (a.escalate2_min_weeks < 0) throw ConfigError("archetype " + name + ": escalate2_min_weeks must be >= 0");
        total += a.population_share;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("archetype population shares must sum to 1");
}

BehaviorConfig default_behavior(Condition c) {
    const bool t2d = c == Condition::T2D;
    BehaviorConfig b;
    b.archetypes[0] = ArchetypeSpec{Archetype::Low, 0.5, 0.10, 0.02, 0.50, 0.05, 0.015, 0.25, t2d ? 16 : 8, 0.05, 0.05};
    b.archetypes[1] = ArchetypeSpec{Archetype::High, 0.3, 0.20, 0.04, 0.70, 0.15, 0.025, 0.45, t2d ? 12 : 6, 0.05, 0.05};
    b.archetypes[2] = b.archetypes[1];
    b.archetypes[2].id = Archetype::OpsAugmented;
    b.archetypes[2].population_share = 0.2;
    b.archetypes[2].op_prob_uncontrolled = 0.45;
    b.archetypes[2].op_prob_controlled = 0.10;
    return b;
}

Archetype assign_archetype(const BehaviorConfig& config, Rng& rng) {
    const double u = uniform01(rng);
    double cumulative = 0.0;
    for (const auto& a : config.archetypes) {
        cumulative += a.population_share;
        if (u < cumulative) return a.id;
    }
    // Rounding in the shares can leave u just above the final cumulative sum.
    for (int i = kNumArchetypes - 1; i >= 0; --i) {
        if (config.archetypes[i].population_share > 0.0) return config.archetypes[i].id;
    }
    return Archetype::Low;
}

Action behavior_action(const ArchetypeSpec& archetype, const PatientState& state, const ConditionSpec& spec,
                       Rng& rng) {
    const bool uncontrolled = !state.controlled(spec);
    const double escalate_draw = uniform01(rng);
    const double op_draw = uniform01(rng);

    Action a{state.med_level, 0};
    if (uncontrolled) {
        if (state.med_level == 0 && escalate_draw < archetype.first_line_prob(state.weeks_on)) {
            a.med_level = 1;
        } else if (state.med_level == 1 && escalate_draw < archetype.second_line_prob(state.weeks_on)) {
            a.med_level = 2;
        }
    }
    a.op = op_draw < (uncontrolled ? archetype.op_prob_uncontrolled : archetype.op_prob_controlled) ? 1 : 0;
    return a;
}

Dataset generate_dataset(int pop_size, const ConditionSpec& spec, const BehaviorConfig& behavior,
                         const DiscretizationSpec& disc, double eps_gate, std::uint64_t seed, std::uint64_t first_patient_id) {
    if (pop_size < 1) throw ConfigError("generate_dataset: pop_size must be >= 1");
    if (!(eps_gate > 0.0 && eps_gate <= 1.0)) throw ConfigError("generate_dataset: eps_gate must be in (0, 1]");
    spec.validate();
    behavior.validate();
    disc.validate();

    Dataset data;
    data.header.condition = spec.condition;
    data.header.eps_gates = {eps_gate};
    data.header.seed = seed;
    data.header.patients = pop_size;
    data.header.horizon_weeks = spec.horizon_weeks;
    data.header.condition_hash = spec_hash(spec);
    data.header.behavior_hash = spec_hash(behavior);
    data.header.discretization_hash = spec_hash(disc);
    data.records.reserve(static_cast<std::size_t>(pop_size) * spec.horizon_weeks);

    for (std::uint64_t pid = first_patient_id; pid < first_patient_id + pop_size; ++pid) {
        PatientStreams streams(seed, StreamDomain::TrainingData, pid);
        PatientParams params = sample_patient(spec, streams.params);
        params.archetype = assign_archetype(behavior, streams.policy);
        const ArchetypeSpec& clinician = behavior.at(*params.archetype);

        PatientState state = initial_state(params, spec, streams.dynamics);
        for (int t = 0; t < spec.horizon_weeks; ++t) {
            const Action proposed = behavior_action(clinician, state, spec, streams.policy);
            const bool executes = bernoulli(streams.gate, eps_gate);
            const Action taken = executes ? proposed : Action{state.med_level, proposed.op};
            PatientState next = step(params, state, proposed, executes, spec, streams.dynamics);

            TransitionRecord r;
            r.patient_id = static_cast<std::uint32_t>(pid);
            r.archetype = *params.archetype;
            r.week = t;
            r.action = action_index(taken);
            r.milestone_events = next.last_events;
            r.terminal = t == spec.horizon_weeks - 1;
            r.raw_obs = state.observed;
            r.raw_next_obs = next.observed;
            r.baseline = state.baseline;
            r.med_level = state.med_level;
            r.weeks_on = state.weeks_on;
            r.next_med_level = next.med_level;
            r.next_weeks_on = next.weeks_on;
            r.med_changed = taken.med_level != state.med_level;
            r.op_taken = taken.op == 1;
            r.next_stall_bits = detect_stalls(next, spec).bits();
            r.eps = eps_gate;
            data.records.push_back(r);
            state = std::move(next);
        }
    }
    data.header.record_count = data.records.size();
    index_dataset(data, disc);
    return data;
}

}  // namespace chronic
