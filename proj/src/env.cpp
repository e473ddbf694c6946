#include "chronic/env.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace chronic {

std::string_view to_string(Archetype a) {
    switch (a) {
        case Archetype::Low: return "low";
        case Archetype::High: return "high";
        case Archetype::OpsAugmented: return "ops_augmented";
    }
    return "?";
}

Archetype archetype_from_string(std::string_view s) {
    if (s == "low") return Archetype::Low;
    if (s == "high") return Archetype::High;
    if (s == "ops_augmented") return Archetype::OpsAugmented;
    throw ConfigError("unknown archetype '" + std::string(s) + "'");
}

PatientParams sample_patient(const ConditionSpec& spec, Rng& rng) {
    PatientParams p;
    p.setpoint = std::clamp(normal(rng, spec.setpoint_mean, spec.setpoint_sd), spec.setpoint_clip_lo,
                            spec.setpoint_clip_hi);
    p.response_r1 = std::max(normal(rng, spec.r1_mean, spec.r1_sd), spec.r1_floor);
    p.response_r2 = std::max(normal(rng, spec.r2_mean, spec.r2_sd), spec.r2_floor);
    p.adherence = beta(rng, spec.adherence_beta_a, spec.adherence_beta_b);
    return p;
}

double biomarker_mean(const PatientParams& params, const ConditionSpec& spec, int med_level,
                      int weeks_on, bool adherent) {
    if (!adherent || med_level == 0) return params.setpoint;
    const double r = med_level == 1 ? params.response_r1 : params.response_r2;
    return params.setpoint - r * (1.0 - std::exp(-static_cast<double>(weeks_on) / spec.ramp_tau));
}

namespace {

void record_observation(PatientState& s, const ConditionSpec& spec) {
    if (s.controlled(spec)) {
        ++s.in_control_streak;
        s.loss_start_week.reset();
    } else {
        s.in_control_streak = 0;
        if (s.milestones.ttc_week && !s.loss_start_week) s.loss_start_week = s.week;
    }
    s.last_events = update_milestones(s, spec);
}

}  // namespace

PatientState initial_state(const PatientParams& params, const ConditionSpec& spec, Rng& rng) {
    PatientState s;
    s.week = 0;
    s.observed = biomarker_mean(params, spec, 0, 0, false) + normal(rng, 0.0, spec.noise_sd);
    s.baseline = s.observed;
    s.adherence_effective = std::min(params.adherence, spec.adherence_cap);
    record_observation(s, spec);
    return s;
}

PatientState step(const PatientParams& params, const PatientState& state, Action action,
                  bool clinical_executes, const ConditionSpec& spec, Rng& rng) {
    if (state.week >= spec.horizon_weeks) {
        throw ContractViolation("step: week " + std::to_string(state.week) +
                                " is at or past the horizon of " +
                                std::to_string(spec.horizon_weeks) + " weeks");
    }
    if (action.med_level < 0 || action.med_level >= kNumMedLevels || action.op < 0 || action.op > 1) {
        throw ContractViolation("step: action out of range");
    }

    PatientState next = state;
    if (clinical_executes && action.med_level != state.med_level) {
        next.med_level = action.med_level;
        next.weeks_on = 0;
    } else {
        next.weeks_on = state.weeks_on + 1;
    }

    next.adherence_effective =
        std::min(params.adherence + spec.op_adherence_boost * action.op, spec.adherence_cap);
    const bool adherent = bernoulli(rng, next.adherence_effective);
    next.observed = biomarker_mean(params, spec, next.med_level, next.weeks_on, adherent) +
                    normal(rng, 0.0, spec.noise_sd);

    next.week = state.week + 1;
    // The executed action: a blocked change leaves the level untouched.
    next.prev_action = Action{next.med_level, action.op};
    record_observation(next, spec);
    return next;
}

std::uint8_t update_milestones(PatientState& state, const ConditionSpec& spec) {
    MilestoneRecord& m = state.milestones;
    const int t = state.week;
    const double reduction = state.reduction();
    std::uint8_t fired = kNoMilestone;

    if (!m.ttc_week && state.in_control_streak >= spec.confirm_window) {
        m.ttc_week = t;
        fired |= kTTC;
    }
    if (!m.tto_week && (reduction >= spec.tto_delta || m.ttc_week)) {
        m.tto_week = t;
        fired |= kTTO;
    }
    if (!m.ttg_week && (reduction >= spec.ttg_delta || m.tto_week)) {
        m.ttg_week = t;
        fired |= kTTG;
    }
    return fired;
}

StallFlags detect_stalls(const PatientState& state, const ConditionSpec& spec) {
    const MilestoneRecord& m = state.milestones;
    const int t = state.week - m.t0_week;
    StallFlags f;
    f.stall_g = t > spec.stall_tau_g && !m.ttg_week;
    f.stall_o = m.ttg_week && !m.tto_week && t > *m.ttg_week + spec.stall_tau_o;
    if (m.ttc_week && state.loss_start_week) f.loss_persist_weeks = state.week - *state.loss_start_week;
    f.stall_r = m.ttc_week && !state.controlled(spec) && f.loss_persist_weeks >= spec.stall_tau_r;
    return f;
}

}  // namespace chronic
