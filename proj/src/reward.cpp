#include "chronic/reward.hpp"

#include <string>

namespace chronic {

std::string_view to_string(RewardKind k) { return k == RewardKind::Tiered ? "tiered" : "terminal"; }

RewardKind reward_kind_from_string(std::string_view s) {
    if (s == "tiered") return RewardKind::Tiered;
    if (s == "terminal") return RewardKind::Terminal;
    throw ConfigError("unknown reward kind '" + std::string(s) + "' (expected tiered or terminal)");
}

void RewardConfig::validate() const {
    if (!(w_ttg <= w_tto && w_tto <= w_ttc)) throw ConfigError("RewardConfig: tier weights must satisfy w_ttg <= w_tto <= w_ttc");
    if (med_change_cost < 0.0 || op_cost < 0.0) throw ConfigError("RewardConfig: action costs must be >= 0");
    if (terminal_magnitude < 0.0) throw ConfigError("RewardConfig: terminal_magnitude must be >= 0");
    if (stall_penalty_per_week < 0.0) throw ConfigError("RewardConfig: stall_penalty_per_week is a magnitude and must be >= 0");
}

FinalSummary final_summary(double final_observed, double baseline, const ConditionSpec& spec) {
    return FinalSummary{final_observed < spec.control_threshold, baseline - final_observed < spec.ttg_delta};
}

double action_cost(Action action, Action prev_action, const RewardConfig& config) {
    double cost = 0.0;
    if (action.med_level != prev_action.med_level) cost += config.med_change_cost;
    if (action.op == 1) cost += config.op_cost;
    return cost;
}

double action_cost(const TransitionRecord& record, const RewardConfig& config) {
    return (record.med_changed ? config.med_change_cost : 0.0) + (record.op_taken ? config.op_cost : 0.0);
}

namespace {

double stall_penalty(const TransitionRecord& record, const RewardConfig& config) {
    return (record.next_stall_bits & 1u) ? config.stall_penalty_per_week : 0.0;
}

}  // namespace

double tiered_reward(const TransitionRecord& record, const RewardConfig& config) {
    double r = 0.0;
    if (record.milestone_events & kTTG) r += config.w_ttg;
    if (record.milestone_events & kTTO) r += config.w_tto;
    if (record.milestone_events & kTTC) r += config.w_ttc;
    return r - action_cost(record, config) - stall_penalty(record, config);
}

double terminal_reward(const TransitionRecord& record, const FinalSummary& summary, const RewardConfig& config) {
    double r = -action_cost(record, config) - stall_penalty(record, config);
    if (record.terminal) {
        if (summary.controlled) r += config.terminal_magnitude;
        else if (summary.poor_outcome) r -= config.terminal_magnitude;
    }
    return r;
}

double reward(const TransitionRecord& record, const RewardConfig& config, const ConditionSpec& spec) {
    if (config.kind == RewardKind::Tiered) return tiered_reward(record, config);
    return terminal_reward(record, final_summary(record.raw_next_obs, record.baseline, spec), config);
}

std::vector<double> compute_rewards(const Dataset& data, const RewardConfig& config, const ConditionSpec& spec) {
    std::vector<double> out;
    out.reserve(data.records.size());
    for (const auto& r : data.records) out.push_back(reward(r, config, spec));
    return out;
}

int positive_events(const TransitionRecord& record, const RewardConfig& config, const ConditionSpec& spec) {
    if (config.kind == RewardKind::Tiered) {
        int n = 0;
        if ((record.milestone_events & kTTG) && config.w_ttg > 0.0) ++n;
        if ((record.milestone_events & kTTO) && config.w_tto > 0.0) ++n;
        if ((record.milestone_events & kTTC) && config.w_ttc > 0.0) ++n;
        return n;
    }
    if (!record.terminal || config.terminal_magnitude <= 0.0) return 0;
    return final_summary(record.raw_next_obs, record.baseline, spec).controlled ? 1 : 0;
}

double reward_density(const Dataset& data, const RewardConfig& config, const ConditionSpec& spec) {
    if (data.records.empty() || data.header.patients <= 0) return 0.0;
    long events = 0;
    for (const auto& r : data.records) events += positive_events(r, config, spec);
    const double horizon = data.header.horizon_weeks > 0 ? data.header.horizon_weeks : spec.horizon_weeks;
    const double patient_years = data.header.patients * horizon / 52.0;
    return static_cast<double>(events) / patient_years;
}

}  // namespace chronic
