#pragma once

#include <vector>

#include "chronic/condition.hpp"
#include "chronic/dataset.hpp"
#include "chronic/env.hpp"

namespace chronic {

enum class RewardKind { Tiered, Terminal };

std::string_view to_string(RewardKind k);
RewardKind reward_kind_from_string(std::string_view s);

struct RewardConfig {
    RewardKind kind = RewardKind::Tiered;
    double w_ttg = 1.0;
    double w_tto = 1.5;
    double w_ttc = 2.5;
    double med_change_cost = 0.01;
    double op_cost = 0.005;
    double terminal_magnitude = 2.5;
    /// Stall_G per-week penalty; 0 disables it.
    double stall_penalty_per_week = 0.0;

    void validate() const;
};

/// End-of-horizon status used by the terminal reward.
struct FinalSummary {
    bool controlled = false;
    /// Reduction from baseline below the TTG threshold.
    bool poor_outcome = false;
};

FinalSummary final_summary(double final_observed, double baseline, const ConditionSpec& spec);

double action_cost(Action action, Action prev_action, const RewardConfig& config);

/// Cost of a recorded transition, using its stored change/op flags.
double action_cost(const TransitionRecord& record, const RewardConfig& config);

double tiered_reward(const TransitionRecord& record, const RewardConfig& config);

double terminal_reward(const TransitionRecord& record, const FinalSummary& summary, const RewardConfig& config);

/// Dispatches on config.kind; terminal records derive their FinalSummary
/// from the record's next observation.
double reward(const TransitionRecord& record, const RewardConfig& config, const ConditionSpec& spec);

std::vector<double> compute_rewards(const Dataset& data, const RewardConfig& config, const ConditionSpec& spec);

/// Positive reward events for one record: one per milestone indicator that
/// fires (tiered) or one for a controlled end state (terminal).
int positive_events(const TransitionRecord& record, const RewardConfig& config, const ConditionSpec& spec);

/// Mean number of positive reward events per patient-year.
double reward_density(const Dataset& data, const RewardConfig& config, const ConditionSpec& spec);

}  // namespace chronic
