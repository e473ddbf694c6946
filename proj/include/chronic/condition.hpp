#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chronic {

enum class Condition { HTN, T2D };

std::string_view to_string(Condition c);
Condition condition_from_string(std::string_view s);

/// Thrown when a configuration violates a documented invariant.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Population and dynamics parameters of one chronic condition.
/// Biomarker units are mmHg SBP for HTN and % HbA1c for T2D.
struct ConditionSpec {
    Condition condition = Condition::HTN;

    double setpoint_mean = 160.0;
    double setpoint_sd = 12.0;
    double setpoint_clip_lo = 135.0;
    double setpoint_clip_hi = 195.0;

    double r1_mean = 10.0;
    double r1_sd = 2.5;
    double r1_floor = 3.0;
    double r2_mean = 20.0;
    double r2_sd = 4.0;
    double r2_floor = 6.0;

    double adherence_beta_a = 7.0;
    double adherence_beta_b = 3.0;

    double ramp_tau = 4.0;   // weeks
    double noise_sd = 4.0;

    double control_threshold = 130.0;
    double ttg_delta = 15.0;
    double tto_delta = 25.0;
    int confirm_window = 4;  // weeks

    int stall_tau_g = 8;
    int stall_tau_o = 8;
    int stall_tau_r = 8;

    double op_adherence_boost = 0.30;
    double adherence_cap = 0.98;

    int horizon_weeks = 52;

    /// Throws ConfigError naming the first violated invariant.
    void validate() const;
};

ConditionSpec htn_spec();
ConditionSpec t2d_spec();
ConditionSpec default_spec(Condition c);

}  // namespace chronic
