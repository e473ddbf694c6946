#include "chronic/condition.hpp"

namespace chronic {

std::string_view to_string(Condition c) {
    return c == Condition::HTN ? "HTN" : "T2D";
}

Condition condition_from_string(std::string_view s) {
    if (s == "HTN" || s == "htn") return Condition::HTN;
    if (s == "T2D" || s == "t2d") return Condition::T2D;
    throw ConfigError("unknown condition '" + std::string(s) + "' (expected HTN or T2D)");
}

void ConditionSpec::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ConfigError(std::string("ConditionSpec: ") + what);
    };
    require(setpoint_clip_lo < setpoint_clip_hi, "setpoint_clip_lo must be < setpoint_clip_hi");
    require(setpoint_sd >= 0.0, "setpoint_sd must be >= 0");
    require(r1_floor > 0.0 && r2_floor > 0.0, "response floors must be > 0");
    require(r1_sd >= 0.0 && r2_sd >= 0.0, "response sds must be >= 0");
    require(adherence_beta_a > 0.0 && adherence_beta_b > 0.0, "adherence Beta shape parameters must be > 0");
    require(adherence_cap > 0.0 && adherence_cap <= 1.0, "adherence_cap must be in (0, 1]");
    require(op_adherence_boost >= 0.0, "op_adherence_boost must be >= 0");
    require(ramp_tau > 0.0, "ramp_tau must be > 0");
    require(noise_sd >= 0.0, "noise_sd must be >= 0");
    require(ttg_delta < tto_delta, "ttg_delta must be < tto_delta");
    require(confirm_window >= 1, "confirm_window must be >= 1");
    require(horizon_weeks >= confirm_window, "horizon_weeks must be >= confirm_window");
    require(stall_tau_g >= 0 && stall_tau_o >= 0 && stall_tau_r >= 0, "stall timeouts must be >= 0");
}

ConditionSpec htn_spec() { return ConditionSpec{}; }

ConditionSpec t2d_spec() {
    ConditionSpec s;
    s.condition = Condition::T2D;
    s.setpoint_mean = 8.8;
    s.setpoint_sd = 1.0;
    s.setpoint_clip_lo = 7.2;
    s.setpoint_clip_hi = 12.5;
    s.r1_mean = 0.9;
    s.r1_sd = 0.25;
    s.r1_floor = 0.3;
    s.r2_mean = 1.8;
    s.r2_sd = 0.4;
    s.r2_floor = 0.6;
    s.ramp_tau = 8.0;
    s.noise_sd = 0.15;
    s.control_threshold = 7.0;
    s.ttg_delta = 1.0;
    s.tto_delta = 1.5;
    s.stall_tau_g = 16;
    s.stall_tau_o = 16;
    return s;
}

ConditionSpec default_spec(Condition c) {
    return c == Condition::HTN ? htn_spec() : t2d_spec();
}

}  // namespace chronic
