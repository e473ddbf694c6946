#include "chronic/config.hpp"

#include <fstream>
#include <sstream>

#include "chronic/rng.hpp"

namespace chronic {

using nlohmann::json;

DiscretizationSpec ConditionBundle::grid(bool eps_aware) const {
    DiscretizationSpec d = discretization;
    if (eps_aware) d.eps_edges = eps_edges;
    else d.eps_edges.reset();
    return d;
}

ConditionBundle default_bundle(Condition c) {
    return ConditionBundle{default_spec(c), default_behavior(c), default_discretization(c, false), default_eps_edges()};
}

void ExperimentConfig::validate() const {
    if (conditions.empty()) throw ConfigError("config: at least one condition is required");
    if (train_patients < 1 || eval_patients < 1) throw ConfigError("config: population sizes must be >= 1");
    if (seeds.empty()) throw ConfigError("config: seeds must not be empty");
    for (const auto& b : bundles) {
        b.spec.validate();
        b.behavior.validate();
        b.grid(true).validate();
    }
    reward.validate();
    train.validate();
    if (!(study_a.beta >= 0.0)) throw ConfigError("config: study_a.beta must be >= 0");
    if (!(study_a.deploy_eps > 0.0 && study_a.deploy_eps <= 1.0)) throw ConfigError("config: study_a.deploy_eps must be in (0, 1]");
    auto eps_ok = [](double e) { return e > 0.0 && e <= 1.0; };
    for (double e : study_b.train_eps) if (!eps_ok(e)) throw ConfigError("config: study_b.train_eps values must be in (0, 1]");
    for (double e : study_b.deploy_eps) if (!eps_ok(e)) throw ConfigError("config: study_b.deploy_eps values must be in (0, 1]");
    if (!eps_ok(study_b.naive_eps)) throw ConfigError("config: study_b.naive_eps must be in (0, 1]");
    if (study_b.train_eps.empty() || study_b.deploy_eps.empty() || study_b.seeds.empty()) {
        throw ConfigError("config: study_b lists must not be empty");
    }
}

namespace {

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& path) {
    const std::string full = path.empty() ? std::string(key) : path + "." + key;
    if (!j.is_object() || !j.contains(key)) throw ConfigFieldError("missing config field '" + full + "'");
    try {
        j.at(key).get_to(out);
    } catch (const ConfigFieldError&) {
        throw;
    } catch (const json::exception& e) {
        throw ConfigFieldError("bad value for config field '" + full + "': " + e.what());
    }
}

// Nested readers carry the field path so errors name the full location.
void read_spec(const json& j, ConditionSpec& s, const std::string& p) {
    std::string cond;
    read(j, "condition", cond, p);
    s.condition = condition_from_string(cond);
    read(j, "setpoint_mean", s.setpoint_mean, p);
    read(j, "setpoint_sd", s.setpoint_sd, p);
    read(j, "setpoint_clip_lo", s.setpoint_clip_lo, p);
    read(j, "setpoint_clip_hi", s.setpoint_clip_hi, p);
    read(j, "r1_mean", s.r1_mean, p);
    read(j, "r1_sd", s.r1_sd, p);
    read(j, "r1_floor", s.r1_floor, p);
    read(j, "r2_mean", s.r2_mean, p);
    read(j, "r2_sd", s.r2_sd, p);
    read(j, "r2_floor", s.r2_floor, p);
    read(j, "adherence_beta_a", s.adherence_beta_a, p);
    read(j, "adherence_beta_b", s.adherence_beta_b, p);
    read(j, "ramp_tau", s.ramp_tau, p);
    read(j, "noise_sd", s.noise_sd, p);
    read(j, "control_threshold", s.control_threshold, p);
    read(j, "ttg_delta", s.ttg_delta, p);
    read(j, "tto_delta", s.tto_delta, p);
    read(j, "confirm_window", s.confirm_window, p);
    read(j, "stall_tau_g", s.stall_tau_g, p);
    read(j, "stall_tau_o", s.stall_tau_o, p);
    read(j, "stall_tau_r", s.stall_tau_r, p);
    read(j, "op_adherence_boost", s.op_adherence_boost, p);
    read(j, "adherence_cap", s.adherence_cap, p);
    read(j, "horizon_weeks", s.horizon_weeks, p);
}

void read_archetype(const json& j, ArchetypeSpec& a, const std::string& p) {
    std::string id;
    read(j, "id", id, p);
    a.id = archetype_from_string(id);
    read(j, "population_share", a.population_share, p);
    read(j, "escalate1_base", a.escalate1_base, p);
    read(j, "escalate1_slope", a.escalate1_slope, p);
    read(j, "escalate1_cap", a.escalate1_cap, p);
    read(j, "escalate2_base", a.escalate2_base, p);
    read(j, "escalate2_slope", a.escalate2_slope, p);
    read(j, "escalate2_cap", a.escalate2_cap, p);
    read(j, "escalate2_min_weeks", a.escalate2_min_weeks, p);
    read(j, "op_prob_uncontrolled", a.op_prob_uncontrolled, p);
    read(j, "op_prob_controlled", a.op_prob_controlled, p);
}

void read_behavior(const json& j, BehaviorConfig& b, const std::string& p) {
    json arr;
    read(j, "archetypes", arr, p);
    if (!arr.is_array() || arr.size() != kNumArchetypes) {
        throw ConfigFieldError("config field '" + p + ".archetypes' must list exactly three archetypes");
    }
    for (int i = 0; i < kNumArchetypes; ++i) {
        read_archetype(arr[i], b.archetypes[i], p + ".archetypes[" + std::to_string(i) + "]");
    }
}

void read_disc(const json& j, DiscretizationSpec& d, const std::string& p) {
    read(j, "biomarker_edges", d.biomarker_edges, p);
    read(j, "weeks_on_edges", d.weeks_on_edges, p);
    read(j, "reduction_edges", d.reduction_edges, p);
    if (j.contains("eps_edges") && !j.at("eps_edges").is_null()) {
        std::vector<double> e;
        read(j, "eps_edges", e, p);
        d.eps_edges = e;
    } else {
        d.eps_edges.reset();
    }
}

void read_reward(const json& j, RewardConfig& r, const std::string& p) {
    std::string kind;
    read(j, "kind", kind, p);
    r.kind = reward_kind_from_string(kind);
    read(j, "w_ttg", r.w_ttg, p);
    read(j, "w_tto", r.w_tto, p);
    read(j, "w_ttc", r.w_ttc, p);
    read(j, "med_change_cost", r.med_change_cost, p);
    read(j, "op_cost", r.op_cost, p);
    read(j, "terminal_magnitude", r.terminal_magnitude, p);
    read(j, "stall_penalty_per_week", r.stall_penalty_per_week, p);
}

void read_train(const json& j, TrainConfig& t, const std::string& p) {
    read(j, "learning_rate", t.learning_rate, p);
    read(j, "discount", t.discount, p);
    read(j, "iterations", t.iterations, p);
    read(j, "batch_size", t.batch_size, p);
    read(j, "beta", t.beta, p);
    read(j, "eps_aware", t.eps_aware, p);
    read(j, "eps_min_med_change", t.eps_min_med_change, p);
    read(j, "seed", t.seed, p);
}

void read_capability(const json& j, CapabilityConfig& c, const std::string& p) {
    read(j, "ttc_bonus", c.ttc_bonus, p);
    read(j, "htn_unit_scale", c.htn_unit_scale, p);
    read(j, "t2d_unit_scale", c.t2d_unit_scale, p);
}

}  // namespace

void to_json(json& j, const ConditionSpec& s) {
    j = json{{"condition", std::string(to_string(s.condition))},
             {"setpoint_mean", s.setpoint_mean},
             {"setpoint_sd", s.setpoint_sd},
             {"setpoint_clip_lo", s.setpoint_clip_lo},
             {"setpoint_clip_hi", s.setpoint_clip_hi},
             {"r1_mean", s.r1_mean},
             {"r1_sd", s.r1_sd},
             {"r1_floor", s.r1_floor},
             {"r2_mean", s.r2_mean},
             {"r2_sd", s.r2_sd},
             {"r2_floor", s.r2_floor},
             {"adherence_beta_a", s.adherence_beta_a},
             {"adherence_beta_b", s.adherence_beta_b},
             {"ramp_tau", s.ramp_tau},
             {"noise_sd", s.noise_sd},
             {"control_threshold", s.control_threshold},
             {"ttg_delta", s.ttg_delta},
             {"tto_delta", s.tto_delta},
             {"confirm_window", s.confirm_window},
             {"stall_tau_g", s.stall_tau_g},
             {"stall_tau_o", s.stall_tau_o},
             {"stall_tau_r", s.stall_tau_r},
             {"op_adherence_boost", s.op_adherence_boost},
             {"adherence_cap", s.adherence_cap},
             {"horizon_weeks", s.horizon_weeks}};
}
void from_json(const json& j, ConditionSpec& s) { read_spec(j, s, ""); }

void to_json(json& j, const BehaviorConfig& b) {
    json arr = json::array();
    for (const auto& a : b.archetypes) {
        arr.push_back(json{{"id", std::string(to_string(a.id))},
                           {"population_share", a.population_share},
                           {"escalate1_base", a.escalate1_base},
                           {"escalate1_slope", a.escalate1_slope},
                           {"escalate1_cap", a.escalate1_cap},
                           {"escalate2_base", a.escalate2_base},
                           {"escalate2_slope", a.escalate2_slope},
                           {"escalate2_cap", a.escalate2_cap},
                           {"escalate2_min_weeks", a.escalate2_min_weeks},
                           {"op_prob_uncontrolled", a.op_prob_uncontrolled},
                           {"op_prob_controlled", a.op_prob_controlled}});
    }
    j = json{{"archetypes", arr}};
}
void from_json(const json& j, BehaviorConfig& b) { read_behavior(j, b, ""); }

void to_json(json& j, const DiscretizationSpec& d) {
    j = json{{"biomarker_edges", d.biomarker_edges},
             {"weeks_on_edges", d.weeks_on_edges},
             {"reduction_edges", d.reduction_edges},
             {"eps_edges", d.eps_edges ? json(*d.eps_edges) : json(nullptr)}};
}
void from_json(const json& j, DiscretizationSpec& d) { read_disc(j, d, ""); }

void to_json(json& j, const RewardConfig& r) {
    j = json{{"kind", std::string(to_string(r.kind))},
             {"w_ttg", r.w_ttg},
             {"w_tto", r.w_tto},
             {"w_ttc", r.w_ttc},
             {"med_change_cost", r.med_change_cost},
             {"op_cost", r.op_cost},
             {"terminal_magnitude", r.terminal_magnitude},
             {"stall_penalty_per_week", r.stall_penalty_per_week}};
}
void from_json(const json& j, RewardConfig& r) { read_reward(j, r, ""); }

void to_json(json& j, const TrainConfig& t) {
    j = json{{"learning_rate", t.learning_rate},
             {"discount", t.discount},
             {"iterations", t.iterations},
             {"batch_size", t.batch_size},
             {"beta", t.beta},
             {"eps_aware", t.eps_aware},
             {"eps_min_med_change", t.eps_min_med_change},
             {"seed", t.seed}};
}
void from_json(const json& j, TrainConfig& t) { read_train(j, t, ""); }

void to_json(json& j, const CapabilityConfig& c) {
    j = json{{"ttc_bonus", c.ttc_bonus}, {"htn_unit_scale", c.htn_unit_scale}, {"t2d_unit_scale", c.t2d_unit_scale}};
}
void from_json(const json& j, CapabilityConfig& c) { read_capability(j, c, ""); }

void to_json(json& j, const ExperimentConfig& c) {
    json conds = json::array();
    for (auto cond : c.conditions) conds.push_back(std::string(to_string(cond)));
    json bundles = json::object();
    for (const auto& b : c.bundles) {
        bundles[std::string(to_string(b.spec.condition))] = json{{"spec", b.spec},
                                                                  {"behavior", b.behavior},
                                                                  {"discretization", b.discretization},
                                                                  {"eps_edges", b.eps_edges}};
    }
    j = json{{"conditions", conds},
             {"train_patients", c.train_patients},
             {"eval_patients", c.eval_patients},
             {"seeds", c.seeds},
             {"bundles", bundles},
             {"reward", c.reward},
             {"train", c.train},
             {"capability", c.capability},
             {"study_a", json{{"beta", c.study_a.beta}, {"deploy_eps", c.study_a.deploy_eps}}},
             {"study_b", json{{"train_eps", c.study_b.train_eps},
                              {"naive_eps", c.study_b.naive_eps},
                              {"deploy_eps", c.study_b.deploy_eps},
                              {"reward", std::string(to_string(c.study_b.reward))},
                              {"beta", c.study_b.beta},
                              {"seeds", c.study_b.seeds}}},
             {"output_dir", c.output_dir}};
}

void from_json(const json& j, ExperimentConfig& c) {
    std::vector<std::string> conds;
    read(j, "conditions", conds, "");
    c.conditions.clear();
    for (const auto& s : conds) c.conditions.push_back(condition_from_string(s));
    read(j, "train_patients", c.train_patients, "");
    read(j, "eval_patients", c.eval_patients, "");
    read(j, "seeds", c.seeds, "");

    json bundles;
    read(j, "bundles", bundles, "");
    for (auto cond : {Condition::HTN, Condition::T2D}) {
        const std::string name(to_string(cond));
        const std::string p = "bundles." + name;
        json b;
        read(bundles, name.c_str(), b, "bundles");
        ConditionBundle& out = c.bundle(cond);
        json part;
        read(b, "spec", part, p);
        read_spec(part, out.spec, p + ".spec");
        if (out.spec.condition != cond) throw ConfigFieldError("config field '" + p + ".spec.condition' must be " + name);
        read(b, "behavior", part, p);
        read_behavior(part, out.behavior, p + ".behavior");
        read(b, "discretization", part, p);
        read_disc(part, out.discretization, p + ".discretization");
        read(b, "eps_edges", out.eps_edges, p);
    }

    json part;
    read(j, "reward", part, "");
    read_reward(part, c.reward, "reward");
    read(j, "train", part, "");
    read_train(part, c.train, "train");
    read(j, "capability", part, "");
    read_capability(part, c.capability, "capability");
    read(j, "study_a", part, "");
    read(part, "beta", c.study_a.beta, "study_a");
    read(part, "deploy_eps", c.study_a.deploy_eps, "study_a");
    read(j, "study_b", part, "");
    read(part, "train_eps", c.study_b.train_eps, "study_b");
    read(part, "naive_eps", c.study_b.naive_eps, "study_b");
    read(part, "deploy_eps", c.study_b.deploy_eps, "study_b");
    std::string kind;
    read(part, "reward", kind, "study_b");
    c.study_b.reward = reward_kind_from_string(kind);
    read(part, "beta", c.study_b.beta, "study_b");
    read(part, "seeds", c.study_b.seeds, "study_b");
    read(j, "output_dir", c.output_dir, "");
}

ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig c;
    from_json(j, c);
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string dump_config(const ExperimentConfig& config) { return json(config).dump(2) + "\n"; }

namespace {
template <typename T>
std::uint64_t hash_of(const T& v) {
    return fnv1a(json(v).dump());
}
}  // namespace

std::uint64_t spec_hash(const ConditionSpec& s) { return hash_of(s); }
std::uint64_t spec_hash(const BehaviorConfig& b) { return hash_of(b); }
std::uint64_t spec_hash(const DiscretizationSpec& d) { return hash_of(d); }
std::uint64_t spec_hash(const RewardConfig& r) { return hash_of(r); }
std::uint64_t spec_hash(const TrainConfig& t) { return hash_of(t); }

}  // namespace chronic
