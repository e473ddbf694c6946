#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string_view>

#include "chronic/condition.hpp"
#include "chronic/rng.hpp"

namespace chronic {

/// Clinician archetype that generated a trajectory.
enum class Archetype : std::uint8_t { Low = 0, High = 1, OpsAugmented = 2 };

inline constexpr int kNumArchetypes = 3;

std::string_view to_string(Archetype a);
Archetype archetype_from_string(std::string_view s);

/// One of the six simulated actions: medication level to hold (0..2)
/// crossed with whether an operational outreach action is taken.
struct Action {
    int med_level = 0;
    int op = 0;

    friend bool operator==(const Action&, const Action&) = default;
};

inline constexpr int kNumActions = 6;
inline constexpr int kNumMedLevels = 3;

/// Latent parameters of a simulated patient.
struct PatientParams {
    double setpoint = 0.0;
    double response_r1 = 0.0;
    double response_r2 = 0.0;
    double adherence = 0.0;
    std::optional<Archetype> archetype;
};

/// Milestone bits. Several may fire in the same week.
enum MilestoneBits : std::uint8_t {
    kNoMilestone = 0,
    kTTG = 1u << 0,
    kTTO = 1u << 1,
    kTTC = 1u << 2,
};

/// First-passage weeks. Absent means not reached yet.
struct MilestoneRecord {
    std::optional<int> ttg_week;
    std::optional<int> tto_week;
    std::optional<int> ttc_week;
    int t0_week = 0;
};

struct StallFlags {
    bool stall_g = false;
    bool stall_o = false;
    bool stall_r = false;
    int loss_persist_weeks = 0;

    std::uint8_t bits() const {
        return static_cast<std::uint8_t>((stall_g ? 1 : 0) | (stall_o ? 2 : 0) | (stall_r ? 4 : 0));
    }
};

struct PatientState {
    int week = 0;
    int med_level = 0;
    int weeks_on = 0;
    double observed = 0.0;
    double baseline = 0.0;
    Action prev_action{};
    int in_control_streak = 0;
    /// Week at which the current post-control uncontrolled run began.
    std::optional<int> loss_start_week;
    MilestoneRecord milestones;
    double adherence_effective = 0.0;
    /// Milestones that fired on the most recent observation.
    std::uint8_t last_events = kNoMilestone;

    bool controlled(const ConditionSpec& spec) const { return observed < spec.control_threshold; }
    double reduction() const { return baseline - observed; }
};

/// Raised when a caller violates a precondition of the simulator.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

PatientParams sample_patient(const ConditionSpec& spec, Rng& rng);

/// Noise-free biomarker level. r^(0) is zero.
double biomarker_mean(const PatientParams& params, const ConditionSpec& spec, int med_level,
                      int weeks_on, bool adherent);

/// Week-0 state: untreated noisy observation, which becomes the baseline.
PatientState initial_state(const PatientParams& params, const ConditionSpec& spec, Rng& rng);

/// Advances one week. `clinical_executes` is the execution-gate verdict for
/// a medication change; operational actions always execute.
PatientState step(const PatientParams& params, const PatientState& state, Action action,
                  bool clinical_executes, const ConditionSpec& spec, Rng& rng);

/// Updates first-passage milestones for the observation at `state.week`
/// (in_control_streak must already include it). A later milestone that
/// fires ahead of an earlier one also fires the earlier one in the same
/// week, which keeps TTG <= TTO <= TTC. Returns the bits fired this week.
std::uint8_t update_milestones(PatientState& state, const ConditionSpec& spec);

StallFlags detect_stalls(const PatientState& state, const ConditionSpec& spec);

}  // namespace chronic
