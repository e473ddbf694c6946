#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chronic/capability.hpp"
#include "chronic/dataset.hpp"
#include "chronic/reward.hpp"
#include "chronic/rng.hpp"

namespace chronic {

struct TrainConfig {
    double learning_rate = 0.05;
    double discount = 0.97;
    int iterations = 600;
    int batch_size = 512;
    /// Capability temperature; 0 means uniform sampling.
    double beta = 0.0;
    /// Adds the execution-intensity bucket to the state.
    bool eps_aware = false;
    /// Availability threshold for actions that change the medication level.
    /// Holding the current level (with or without outreach) is always available.
    double eps_min_med_change = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Dense tabular action values over DiscretizationSpec::num_states() states.
struct QTable {
    DiscretizationSpec disc;
    std::vector<double> values;
    std::vector<std::uint32_t> visits;
    /// Which execution-intensity buckets appeared in training (aware tables only).
    std::vector<std::uint8_t> eps_seen;
    /// Provenance fields carried through serialization.
    std::map<std::string, std::string> meta;

    QTable() = default;
    explicit QTable(DiscretizationSpec d);

    int num_states() const { return disc.num_states(); }
    double& q(int state, int action) { return values[static_cast<std::size_t>(state) * kNumActions + action]; }
    double q(int state, int action) const { return values[static_cast<std::size_t>(state) * kNumActions + action]; }
    std::uint32_t visit_count(int state, int action) const {
        return visits[static_cast<std::size_t>(state) * kNumActions + action];
    }
    bool state_visited(int state) const;
    std::uint64_t total_visits() const;

    /// The trained bucket closest to `bucket`; identity when it was trained.
    int nearest_seen_eps_bucket(int bucket) const;
};

/// Bitmask over the six action indices.
using ActionSet = std::uint8_t;
inline constexpr ActionSet kAllActions = 0x3f;

inline bool contains(ActionSet set, int action) { return (set >> action) & 1u; }

ActionSet available_actions(int current_med_level, double eps_hat, double eps_min_med_change);

/// Draws record indices i.i.d. with probability proportional to the
/// weight of each record's archetype.
class WeightedSampler {
public:
    WeightedSampler(std::span<const TransitionRecord> records, const std::array<double, kNumArchetypes>& weights);

    std::vector<std::size_t> sample(int batch_size, Rng& rng) const;

private:
    std::vector<double> cumulative_;
};

std::vector<std::size_t> sample_batch(const Dataset& data, const std::array<double, kNumArchetypes>& weights,
                                      int batch_size, Rng& rng);

/// One transition in table coordinates.
struct Transition {
    int state = 0;
    int action = 0;
    double reward = 0.0;
    int next_state = 0;
    bool terminal = false;
    int next_med_level = 0;
    double eps = 1.0;
};

/// One tabular Q-learning update against the live table. Returns the TD error.
double q_update(QTable& table, const Transition& t, const TrainConfig& config);

struct TrainResult {
    QTable table;
    /// Mean absolute TD error per iteration.
    std::vector<double> td_trace;
    std::array<double, kNumArchetypes> sampling_weights{};
};

TrainResult train(const Dataset& data, const ConditionSpec& spec, const RewardConfig& reward_config,
                  const TrainConfig& config, const DiscretizationSpec& disc,
                  const CapabilityEstimate* estimate = nullptr);

/// Argmax over `available`; ties go to holding the current level without
/// outreach, then to the lowest index.
int greedy_action(const QTable& table, int state, int current_med_level, ActionSet available);

inline constexpr int kQTableFormatVersion = 1;

void write_qtable(const QTable& table, const std::filesystem::path& path);
QTable read_qtable(const std::filesystem::path& path);

}  // namespace chronic
