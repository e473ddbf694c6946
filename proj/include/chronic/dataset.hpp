#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "chronic/condition.hpp"
#include "chronic/env.hpp"

namespace chronic {

/// Bucket edges for the tabular state. Each edge list holds interior
/// edges only; a value v falls in bucket k where k is the number of edges
/// <= v (inclusive lower, exclusive upper). Values past either end clamp
/// into the end buckets.
struct DiscretizationSpec {
    std::vector<double> biomarker_edges;
    std::vector<double> weeks_on_edges{4.0, 8.0};
    std::vector<double> reduction_edges;
    /// Present only for the execution-intensity-aware state.
    std::optional<std::vector<double>> eps_edges;

    int biomarker_buckets() const { return static_cast<int>(biomarker_edges.size()) + 1; }
    int weeks_on_buckets() const { return static_cast<int>(weeks_on_edges.size()) + 1; }
    int reduction_buckets() const { return static_cast<int>(reduction_edges.size()) + 1; }
    int eps_buckets() const { return eps_edges ? static_cast<int>(eps_edges->size()) + 1 : 1; }
    bool eps_aware() const { return eps_edges.has_value(); }
    int num_states() const;

    void validate() const;
};

/// Default edges: HTN SBP 110..200 by 10, T2D HbA1c 6.0..12.0 by 0.5.
DiscretizationSpec default_discretization(Condition c, bool eps_aware = false);
std::vector<double> default_eps_edges();

int bucket_of(double value, const std::vector<double>& edges);

struct StateIndex {
    int biomarker = 0;
    int med_level = 0;
    int weeks_on = 0;
    int reduction = 0;
    int eps = -1;  // -1 when the state carries no execution-intensity bucket

    friend bool operator==(const StateIndex&, const StateIndex&) = default;
};

StateIndex encode_state(double observed, double baseline, int med_level, int weeks_on,
                        const DiscretizationSpec& disc, std::optional<double> eps = std::nullopt);

/// Row-major flattening of a state tuple into [0, disc.num_states()).
int flat_index(const StateIndex& s, const DiscretizationSpec& disc);

int action_index(Action a);
/// Throws std::out_of_range for indices outside [0, 6).
Action action_from_index(int index);

struct TransitionRecord {
    std::uint32_t patient_id = 0;
    Archetype archetype = Archetype::Low;
    int week = 0;
    StateIndex state;
    int action = 0;
    StateIndex next_state;
    std::uint8_t milestone_events = kNoMilestone;  // MilestoneBits fired at week + 1
    bool terminal = false;
    double raw_obs = 0.0;
    double raw_next_obs = 0.0;
    double baseline = 0.0;
    int med_level = 0;
    int weeks_on = 0;
    int next_med_level = 0;
    int next_weeks_on = 0;
    bool med_changed = false;
    bool op_taken = false;
    std::uint8_t next_stall_bits = 0;  // StallFlags::bits() at week + 1
    double eps = 1.0;                  // execution gate the transition was generated under
};

struct DatasetHeader {
    Condition condition = Condition::HTN;
    std::vector<double> eps_gates;
    std::uint64_t seed = 0;
    int patients = 0;
    int horizon_weeks = 0;
    std::size_t record_count = 0;
    std::uint64_t condition_hash = 0;
    std::uint64_t behavior_hash = 0;
    std::uint64_t discretization_hash = 0;
};

struct Dataset {
    DatasetHeader header;
    std::vector<TransitionRecord> records;  // ordered by patient, then week
};

/// Recomputes every record's state indices under `disc`.
void index_dataset(Dataset& data, const DiscretizationSpec& disc);

/// Concatenates datasets generated for the same condition under
/// different execution gates.
Dataset pool_datasets(const std::vector<Dataset>& parts);

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class FormatError : public DataError {
public:
    using DataError::DataError;
};
class VersionMismatchError : public DataError {
public:
    using DataError::DataError;
};
class HashMismatchError : public DataError {
public:
    using DataError::DataError;
};
class TruncationError : public DataError {
public:
    using DataError::DataError;
};

inline constexpr int kDatasetFormatVersion = 1;

void write_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

}  // namespace chronic
