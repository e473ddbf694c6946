#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "chronic/dataset.hpp"
#include "chronic/env.hpp"

namespace testing {

inline bool same_bits(double a, double b) {
    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

/// Temporary file removed on scope exit.
struct TempPath {
    std::filesystem::path path;
    explicit TempPath(const std::string& name)
        : path(std::filesystem::temp_directory_path() /
               ("chronic-test-" + std::to_string(::getpid()) + "-" + name)) {}
    ~TempPath() {
        std::error_code ec;
        std::filesystem::remove(path, ec);
    }
};

/// Patient with every random draw pinned: mean parameters, full adherence.
inline chronic::PatientParams mean_patient(const chronic::ConditionSpec& spec, double adherence = 1.0) {
    return chronic::PatientParams{spec.setpoint_mean, spec.r1_mean, spec.r2_mean, adherence, std::nullopt};
}

/// A state at `week` with a chosen baseline and observation.
inline chronic::PatientState state_at(int week, double baseline, double observed) {
    chronic::PatientState s;
    s.week = week;
    s.baseline = baseline;
    s.observed = observed;
    return s;
}

}  // namespace testing
