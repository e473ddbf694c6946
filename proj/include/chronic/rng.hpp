#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace chronic {

/// Engine used for every stochastic draw in the simulator.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// FNV-1a over a byte string. Stable across platforms, unlike std::hash.
constexpr std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Named stream namespaces. Training data and evaluation patients never
/// share a namespace, so their streams are disjoint.
enum class StreamDomain : std::uint64_t {
    TrainingData = 0x7472616964617461ULL,
    Evaluation = 0x6576616c75617465ULL,
    Sampler = 0x73616d706c657273ULL,
};

/// Seed for stream `index` of `domain` under the run seed `seed`.
constexpr std::uint64_t stream_seed(std::uint64_t seed, StreamDomain domain,
                                    std::uint64_t index,
                                    std::uint64_t substream = 0) {
    std::uint64_t h = mix64(seed ^ static_cast<std::uint64_t>(domain));
    h = mix64(h ^ index);
    return mix64(h ^ (substream * 0xd1b54a32d192ed03ULL));
}

/// Per-patient independent substreams. Keeping dynamics, policy and
/// execution-gate draws apart means two policies evaluated on the same
/// patient see the same parameter draw and the same measurement noise.
struct PatientStreams {
    Rng params;
    Rng dynamics;
    Rng policy;
    Rng gate;

    PatientStreams(std::uint64_t seed, StreamDomain domain, std::uint64_t patient)
        : params(stream_seed(seed, domain, patient, 1)),
          dynamics(stream_seed(seed, domain, patient, 2)),
          policy(stream_seed(seed, domain, patient, 3)),
          gate(stream_seed(seed, domain, patient, 4)) {}
};

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

/// Always consumes exactly one draw so streams stay aligned across branches.
inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

inline double normal(Rng& rng, double mean, double sd) {
    if (sd <= 0.0) return mean;
    return std::normal_distribution<double>(mean, sd)(rng);
}

/// Beta(a, b) via the ratio of two gamma draws.
inline double beta(Rng& rng, double a, double b) {
    const double x = std::gamma_distribution<double>(a, 1.0)(rng);
    const double y = std::gamma_distribution<double>(b, 1.0)(rng);
    return x / (x + y);
}

}  // namespace chronic
