#include "chronic/capability.hpp"

#include <cmath>
#include <fstream>

#include "chronic/textio.hpp"

namespace chronic {

std::vector<TrajectoryOutcome> trajectory_outcomes(const Dataset& data) {
    std::vector<TrajectoryOutcome> out;
    double reduction_sum = 0.0;
    int weeks = 0;
    auto flush = [&] {
        if (!out.empty() && weeks > 0) out.back().mean_reduction = reduction_sum / weeks;
    };
    for (const auto& r : data.records) {
        if (out.empty() || out.back().patient_id != r.patient_id) {
            flush();
            out.push_back(TrajectoryOutcome{r.patient_id, r.archetype, 0.0, false});
            reduction_sum = 0.0;
            weeks = 0;
        }
        reduction_sum += r.baseline - r.raw_next_obs;
        ++weeks;
        if (r.milestone_events & kTTC) out.back().ttc = true;
    }
    flush();
    return out;
}

double outcome_score(double mean_reduction, bool ttc_achieved, double unit_scale, double ttc_bonus) {
    return unit_scale * mean_reduction + (ttc_achieved ? ttc_bonus : 0.0);
}

CapabilityEstimate z_normalize(const std::array<std::optional<double>, kNumArchetypes>& group_scores) {
    CapabilityEstimate est;
    int n = 0;
    double sum = 0.0;
    for (int i = 0; i < kNumArchetypes; ++i) {
        if (!group_scores[i]) continue;
        est.present[i] = true;
        est.raw_score[i] = *group_scores[i];
        sum += *group_scores[i];
        ++n;
    }
    if (n < 2) throw DegenerateCapabilityError("capability inference needs at least two archetypes with patients");
    const double mean = sum / n;
    double ss = 0.0;
    for (int i = 0; i < kNumArchetypes; ++i) {
        if (est.present[i]) ss += (est.raw_score[i] - mean) * (est.raw_score[i] - mean);
    }
    const double sd = std::sqrt(ss / n);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
        throw DegenerateCapabilityError("archetype outcome scores are identical; z-normalization is undefined");
    }
    for (int i = 0; i < kNumArchetypes; ++i) {
        if (est.present[i]) est.kappa[i] = (est.raw_score[i] - mean) / sd;
    }
    return est;
}

CapabilityEstimate infer_kappa(const Dataset& data, const CapabilityConfig& config) {
    const double scale = config.unit_scale(data.header.condition);
    std::array<double, kNumArchetypes> sums{};
    std::array<int, kNumArchetypes> counts{};
    for (const auto& t : trajectory_outcomes(data)) {
        const int a = static_cast<int>(t.archetype);
        sums[a] += outcome_score(t.mean_reduction, t.ttc, scale, config.ttc_bonus);
        ++counts[a];
    }
    std::array<std::optional<double>, kNumArchetypes> means;
    for (int i = 0; i < kNumArchetypes; ++i) {
        if (counts[i] > 0) means[i] = sums[i] / counts[i];
    }
    CapabilityEstimate est = z_normalize(means);
    est.patients = counts;
    return est;
}

std::array<double, kNumArchetypes> transition_weights(const CapabilityEstimate& estimate, double beta) {
    if (!(beta >= 0.0)) throw ConfigError("transition_weights: beta must be >= 0");
    std::array<double, kNumArchetypes> w{};
    for (int i = 0; i < kNumArchetypes; ++i) w[i] = std::exp(beta * estimate.kappa[i]);
    return w;
}

void write_capability_csv(const CapabilityEstimate& estimate, double beta, Condition condition,
                          const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    const auto weights = transition_weights(estimate, beta);
    out << "condition,archetype,patients,raw_score,kappa,beta,weight\n";
    for (int i = 0; i < kNumArchetypes; ++i) {
        if (!estimate.present[i]) continue;
        out << to_string(condition) << ',' << to_string(static_cast<Archetype>(i)) << ',' << estimate.patients[i] << ','
            << textio::format_double(estimate.raw_score[i]) << ',' << textio::format_double(estimate.kappa[i]) << ','
            << textio::format_double(beta) << ',' << textio::format_double(weights[i]) << '\n';
    }
}

}  // namespace chronic
