#include "chronic/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "chronic/textio.hpp"

namespace chronic {

BehaviorMixturePolicy::BehaviorMixturePolicy(BehaviorConfig behavior, ConditionSpec spec)
    : behavior_(std::move(behavior)), spec_(std::move(spec)) {}

void BehaviorMixturePolicy::begin_patient(Rng& rng) { current_ = assign_archetype(behavior_, rng); }

Decision BehaviorMixturePolicy::choose(const PatientState& state, double, Rng& rng) {
    return {behavior_action(behavior_.at(current_), state, spec_, rng), false};
}

GreedyQPolicy::GreedyQPolicy(const QTable& table, double eps_min_med_change)
    : table_(table), eps_min_med_change_(eps_min_med_change) {}

Decision GreedyQPolicy::choose(const PatientState& state, double eps_deploy, Rng&) {
    StateIndex s = encode_state(state.observed, state.baseline, state.med_level, state.weeks_on, table_.disc, eps_deploy);
    if (table_.disc.eps_aware()) s.eps = table_.nearest_seen_eps_bucket(s.eps);
    const int flat = flat_index(s, table_.disc);
    const ActionSet avail = available_actions(state.med_level, eps_deploy, eps_min_med_change_);
    const int a = greedy_action(table_, flat, state.med_level, avail);
    return {action_from_index(a), !table_.state_visited(flat)};
}

SeedMetrics aggregate(const std::vector<PatientOutcome>& outcomes, std::uint64_t seed) {
    SeedMetrics m;
    m.seed = seed;
    m.n = static_cast<int>(outcomes.size());
    if (outcomes.empty()) return m;
    int ttg = 0, tto = 0, ttc = 0;
    double red = 0.0;
    for (const auto& o : outcomes) {
        ttg += o.ttg;
        tto += o.tto;
        ttc += o.ttc;
        red += o.reduction;
        m.deescalations += o.deescalations;
        m.fallbacks += o.fallbacks;
    }
    const double n = static_cast<double>(outcomes.size());
    m.ttg_rate = 100.0 * ttg / n;
    m.tto_rate = 100.0 * tto / n;
    m.ttc_rate = 100.0 * ttc / n;
    m.mean_reduction = red / n;
    return m;
}

std::vector<PatientOutcome> rollout_policy(Policy& policy, const ConditionSpec& spec, int n_patients,
                                           double eps_deploy, std::uint64_t seed) {
    std::vector<PatientOutcome> out;
    out.reserve(static_cast<std::size_t>(std::max(n_patients, 0)));
    for (int i = 0; i < n_patients; ++i) {
        PatientStreams streams(seed, StreamDomain::Evaluation, static_cast<std::uint64_t>(i));
        const PatientParams params = sample_patient(spec, streams.params);
        policy.begin_patient(streams.policy);
        PatientState state = initial_state(params, spec, streams.dynamics);

        PatientOutcome o;
        double tail_sum = 0.0;
        int tail_n = 0;
        for (int t = 0; t < spec.horizon_weeks; ++t) {
            const Decision d = policy.choose(state, eps_deploy, streams.policy);
            if (d.fallback) ++o.fallbacks;
            if (d.action.med_level < state.med_level) ++o.deescalations;
            const bool executes = bernoulli(streams.gate, eps_deploy);
            state = step(params, state, d.action, executes, spec, streams.dynamics);
            if (state.week > spec.horizon_weeks - kFinalWindow) {
                tail_sum += state.observed;
                ++tail_n;
            }
        }
        o.ttg = state.milestones.ttg_week.has_value();
        o.tto = state.milestones.tto_week.has_value();
        o.ttc = state.milestones.ttc_week.has_value();
        o.reduction = state.baseline - (tail_n > 0 ? tail_sum / tail_n : state.observed);
        out.push_back(o);
    }
    return out;
}

MeanStd summarize(const std::vector<double>& values) {
    MeanStd r;
    if (values.empty()) return r;
    double sum = 0.0;
    for (double v : values) sum += v;
    r.mean = sum / values.size();
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - r.mean) * (v - r.mean);
        r.std = std::sqrt(ss / (values.size() - 1));
    }
    return r;
}

namespace {

template <typename F>
MeanStd summarize_by(const std::vector<SeedMetrics>& per_seed, F field) {
    std::vector<double> v;
    for (const auto& m : per_seed) v.push_back(field(m));
    return summarize(v);
}

}  // namespace

MeanStd EvalReport::ttg() const { return summarize_by(per_seed, [](const SeedMetrics& m) { return m.ttg_rate; }); }
MeanStd EvalReport::tto() const { return summarize_by(per_seed, [](const SeedMetrics& m) { return m.tto_rate; }); }
MeanStd EvalReport::ttc() const { return summarize_by(per_seed, [](const SeedMetrics& m) { return m.ttc_rate; }); }
MeanStd EvalReport::reduction() const {
    return summarize_by(per_seed, [](const SeedMetrics& m) { return m.mean_reduction; });
}
long EvalReport::deescalations() const {
    long n = 0;
    for (const auto& m : per_seed) n += m.deescalations;
    return n;
}
long EvalReport::fallbacks() const {
    long n = 0;
    for (const auto& m : per_seed) n += m.fallbacks;
    return n;
}

const EvalReport* StudyResult::find(Condition c, const std::string& label, std::optional<double> eps) const {
    for (const auto* list : {&reports, &supplementary}) {
        for (const auto& r : *list) {
            if (r.condition != c || r.label != label) continue;
            if (eps && (!r.eps_deploy || std::abs(*r.eps_deploy - *eps) > 1e-12)) continue;
            return &r;
        }
    }
    return nullptr;
}

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    jobs = std::clamp(jobs, 1, std::max(n, 1));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    if (error) std::rethrow_exception(error);
}

namespace {

struct Unit {
    Condition condition;
    std::size_t seed_index;
};

std::vector<Unit> units_for(const ExperimentConfig& config, const std::vector<std::uint64_t>& seeds) {
    std::vector<Unit> units;
    for (auto c : config.conditions) {
        for (std::size_t s = 0; s < seeds.size(); ++s) units.push_back({c, s});
    }
    return units;
}

// Assembles per-seed metrics into reports in (condition, label, eps) order of
// first appearance, which is fixed by the unit order rather than by threads.
struct ReportBuilder {
    std::vector<EvalReport> reports;

    void add(Condition c, const std::string& label, std::optional<double> eps, int n, const SeedMetrics& m) {
        for (auto& r : reports) {
            if (r.condition == c && r.label == label && r.eps_deploy == eps) {
                r.per_seed.push_back(m);
                return;
            }
        }
        EvalReport r;
        r.label = label;
        r.condition = c;
        r.eps_deploy = eps;
        r.n_patients = n;
        r.per_seed.push_back(m);
        reports.push_back(std::move(r));
    }
};

TrainConfig train_config_for(const ExperimentConfig& config, std::uint64_t seed, double beta, bool eps_aware) {
    TrainConfig t = config.train;
    t.beta = beta;
    t.eps_aware = eps_aware;
    t.seed = mix64(config.train.seed ^ seed);
    return t;
}

}  // namespace

StudyResult study_a(const ExperimentConfig& config, const std::vector<std::uint64_t>& seeds, int jobs) {
    config.validate();
    const auto units = units_for(config, seeds);

    struct UnitResult {
        std::vector<std::pair<std::string, SeedMetrics>> rows;
        CapabilityEstimate kappa;
    };
    std::vector<UnitResult> results(units.size());

    parallel_for(static_cast<int>(units.size()), jobs, [&](int u) {
        const Unit& unit = units[u];
        const std::uint64_t seed = seeds[unit.seed_index];
        const ConditionBundle& b = config.bundle(unit.condition);
        const DiscretizationSpec disc = b.grid(false);
        const double eps = config.study_a.deploy_eps;
        UnitResult& out = results[u];

        BehaviorMixturePolicy behavior(b.behavior, b.spec);
        out.rows.emplace_back(labels::kBehavior,
                              aggregate(rollout_policy(behavior, b.spec, config.eval_patients, eps, seed), seed));

        const Dataset data = generate_dataset(config.train_patients, b.spec, b.behavior, b.discretization, 1.0, seed);
        out.kappa = infer_kappa(data, config.capability);

        struct Variant {
            const char* label;
            double beta;
            RewardKind kind;
        };
        const Variant variants[] = {
            {labels::kUniformTiered, 0.0, RewardKind::Tiered},
            {labels::kCapabilityTiered, config.study_a.beta, RewardKind::Tiered},
            {labels::kCapabilityTerminal, config.study_a.beta, RewardKind::Terminal},
            {labels::kUniformTerminal, 0.0, RewardKind::Terminal},
        };
        for (const auto& v : variants) {
            RewardConfig rc = config.reward;
            rc.kind = v.kind;
            const TrainResult trained =
                train(data, b.spec, rc, train_config_for(config, seed, v.beta, false), disc, &out.kappa);
            GreedyQPolicy policy(trained.table);
            out.rows.emplace_back(v.label,
                                  aggregate(rollout_policy(policy, b.spec, config.eval_patients, eps, seed), seed));
        }
    });

    StudyResult result;
    ReportBuilder builder, extra;
    for (std::size_t u = 0; u < units.size(); ++u) {
        for (const auto& [label, m] : results[u].rows) {
            (label == labels::kUniformTerminal ? extra : builder)
                .add(units[u].condition, label, std::nullopt, config.eval_patients, m);
        }
        result.kappas.push_back(KappaRecord{units[u].condition, seeds[units[u].seed_index], results[u].kappa});
    }
    result.reports = std::move(builder.reports);
    result.supplementary = std::move(extra.reports);
    return result;
}

StudyResult study_b(const ExperimentConfig& config, const std::vector<std::uint64_t>& seeds, int jobs) {
    config.validate();
    const auto units = units_for(config, seeds);
    const StudyBSettings& sb = config.study_b;

    struct Row {
        std::string label;
        double eps;
        SeedMetrics metrics;
    };
    std::vector<std::vector<Row>> results(units.size());
    std::vector<CapabilityEstimate> kappas(units.size());

    parallel_for(static_cast<int>(units.size()), jobs, [&](int u) {
        const Unit& unit = units[u];
        const std::uint64_t seed = seeds[unit.seed_index];
        const ConditionBundle& b = config.bundle(unit.condition);
        RewardConfig rc = config.reward;
        rc.kind = sb.reward;

        const Dataset naive_data = generate_dataset(config.train_patients, b.spec, b.behavior, b.discretization, sb.naive_eps, seed);

        // Matched volume: the pooled set splits the same patient count
        // evenly across the training execution intensities.
        std::vector<Dataset> parts;
        const int k = static_cast<int>(sb.train_eps.size());
        std::uint64_t next_id = 0;
        for (int i = 0; i < k; ++i) {
            const int n = config.train_patients / k + (i < config.train_patients % k ? 1 : 0);
            parts.push_back(generate_dataset(n, b.spec, b.behavior, b.discretization, sb.train_eps[i], seed, next_id));
            next_id += static_cast<std::uint64_t>(n);
        }
        const Dataset aware_data = pool_datasets(parts);

        const CapabilityEstimate naive_kappa = infer_kappa(naive_data, config.capability);
        const CapabilityEstimate aware_kappa = infer_kappa(aware_data, config.capability);
        kappas[u] = aware_kappa;

        const TrainResult naive = train(naive_data, b.spec, rc, train_config_for(config, seed, sb.beta, false),
                                        b.grid(false), &naive_kappa);
        const TrainResult aware = train(aware_data, b.spec, rc, train_config_for(config, seed, sb.beta, true),
                                        b.grid(true), &aware_kappa);
        GreedyQPolicy naive_policy(naive.table, config.train.eps_min_med_change);
        GreedyQPolicy aware_policy(aware.table, config.train.eps_min_med_change);
        for (double eps : sb.deploy_eps) {
            results[u].push_back(
                {labels::kEpsNaive, eps,
                 aggregate(rollout_policy(naive_policy, b.spec, config.eval_patients, eps, seed), seed)});
            results[u].push_back(
                {labels::kEpsAware, eps,
                 aggregate(rollout_policy(aware_policy, b.spec, config.eval_patients, eps, seed), seed)});
        }
    });

    StudyResult result;
    ReportBuilder builder;
    for (std::size_t u = 0; u < units.size(); ++u) {
        for (const auto& row : results[u]) {
            builder.add(units[u].condition, row.label, row.eps, config.eval_patients, row.metrics);
        }
        result.kappas.push_back(KappaRecord{units[u].condition, seeds[units[u].seed_index], kappas[u]});
    }
    result.reports = std::move(builder.reports);
    return result;
}

// ---------------------------------------------------------------------------
// Report files

namespace {

constexpr const char* kReportColumns =
    "row,condition,label,eps_deploy,seed,n,ttg_rate,tto_rate,ttc_rate,mean_reduction,deescalations,fallbacks,"
    "ttg_std,tto_std,ttc_std,reduction_std";

std::string eps_text(const std::optional<double>& e) { return e ? textio::format_double(*e) : std::string(); }

}  // namespace

void write_reports_csv(const std::vector<EvalReport>& reports, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << kReportColumns << '\n';
    auto f = textio::format_double;
    for (const auto& r : reports) {
        for (const auto& m : r.per_seed) {
            out << "seed," << to_string(r.condition) << ',' << r.label << ',' << eps_text(r.eps_deploy) << ','
                << m.seed << ',' << m.n << ',' << f(m.ttg_rate) << ',' << f(m.tto_rate) << ',' << f(m.ttc_rate)
                << ',' << f(m.mean_reduction) << ',' << m.deescalations << ',' << m.fallbacks << ",,,,\n";
        }
    }
    for (const auto& r : reports) {
        const auto ttg = r.ttg(), tto = r.tto(), ttc = r.ttc(), red = r.reduction();
        out << "summary," << to_string(r.condition) << ',' << r.label << ',' << eps_text(r.eps_deploy) << ",,"
            << r.n_patients << ',' << f(ttg.mean) << ',' << f(tto.mean) << ',' << f(ttc.mean) << ',' << f(red.mean)
            << ',' << r.deescalations() << ',' << r.fallbacks() << ',' << f(ttg.std) << ',' << f(tto.std) << ','
            << f(ttc.std) << ',' << f(red.std) << '\n';
    }
}

std::vector<EvalReport> read_reports_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open report '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line != kReportColumns) {
        throw FormatError("'" + path.string() + "' is not an evaluation report CSV");
    }
    ReportBuilder builder;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto c = textio::split(line, ',');
        if (c.size() != 16) throw FormatError("report '" + path.string() + "': malformed row '" + line + "'");
        if (c[0] != "seed") continue;
        SeedMetrics m;
        std::optional<double> eps;
        if (!c[3].empty()) {
            double e = 0;
            if (!textio::parse_number(c[3], e)) throw FormatError("report: bad eps_deploy");
            eps = e;
        }
        bool ok = textio::parse_number(c[4], m.seed) && textio::parse_number(c[5], m.n) &&
                  textio::parse_number(c[6], m.ttg_rate) && textio::parse_number(c[7], m.tto_rate) &&
                  textio::parse_number(c[8], m.ttc_rate) && textio::parse_number(c[9], m.mean_reduction) &&
                  textio::parse_number(c[10], m.deescalations) && textio::parse_number(c[11], m.fallbacks);
        if (!ok) throw FormatError("report '" + path.string() + "': malformed row '" + line + "'");
        builder.add(condition_from_string(c[1]), std::string(c[2]), eps, m.n, m);
    }
    return builder.reports;
}

void write_kappa_csv(const std::vector<KappaRecord>& kappas, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << "condition,seed,archetype,patients,raw_score,kappa\n";
    for (const auto& k : kappas) {
        for (int i = 0; i < kNumArchetypes; ++i) {
            if (!k.estimate.present[i]) continue;
            out << to_string(k.condition) << ',' << k.seed << ',' << to_string(static_cast<Archetype>(i)) << ','
                << k.estimate.patients[i] << ',' << textio::format_double(k.estimate.raw_score[i]) << ','
                << textio::format_double(k.estimate.kappa[i]) << '\n';
        }
    }
}

std::string markdown_table(const std::vector<EvalReport>& reports) {
    std::ostringstream md;
    md << std::fixed;
    md << "| Condition | Configuration | eps | TTG % | TTO % | TTC % | Mean reduction | Seeds | Fallbacks | De-escalations |\n";
    md << "|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : reports) {
        const int digits = r.condition == Condition::HTN ? 1 : 2;
        const auto ttg = r.ttg(), tto = r.tto(), ttc = r.ttc(), red = r.reduction();
        md << "| " << to_string(r.condition) << " | " << r.label << " | "
           << (r.eps_deploy ? textio::format_double(*r.eps_deploy) : std::string("-")) << " | " << std::setprecision(0)
           << ttg.mean << " ± " << ttg.std << " | " << tto.mean << " ± " << tto.std << " | " << ttc.mean << " ± "
           << ttc.std << " | " << std::setprecision(digits) << red.mean << " ± " << red.std << " | "
           << r.per_seed.size() << " | " << r.fallbacks() << " | " << r.deescalations() << " |\n";
    }
    return md.str();
}

}  // namespace chronic
