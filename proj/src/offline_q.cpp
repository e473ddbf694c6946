#include "chronic/offline_q.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "chronic/textio.hpp"

namespace chronic {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ConfigError("TrainConfig: learning_rate must be in (0, 1]");
    if (!(discount > 0.0 && discount < 1.0)) throw ConfigError("TrainConfig: discount must be in (0, 1)");
    if (iterations < 1 || batch_size < 1) throw ConfigError("TrainConfig: iterations and batch_size must be >= 1");
    if (!(beta >= 0.0)) throw ConfigError("TrainConfig: beta must be >= 0");
    if (!(eps_min_med_change >= 0.0 && eps_min_med_change <= 1.0)) {
        throw ConfigError("TrainConfig: eps_min_med_change must be in [0, 1]");
    }
}

QTable::QTable(DiscretizationSpec d)
    : disc(std::move(d)),
      values(static_cast<std::size_t>(disc.num_states()) * kNumActions, 0.0),
      visits(static_cast<std::size_t>(disc.num_states()) * kNumActions, 0),
      eps_seen(static_cast<std::size_t>(disc.eps_buckets()), 0) {}

bool QTable::state_visited(int state) const {
    for (int a = 0; a < kNumActions; ++a) {
        if (visit_count(state, a) > 0) return true;
    }
    return false;
}

std::uint64_t QTable::total_visits() const {
    std::uint64_t n = 0;
    for (auto v : visits) n += v;
    return n;
}

int QTable::nearest_seen_eps_bucket(int bucket) const {
    if (bucket < 0 || eps_seen.empty()) return bucket;
    int best = -1;
    for (int b = 0; b < static_cast<int>(eps_seen.size()); ++b) {
        if (!eps_seen[b]) continue;
        // Prefer the higher bucket on equal distance.
        if (best < 0 || std::abs(b - bucket) <= std::abs(best - bucket)) best = b;
    }
    return best < 0 ? bucket : best;
}

ActionSet available_actions(int current_med_level, double eps_hat, double eps_min_med_change) {
    if (eps_hat >= eps_min_med_change) return kAllActions;
    ActionSet set = 0;
    set |= ActionSet(1u << action_index(Action{current_med_level, 0}));
    set |= ActionSet(1u << action_index(Action{current_med_level, 1}));
    return set;
}

WeightedSampler::WeightedSampler(std::span<const TransitionRecord> records,
                                 const std::array<double, kNumArchetypes>& weights) {
    if (records.empty()) throw DataError("sample_batch: dataset is empty");
    cumulative_.reserve(records.size());
    double total = 0.0;
    for (const auto& r : records) {
        const double w = weights[static_cast<int>(r.archetype)];
        if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("sample_batch: weights must be finite and >= 0");
        total += w;
        cumulative_.push_back(total);
    }
    if (!(total > 0.0)) throw ConfigError("sample_batch: every record has zero weight");
}

std::vector<std::size_t> WeightedSampler::sample(int batch_size, Rng& rng) const {
    std::vector<std::size_t> out;
    out.reserve(static_cast<std::size_t>(std::max(batch_size, 0)));
    const double total = cumulative_.back();
    for (int i = 0; i < batch_size; ++i) {
        const double u = uniform01(rng) * total;
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        if (it == cumulative_.end()) --it;
        out.push_back(static_cast<std::size_t>(it - cumulative_.begin()));
    }
    return out;
}

std::vector<std::size_t> sample_batch(const Dataset& data, const std::array<double, kNumArchetypes>& weights,
                                      int batch_size, Rng& rng) {
    return WeightedSampler(data.records, weights).sample(batch_size, rng);
}

namespace {

double max_over(const QTable& table, int state, ActionSet set) {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < kNumActions; ++a) {
        if (contains(set, a)) best = std::max(best, table.q(state, a));
    }
    return best;
}

}  // namespace

double q_update(QTable& table, const Transition& t, const TrainConfig& config) {
    double target = t.reward;
    if (!t.terminal) {
        const ActionSet next_set =
            config.eps_aware ? available_actions(t.next_med_level, t.eps, config.eps_min_med_change) : kAllActions;
        target += config.discount * max_over(table, t.next_state, next_set);
    }
    double& q = table.q(t.state, t.action);
    const double td = target - q;
    q += config.learning_rate * td;
    ++table.visits[static_cast<std::size_t>(t.state) * kNumActions + t.action];
    return td;
}

TrainResult train(const Dataset& data, const ConditionSpec& spec, const RewardConfig& reward_config,
                  const TrainConfig& config, const DiscretizationSpec& disc, const CapabilityEstimate* estimate) {
    config.validate();
    reward_config.validate();
    disc.validate();
    if (config.eps_aware != disc.eps_aware()) {
        throw ConfigError("train: eps_aware flag does not match the discretization's eps bucket");
    }
    if (config.beta > 0.0 && estimate == nullptr) {
        throw ConfigError("train: beta > 0 requires a capability estimate");
    }
    if (data.records.empty()) throw DataError("train: dataset is empty");

    TrainResult result{QTable(disc), {}, {}};
    result.sampling_weights.fill(1.0);
    if (config.beta > 0.0) result.sampling_weights = transition_weights(*estimate, config.beta);

    std::vector<Transition> transitions;
    transitions.reserve(data.records.size());
    for (const auto& r : data.records) {
        const StateIndex s = encode_state(r.raw_obs, r.baseline, r.med_level, r.weeks_on, disc, r.eps);
        const StateIndex sn = encode_state(r.raw_next_obs, r.baseline, r.next_med_level, r.next_weeks_on, disc, r.eps);
        transitions.push_back(Transition{flat_index(s, disc), r.action, reward(r, reward_config, spec),
                                         flat_index(sn, disc), r.terminal, r.next_med_level, r.eps});
        if (disc.eps_aware()) result.table.eps_seen[static_cast<std::size_t>(s.eps)] = 1;
    }

    const WeightedSampler sampler(data.records, result.sampling_weights);
    Rng rng(stream_seed(config.seed, StreamDomain::Sampler, 0));
    result.td_trace.reserve(static_cast<std::size_t>(config.iterations));
    for (int it = 0; it < config.iterations; ++it) {
        double abs_td = 0.0;
        for (std::size_t idx : sampler.sample(config.batch_size, rng)) {
            abs_td += std::abs(q_update(result.table, transitions[idx], config));
        }
        result.td_trace.push_back(abs_td / config.batch_size);
    }
    return result;
}

int greedy_action(const QTable& table, int state, int current_med_level, ActionSet available) {
    const int hold = action_index(Action{current_med_level, 0});
    int best = -1;
    double best_value = -std::numeric_limits<double>::infinity();
    auto consider = [&](int a) {
        if (!contains(available, a)) return;
        const double v = table.q(state, a);
        if (best < 0 || v > best_value) {
            best = a;
            best_value = v;
        }
    };
    consider(hold);
    for (int a = 0; a < kNumActions; ++a) {
        if (a != hold) consider(a);
    }
    return best < 0 ? hold : best;
}

// ---------------------------------------------------------------------------
// File format: "chronic-qtable" header line with tab-separated key=value
// fields (edges as ';'-joined lists, provenance as meta.<key>), then one
// "state,action,value,visits" line per entry in state-major order.

namespace {

constexpr const char* kQTag = "chronic-qtable";

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ';';
        s += textio::format_double(v[i]);
    }
    return s;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    if (s.empty()) return out;
    for (auto part : textio::split(s, ';')) {
        double v = 0;
        if (!textio::parse_number(part, v)) throw FormatError("qtable header: bad edge value '" + std::string(part) + "'");
        out.push_back(v);
    }
    return out;
}

std::string qtable_prefix(const QTable& t) {
    std::string s = kQTag;
    s += "\tversion=" + std::to_string(kQTableFormatVersion);
    s += "\tbiomarker_edges=" + join(t.disc.biomarker_edges);
    s += "\tweeks_on_edges=" + join(t.disc.weeks_on_edges);
    s += "\treduction_edges=" + join(t.disc.reduction_edges);
    s += "\teps_edges=" + (t.disc.eps_edges ? join(*t.disc.eps_edges) : std::string("none"));
    std::string seen;
    for (auto b : t.eps_seen) seen += b ? '1' : '0';
    s += "\teps_seen=" + seen;
    for (const auto& [k, v] : t.meta) s += "\tmeta." + k + '=' + v;
    return s;
}

}  // namespace

void write_qtable(const QTable& table, const std::filesystem::path& path) {
    std::string body;
    for (int s = 0; s < table.num_states(); ++s) {
        for (int a = 0; a < kNumActions; ++a) {
            body += std::to_string(s) + ',' + std::to_string(a) + ',' + textio::format_double(table.q(s, a)) + ',' +
                    std::to_string(table.visit_count(s, a)) + '\n';
        }
    }
    const std::string prefix = qtable_prefix(table);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out << prefix << "\tcontent_hash=" << textio::format_hex(fnv1a(prefix + '\n' + body)) << '\n' << body;
    if (!out) throw DataError("write to '" + path.string() + "' failed");
}

QTable read_qtable(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open q-table '" + path.string() + "'");
    std::string header;
    if (!std::getline(in, header)) throw TruncationError("q-table '" + path.string() + "' is empty");
    std::map<std::string, std::string> f;
    if (textio::parse_header(header, f) != kQTag) throw FormatError("'" + path.string() + "' is not a chronic-qtable file");
    auto get = [&](const std::string& k) -> const std::string& {
        auto it = f.find(k);
        if (it == f.end()) throw FormatError("q-table header is missing field '" + k + "'");
        return it->second;
    };
    if (get("version") != std::to_string(kQTableFormatVersion)) {
        throw VersionMismatchError("q-table '" + path.string() + "' has format version " + get("version"));
    }
    DiscretizationSpec disc;
    disc.biomarker_edges = parse_list(get("biomarker_edges"));
    disc.weeks_on_edges = parse_list(get("weeks_on_edges"));
    disc.reduction_edges = parse_list(get("reduction_edges"));
    if (get("eps_edges") != "none") disc.eps_edges = parse_list(get("eps_edges"));
    disc.validate();

    QTable table(disc);
    const std::string& seen = get("eps_seen");
    if (seen.size() != table.eps_seen.size()) throw FormatError("q-table header: eps_seen has the wrong length");
    for (std::size_t i = 0; i < seen.size(); ++i) table.eps_seen[i] = seen[i] == '1' ? 1 : 0;
    for (const auto& [k, v] : f) {
        if (k.rfind("meta.", 0) == 0) table.meta[k.substr(5)] = v;
    }
    std::uint64_t declared = 0;
    if (!textio::parse_number(get("content_hash"), declared, 16)) throw FormatError("q-table header: bad content_hash");

    std::string body;
    std::string line;
    std::size_t entries = 0;
    const std::size_t expected = table.values.size();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto c = textio::split(line, ',');
        int s = 0, a = 0;
        double v = 0;
        std::uint32_t n = 0;
        if (c.size() != 4 || !textio::parse_number(c[0], s) || !textio::parse_number(c[1], a) ||
            !textio::parse_number(c[2], v) || !textio::parse_number(c[3], n) || s < 0 || s >= table.num_states() ||
            a < 0 || a >= kNumActions) {
            throw FormatError("q-table '" + path.string() + "': malformed entry '" + line + "'");
        }
        table.q(s, a) = v;
        table.visits[static_cast<std::size_t>(s) * kNumActions + a] = n;
        body += line;
        body += '\n';
        ++entries;
    }
    if (entries < expected) {
        throw TruncationError("q-table '" + path.string() + "' has " + std::to_string(entries) + " of " +
                              std::to_string(expected) + " entries");
    }
    if (fnv1a(qtable_prefix(table) + '\n' + body) != declared) {
        throw HashMismatchError("q-table '" + path.string() + "' content hash does not match its header");
    }
    return table;
}

}  // namespace chronic
