#include "chronic/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "chronic/rng.hpp"
#include "chronic/textio.hpp"

namespace chronic {

namespace {

std::vector<double> stepped_edges(double lo, double step, int buckets) {
    std::vector<double> edges;
    for (int k = 1; k < buckets; ++k) edges.push_back(lo + step * k);
    return edges;
}

void require_increasing(const std::vector<double>& edges, const char* what) {
    for (std::size_t i = 1; i < edges.size(); ++i) {
        if (!(edges[i - 1] < edges[i])) {
            throw ConfigError(std::string("DiscretizationSpec: ") + what + " edges must be strictly increasing");
        }
    }
}

}  // namespace

int DiscretizationSpec::num_states() const {
    return biomarker_buckets() * kNumMedLevels * weeks_on_buckets() * reduction_buckets() * eps_buckets();
}

void DiscretizationSpec::validate() const {
    require_increasing(biomarker_edges, "biomarker");
    require_increasing(weeks_on_edges, "weeks_on");
    require_increasing(reduction_edges, "reduction");
    if (eps_edges) require_increasing(*eps_edges, "eps");
}

std::vector<double> default_eps_edges() { return {0.375, 0.625, 0.825}; }

DiscretizationSpec default_discretization(Condition c, bool eps_aware) {
    DiscretizationSpec d;
    if (c == Condition::HTN) {
        d.biomarker_edges = stepped_edges(110.0, 10.0, 10);
        d.reduction_edges = {5.0, 15.0, 25.0};
    } else {
        d.biomarker_edges = stepped_edges(6.0, 0.5, 12);
        d.reduction_edges = {0.3, 1.0, 1.5};
    }
    if (eps_aware) d.eps_edges = default_eps_edges();
    return d;
}

int bucket_of(double value, const std::vector<double>& edges) {
    return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), value) - edges.begin());
}

StateIndex encode_state(double observed, double baseline, int med_level, int weeks_on,
                        const DiscretizationSpec& disc, std::optional<double> eps) {
    StateIndex s;
    s.biomarker = bucket_of(observed, disc.biomarker_edges);
    s.med_level = std::clamp(med_level, 0, kNumMedLevels - 1);
    s.weeks_on = bucket_of(static_cast<double>(weeks_on), disc.weeks_on_edges);
    s.reduction = bucket_of(baseline - observed, disc.reduction_edges);
    if (disc.eps_edges) s.eps = bucket_of(eps.value_or(1.0), *disc.eps_edges);
    return s;
}

int flat_index(const StateIndex& s, const DiscretizationSpec& disc) {
    int idx = s.biomarker;
    idx = idx * kNumMedLevels + s.med_level;
    idx = idx * disc.weeks_on_buckets() + s.weeks_on;
    idx = idx * disc.reduction_buckets() + s.reduction;
    if (disc.eps_aware()) idx = idx * disc.eps_buckets() + std::max(s.eps, 0);
    return idx;
}

int action_index(Action a) { return 2 * a.med_level + a.op; }

Action action_from_index(int index) {
    if (index < 0 || index >= kNumActions) {
        throw std::out_of_range("action index " + std::to_string(index) + " outside [0, 6)");
    }
    return Action{index / 2, index % 2};
}

void index_dataset(Dataset& data, const DiscretizationSpec& disc) {
    for (auto& r : data.records) {
        r.state = encode_state(r.raw_obs, r.baseline, r.med_level, r.weeks_on, disc, r.eps);
        r.next_state = encode_state(r.raw_next_obs, r.baseline, r.next_med_level, r.next_weeks_on, disc, r.eps);
    }
}

Dataset pool_datasets(const std::vector<Dataset>& parts) {
    if (parts.empty()) throw DataError("pool_datasets: no datasets given");
    Dataset out;
    out.header = parts.front().header;
    out.header.eps_gates.clear();
    out.header.patients = 0;
    out.header.record_count = 0;
    for (const auto& p : parts) {
        if (p.header.condition != out.header.condition || p.header.condition_hash != out.header.condition_hash) {
            throw DataError("pool_datasets: datasets were generated for different condition specs");
        }
        out.header.eps_gates.insert(out.header.eps_gates.end(), p.header.eps_gates.begin(), p.header.eps_gates.end());
        out.header.patients += p.header.patients;
        out.records.insert(out.records.end(), p.records.begin(), p.records.end());
    }
    out.header.record_count = out.records.size();
    return out;
}

// ---------------------------------------------------------------------------
// File format
//
// Line 1: "chronic-dataset" followed by tab-separated key=value fields.
// Then one comma-separated record per line, in the column order written by
// format_record(). content_hash covers every header field except itself
// and every record line.

namespace {

constexpr const char* kTag = "chronic-dataset";

std::string join_eps(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ';';
        s += textio::format_double(v[i]);
    }
    return s;
}

void append_state(std::string& out, const StateIndex& s) {
    out += std::to_string(s.biomarker) + ',' + std::to_string(s.med_level) + ',' +
           std::to_string(s.weeks_on) + ',' + std::to_string(s.reduction) + ',' + std::to_string(s.eps) + ',';
}

std::string format_record(const TransitionRecord& r) {
    std::string out;
    out.reserve(160);
    out += std::to_string(r.patient_id) + ',' + std::to_string(static_cast<int>(r.archetype)) + ',' +
           std::to_string(r.week) + ',';
    append_state(out, r.state);
    out += std::to_string(r.action) + ',';
    append_state(out, r.next_state);
    out += std::to_string(static_cast<int>(r.milestone_events)) + ',' + (r.terminal ? "1," : "0,");
    out += textio::format_double(r.raw_obs) + ',' + textio::format_double(r.raw_next_obs) + ',' +
           textio::format_double(r.baseline) + ',';
    out += std::to_string(r.med_level) + ',' + std::to_string(r.weeks_on) + ',' + std::to_string(r.next_med_level) +
           ',' + std::to_string(r.next_weeks_on) + ',';
    out += std::string(r.med_changed ? "1," : "0,") + (r.op_taken ? "1," : "0,");
    out += std::to_string(static_cast<int>(r.next_stall_bits)) + ',' + textio::format_double(r.eps);
    return out;
}

constexpr std::size_t kRecordColumns = 27;

template <typename T>
T field(std::string_view s, std::size_t line_no) {
    T v{};
    if (!textio::parse_number(s, v)) {
        throw FormatError("dataset line " + std::to_string(line_no) + ": cannot parse '" + std::string(s) + "'");
    }
    return v;
}

TransitionRecord parse_record(std::string_view line, std::size_t line_no) {
    const auto c = textio::split(line, ',');
    if (c.size() != kRecordColumns) {
        throw FormatError("dataset line " + std::to_string(line_no) + ": expected " +
                          std::to_string(kRecordColumns) + " columns, found " + std::to_string(c.size()));
    }
    TransitionRecord r;
    std::size_t i = 0;
    auto next_int = [&] { return field<int>(c[i++], line_no); };
    auto next_double = [&] { return field<double>(c[i++], line_no); };
    auto next_state = [&] {
        StateIndex s;
        s.biomarker = next_int();
        s.med_level = next_int();
        s.weeks_on = next_int();
        s.reduction = next_int();
        s.eps = next_int();
        return s;
    };
    r.patient_id = field<std::uint32_t>(c[i++], line_no);
    const int arch = next_int();
    if (arch < 0 || arch >= kNumArchetypes) throw FormatError("dataset line " + std::to_string(line_no) + ": bad archetype");
    r.archetype = static_cast<Archetype>(arch);
    r.week = next_int();
    r.state = next_state();
    r.action = next_int();
    if (r.action < 0 || r.action >= kNumActions) throw FormatError("dataset line " + std::to_string(line_no) + ": bad action");
    r.next_state = next_state();
    r.milestone_events = static_cast<std::uint8_t>(next_int());
    r.terminal = next_int() != 0;
    r.raw_obs = next_double();
    r.raw_next_obs = next_double();
    r.baseline = next_double();
    r.med_level = next_int();
    r.weeks_on = next_int();
    r.next_med_level = next_int();
    r.next_weeks_on = next_int();
    r.med_changed = next_int() != 0;
    r.op_taken = next_int() != 0;
    r.next_stall_bits = static_cast<std::uint8_t>(next_int());
    r.eps = next_double();
    return r;
}

std::vector<std::pair<std::string, std::string>> header_fields(const DatasetHeader& h) {
    return {
        {"version", std::to_string(kDatasetFormatVersion)},
        {"condition", std::string(to_string(h.condition))},
        {"eps", join_eps(h.eps_gates)},
        {"seed", std::to_string(h.seed)},
        {"patients", std::to_string(h.patients)},
        {"horizon", std::to_string(h.horizon_weeks)},
        {"records", std::to_string(h.record_count)},
        {"condition_hash", textio::format_hex(h.condition_hash)},
        {"behavior_hash", textio::format_hex(h.behavior_hash)},
        {"discretization_hash", textio::format_hex(h.discretization_hash)},
    };
}

std::string header_prefix(const DatasetHeader& h) {
    std::string s = kTag;
    for (const auto& [k, v] : header_fields(h)) s += '\t' + k + '=' + v;
    return s;
}

const std::string& require_field(const std::map<std::string, std::string>& f, const std::string& key) {
    auto it = f.find(key);
    if (it == f.end()) throw FormatError("dataset header is missing field '" + key + "'");
    return it->second;
}

}  // namespace

void write_dataset(const Dataset& data, const std::filesystem::path& path) {
    DatasetHeader h = data.header;
    h.record_count = data.records.size();

    std::string body;
    body.reserve(data.records.size() * 140);
    for (const auto& r : data.records) {
        body += format_record(r);
        body += '\n';
    }
    const std::string prefix = header_prefix(h);
    const std::uint64_t hash = fnv1a(prefix + '\n' + body);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out << prefix << "\tcontent_hash=" << textio::format_hex(hash) << '\n' << body;
    out.flush();
    if (!out) throw DataError("write to '" + path.string() + "' failed");
}

Dataset read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
    std::string header_line;
    if (!std::getline(in, header_line)) throw TruncationError("dataset '" + path.string() + "' is empty");

    std::map<std::string, std::string> f;
    if (textio::parse_header(header_line, f) != kTag) {
        throw FormatError("'" + path.string() + "' is not a chronic-dataset file");
    }
    int version = 0;
    if (!textio::parse_number(require_field(f, "version"), version) || version != kDatasetFormatVersion) {
        throw VersionMismatchError("dataset '" + path.string() + "' has format version " + require_field(f, "version") +
                                   ", expected " + std::to_string(kDatasetFormatVersion));
    }

    Dataset data;
    DatasetHeader& h = data.header;
    h.condition = condition_from_string(require_field(f, "condition"));
    for (auto e : textio::split(require_field(f, "eps"), ';')) {
        if (e.empty()) continue;
        double v = 0;
        if (!textio::parse_number(e, v)) throw FormatError("dataset header: bad eps value");
        h.eps_gates.push_back(v);
    }
    auto num = [&](const char* key, auto& out, int base = 10) {
        if (!textio::parse_number(require_field(f, key), out, base)) {
            throw FormatError(std::string("dataset header: bad value for '") + key + "'");
        }
    };
    num("seed", h.seed);
    num("patients", h.patients);
    num("horizon", h.horizon_weeks);
    num("records", h.record_count);
    num("condition_hash", h.condition_hash, 16);
    num("discretization_hash", h.discretization_hash, 16);
    num("behavior_hash", h.behavior_hash, 16);
    std::uint64_t declared_hash = 0;
    num("content_hash", declared_hash, 16);

    std::string body;
    std::string line;
    data.records.reserve(h.record_count);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        data.records.push_back(parse_record(line, line_no));
        body += line;
        body += '\n';
    }
    if (data.records.size() < h.record_count) {
        throw TruncationError("dataset '" + path.string() + "' declares " + std::to_string(h.record_count) +
                              " records but contains " + std::to_string(data.records.size()));
    }
    if (data.records.size() > h.record_count) {
        throw FormatError("dataset '" + path.string() + "' contains more records than declared");
    }
    if (fnv1a(header_prefix(h) + '\n' + body) != declared_hash) {
        throw HashMismatchError("dataset '" + path.string() + "' content hash does not match its header");
    }
    return data;
}

}  // namespace chronic
