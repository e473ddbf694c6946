// Command-line entry point for the simulation lab.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
// 3 acceptance check failed.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chronic/acceptance.hpp"
#include "chronic/config.hpp"
#include "chronic/evaluation.hpp"
#include "chronic/textio.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace chronic;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kAcceptance = 3 };

struct CliError : std::runtime_error {
    int code;
    CliError(int c, const std::string& what) : std::runtime_error(what), code(c) {}
};

// Runs one pipeline stage, tagging any failure with the stage name.
template <typename F>
auto stage(const std::string& name, F&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const CliError&) {
        throw;
    } catch (const ConfigError& e) {
        throw CliError(kUsage, name + ": " + e.what());
    } catch (const std::exception& e) {
        throw CliError(kData, name + ": " + e.what());
    }
}

std::uint64_t file_hash(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return fnv1a(ss.str());
}

void ensure_parent(const fs::path& path) {
    const fs::path parent = path.parent_path();
    if (parent.empty()) return;
    std::error_code ec;
    fs::create_directories(parent, ec);
    if (ec || !fs::is_directory(parent)) {
        throw DataError("cannot create output directory '" + parent.string() + "': " + ec.message());
    }
}

void ensure_dir(const fs::path& dir) { ensure_parent(dir / "x"); }

void write_text(const fs::path& path, const std::string& text) {
    ensure_parent(path);
    std::ofstream out(path);
    if (!out || !(out << text)) throw DataError("cannot write '" + path.string() + "'");
}

/// Resolved config, seeds and the hash of every artifact a run produced.
class Manifest {
public:
    Manifest(std::string command, const ExperimentConfig& config, std::vector<std::uint64_t> seeds)
        : command_(std::move(command)), config_(config), seeds_(std::move(seeds)) {}

    void artifact(const fs::path& path) { artifacts_.push_back(path); }
    void note(const std::string& key, json value) { extra_[key] = std::move(value); }

    void write(const fs::path& path) const {
        json arts = json::array();
        for (const auto& a : artifacts_) {
            arts.push_back({{"path", a.string()},
                            {"bytes", fs::file_size(a)},
                            {"fnv1a", textio::format_hex(file_hash(a))}});
        }
        json hashes = json::object();
        for (const auto& b : config_.bundles) {
            hashes[std::string(to_string(b.spec.condition))] = {
                {"condition", textio::format_hex(spec_hash(b.spec))},
                {"behavior", textio::format_hex(spec_hash(b.behavior))},
                {"discretization", textio::format_hex(spec_hash(b.discretization))},
            };
        }
        json m = {{"command", command_},  {"seeds", seeds_},       {"config", config_},
                  {"spec_hashes", hashes}, {"artifacts", arts}};
        for (const auto& [k, v] : extra_.items()) m[k] = v;
        write_text(path, m.dump(2) + "\n");
    }

private:
    std::string command_;
    ExperimentConfig config_;
    std::vector<std::uint64_t> seeds_;
    std::vector<fs::path> artifacts_;
    json extra_ = json::object();
};

fs::path manifest_for(const fs::path& artifact) { return fs::path(artifact.string() + ".manifest.json"); }

std::string eps_tag(double eps) { return textio::format_double(eps); }

/// Verifies that a dataset was generated under the configured condition.
void check_dataset_hashes(const Dataset& data, const ConditionBundle& b) {
    auto expect = [](const char* what, std::uint64_t got, std::uint64_t want) {
        if (got != want) {
            throw HashMismatchError(std::string("dataset ") + what + " hash " + textio::format_hex(got) +
                                    " does not match the configured " + what + " hash " +
                                    textio::format_hex(want) + " (spec drift)");
        }
    };
    expect("condition", data.header.condition_hash, spec_hash(b.spec));
    expect("behavior", data.header.behavior_hash, spec_hash(b.behavior));
    expect("discretization", data.header.discretization_hash, spec_hash(b.discretization));
}

bool print_checks(const std::vector<acceptance::CriterionResult>& results) {
    bool all = true;
    for (const auto& r : results) {
        std::cout << r.summary_line() << '\n';
        for (const auto& c : r.checks) {
            if (!c.pass) std::cout << "  FAIL " << c.what << '\n';
        }
        all = all && r.pass();
    }
    return all;
}

std::string series_csv(const std::vector<EvalReport>& reports) {
    std::ostringstream s;
    s << "condition,label,eps_deploy,metric,mean,std,seeds\n";
    for (const auto& r : reports) {
        const std::pair<const char*, MeanStd> metrics[] = {
            {"ttg_rate", r.ttg()}, {"tto_rate", r.tto()}, {"ttc_rate", r.ttc()}, {"mean_reduction", r.reduction()}};
        for (const auto& [name, ms] : metrics) {
            s << to_string(r.condition) << ',' << r.label << ','
              << (r.eps_deploy ? textio::format_double(*r.eps_deploy) : std::string()) << ',' << name << ','
              << textio::format_double(ms.mean) << ',' << textio::format_double(ms.std) << ',' << r.per_seed.size()
              << '\n';
        }
    }
    return s.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Chronic-care offline RL simulation lab"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string out;
    std::vector<std::uint64_t> seeds;
    int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    bool check = false;
    app.add_option("--config", config_path, "Experiment config (JSON); defaults are used when omitted")
        ->check(CLI::ExistingFile);
    app.add_option("--out", out, "Output file or directory");
    app.add_option("--seeds", seeds, "Seed list, overriding the config")->delimiter(',');
    app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--check", check, "Run the acceptance checks on study output; exit 3 on failure");

    // generate
    auto* gen = app.add_subcommand("generate", "Generate a behavior-policy dataset");
    std::string gen_condition = "HTN";
    double gen_eps = 1.0;
    std::optional<int> gen_patients;
    gen->add_option("--condition", gen_condition, "HTN or T2D");
    gen->add_option("--eps", gen_eps, "Execution gate for proposed medication changes");
    gen->add_option("--patients", gen_patients, "Population size (default: config train_patients)");

    // train
    auto* tr = app.add_subcommand("train", "Train a Q-table on a dataset");
    std::string tr_dataset;
    std::optional<std::string> tr_reward;
    std::optional<double> tr_beta;
    bool tr_aware = false;
    tr->add_option("dataset", tr_dataset, "Dataset file")->required();
    tr->add_option("--reward", tr_reward, "tiered or terminal (default: config reward.kind)");
    tr->add_option("--beta", tr_beta, "Capability temperature (default: config train.beta)");
    tr->add_flag("--eps-aware", tr_aware, "Include the execution-intensity bucket in the state");

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Roll out a trained table or the behavior policy");
    std::string ev_table;
    bool ev_behavior = false;
    std::string ev_condition;
    double ev_eps = 1.0;
    std::string ev_label;
    ev->add_option("--qtable", ev_table, "Trained Q-table file");
    ev->add_flag("--behavior", ev_behavior, "Evaluate the clinician mixture instead of a table");
    ev->add_option("--condition", ev_condition, "HTN or T2D (behavior evaluation)");
    ev->add_option("--eps", ev_eps, "Deployment execution intensity");
    ev->add_option("--label", ev_label, "Report label");

    auto* sa = app.add_subcommand("study-a", "Behavior baseline and capability-weighted training study");
    auto* sb = app.add_subcommand("study-b", "Execution-intensity naive vs aware study");

    auto* rp = app.add_subcommand("report", "Summarize report CSV files");
    std::vector<std::string> rp_files;
    rp->add_option("files", rp_files, "Report CSV files");

    auto* cf = app.add_subcommand("config", "Print the resolved configuration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        ExperimentConfig config =
            stage("config", [&] { return config_path.empty() ? ExperimentConfig{} : load_config(config_path); });
        const fs::path out_dir = out.empty() ? fs::path(config.output_dir) : fs::path(out);

        if (cf->parsed()) {
            const std::string text = dump_config(config);
            if (out.empty()) {
                std::cout << text;
            } else {
                write_text(out, text);
            }
            return kOk;
        }

        if (gen->parsed()) {
            const Condition c = stage("generate", [&] { return condition_from_string(gen_condition); });
            const ConditionBundle& b = config.bundle(c);
            const int n = gen_patients.value_or(config.train_patients);
            const std::uint64_t seed = seeds.empty() ? config.seeds.front() : seeds.front();
            const fs::path path = out.empty() ? fs::path(config.output_dir) / (std::string(to_string(c)) + "_eps" +
                                                                               eps_tag(gen_eps) + "_seed" +
                                                                               std::to_string(seed) + ".dataset")
                                              : fs::path(out);
            const Dataset data = stage("generate", [&] {
                return generate_dataset(n, b.spec, b.behavior, b.discretization, gen_eps, seed);
            });
            stage("generate: write", [&] {
                ensure_parent(path);
                write_dataset(data, path);
            });
            std::array<long, kNumArchetypes> patients{};
            for (const auto& r : data.records) {
                if (r.week == 0) ++patients[static_cast<int>(r.archetype)];
            }
            std::cout << "wrote " << data.records.size() << " records (" << n << " patients x "
                      << b.spec.horizon_weeks << " weeks) to " << path.string() << '\n';
            for (int i = 0; i < kNumArchetypes; ++i) {
                std::cout << "  " << to_string(static_cast<Archetype>(i)) << ": "
                          << textio::format_double(100.0 * patients[i] / n) << "% of patients\n";
            }
            Manifest m("generate", config, {seed});
            m.note("eps_gate", gen_eps);
            m.artifact(path);
            m.write(manifest_for(path));
            return kOk;
        }

        if (tr->parsed()) {
            const Dataset data = stage("train: read dataset", [&] { return read_dataset(tr_dataset); });
            const ConditionBundle& b = config.bundle(data.header.condition);
            stage("train: verify dataset", [&] { check_dataset_hashes(data, b); });
            RewardConfig rc = config.reward;
            if (tr_reward) rc.kind = stage("train", [&] { return reward_kind_from_string(*tr_reward); });
            TrainConfig tc = config.train;
            if (tr_beta) tc.beta = *tr_beta;
            tc.eps_aware = tr_aware;
            if (!seeds.empty()) tc.seed = seeds.front();

            const fs::path path = out.empty() ? fs::path(tr_dataset + ".qtable") : fs::path(out);
            Manifest m("train", config, {tc.seed});
            std::optional<CapabilityEstimate> kappa;
            if (tc.beta > 0.0) {
                kappa = stage("train: capability inference", [&] { return infer_kappa(data, config.capability); });
                const fs::path kpath(path.string() + ".kappa.csv");
                stage("train: write capability", [&] {
                    ensure_parent(kpath);
                    write_capability_csv(*kappa, tc.beta, data.header.condition, kpath);
                });
                m.artifact(kpath);
                std::cout << "capability:";
                for (int i = 0; i < kNumArchetypes; ++i) {
                    std::cout << ' ' << to_string(static_cast<Archetype>(i)) << '=' << kappa->kappa[i];
                }
                std::cout << '\n';
            }
            TrainResult result = stage("train", [&] {
                return train(data, b.spec, rc, tc, b.grid(tr_aware), kappa ? &*kappa : nullptr);
            });
            result.table.meta = {
                {"condition", std::string(to_string(data.header.condition))},
                {"condition_hash", textio::format_hex(spec_hash(b.spec))},
                {"reward", std::string(to_string(rc.kind))},
                {"beta", textio::format_double(tc.beta)},
                {"eps_aware", tr_aware ? "1" : "0"},
                {"seed", std::to_string(tc.seed)},
                {"dataset_fnv1a", textio::format_hex(file_hash(tr_dataset))},
            };
            stage("train: write", [&] {
                ensure_parent(path);
                write_qtable(result.table, path);
            });
            const fs::path tdpath(path.string() + ".td.csv");
            std::ostringstream td;
            td << "iteration,mean_abs_td\n";
            for (std::size_t i = 0; i < result.td_trace.size(); ++i) {
                td << i << ',' << textio::format_double(result.td_trace[i]) << '\n';
            }
            write_text(tdpath, td.str());
            m.artifact(path);
            m.artifact(tdpath);
            m.note("dataset", tr_dataset);
            m.write(manifest_for(path));
            std::cout << "trained " << tc.iterations << " x " << tc.batch_size << " updates; final mean |TD| "
                      << result.td_trace.back() << "; wrote " << path.string() << '\n';
            return kOk;
        }

        if (ev->parsed()) {
            if (ev_behavior == !ev_table.empty()) {
                throw CliError(kUsage, "evaluate: give exactly one of --qtable or --behavior");
            }
            const std::vector<std::uint64_t> use_seeds = seeds.empty() ? config.seeds : seeds;
            std::optional<QTable> table;
            Condition c = Condition::HTN;
            if (!ev_table.empty()) {
                table = stage("evaluate: read table", [&] { return read_qtable(ev_table); });
                const auto it = table->meta.find("condition");
                if (it == table->meta.end()) throw CliError(kData, "evaluate: table has no condition metadata");
                c = stage("evaluate", [&] { return condition_from_string(it->second); });
                const auto h = table->meta.find("condition_hash");
                if (h != table->meta.end() && h->second != textio::format_hex(spec_hash(config.bundle(c).spec))) {
                    throw CliError(kData, "evaluate: table was trained under a different condition spec");
                }
            } else {
                if (ev_condition.empty()) throw CliError(kUsage, "evaluate: --behavior needs --condition");
                c = stage("evaluate", [&] { return condition_from_string(ev_condition); });
            }
            const ConditionBundle& b = config.bundle(c);
            EvalReport rep;
            rep.label = !ev_label.empty() ? ev_label : (ev_behavior ? labels::kBehavior : "qtable");
            rep.condition = c;
            rep.eps_deploy = ev_eps;
            rep.n_patients = config.eval_patients;
            rep.per_seed.resize(use_seeds.size());
            stage("evaluate", [&] {
                parallel_for(static_cast<int>(use_seeds.size()), jobs, [&](int i) {
                    std::unique_ptr<Policy> policy;
                    if (table) policy = std::make_unique<GreedyQPolicy>(*table, config.train.eps_min_med_change);
                    else policy = std::make_unique<BehaviorMixturePolicy>(b.behavior, b.spec);
                    rep.per_seed[i] = aggregate(
                        rollout_policy(*policy, b.spec, config.eval_patients, ev_eps, use_seeds[i]), use_seeds[i]);
                });
            });
            std::cout << markdown_table({rep});
            if (!out.empty()) {
                stage("evaluate: write", [&] {
                    ensure_parent(out);
                    write_reports_csv({rep}, out);
                });
                Manifest m("evaluate", config, use_seeds);
                if (table) m.artifact(ev_table);
                m.artifact(out);
                m.write(manifest_for(out));
            }
            return kOk;
        }

        if (sa->parsed() || sb->parsed()) {
            const bool is_a = sa->parsed();
            const std::string name = is_a ? "study-a" : "study-b";
            const std::vector<std::uint64_t> use_seeds =
                !seeds.empty() ? seeds : (is_a ? config.seeds : config.study_b.seeds);
            const StudyResult result = stage(name, [&] {
                return is_a ? study_a(config, use_seeds, jobs) : study_b(config, use_seeds, jobs);
            });
            const std::string prefix = is_a ? "study_a" : "study_b";
            const fs::path reports = out_dir / (prefix + "_reports.csv");
            const fs::path kappas = out_dir / (prefix + "_kappa.csv");
            const fs::path table = out_dir / (prefix + ".md");
            const std::string md = markdown_table(result.reports);
            stage(name + ": write", [&] {
                ensure_dir(out_dir);
                std::vector<EvalReport> all = result.reports;
                all.insert(all.end(), result.supplementary.begin(), result.supplementary.end());
                write_reports_csv(all, reports);
                write_kappa_csv(result.kappas, kappas);
                write_text(table, md);
            });
            std::cout << md;
            Manifest m(name, config, use_seeds);
            m.artifact(reports);
            m.artifact(kappas);
            m.artifact(table);

            int rc = kOk;
            if (check) {
                std::cout << '\n';
                const auto results =
                    is_a ? acceptance::study_a_orderings(result) : acceptance::study_b_orderings(result);
                json checks = json::array();
                for (const auto& r : results) checks.push_back({{"criterion", r.number}, {"pass", r.pass()}});
                m.note("checks", checks);
                if (!print_checks(results)) rc = kAcceptance;
            }
            m.write(out_dir / (prefix + "_manifest.json"));
            return rc;
        }

        if (rp->parsed()) {
            if (rp_files.empty()) throw CliError(kUsage, "report: no report files given");
            std::vector<EvalReport> all;
            for (const auto& f : rp_files) {
                auto part = stage("report: read " + f, [&] { return read_reports_csv(f); });
                all.insert(all.end(), part.begin(), part.end());
            }
            // Rows from the headline study carry no deployment eps; sweep rows
            // always do. Mixing the two would not produce a single table.
            bool with_eps = false, without_eps = false;
            for (const auto& r : all) (r.eps_deploy ? with_eps : without_eps) = true;
            if (with_eps && without_eps) {
                throw CliError(kUsage, "report: cannot mix eps-sweep reports with fixed-eps reports");
            }
            const std::string md = markdown_table(all);
            std::cout << md;
            if (!out.empty()) {
                const fs::path dir(out);
                stage("report: write", [&] {
                    ensure_dir(dir);
                    write_text(dir / "report.md", md);
                    write_text(dir / "report_series.csv", series_csv(all));
                });
                Manifest m("report", config, {});
                for (const auto& f : rp_files) m.artifact(f);
                m.artifact(dir / "report.md");
                m.artifact(dir / "report_series.csv");
                m.write(dir / "report_manifest.json");
            }
            return kOk;
        }
    } catch (const CliError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    }
    return kUsage;
}
