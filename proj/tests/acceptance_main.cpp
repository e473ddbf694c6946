// Runs every acceptance criterion on the default configuration and prints
// one PASS/FAIL line per criterion, followed by the individual checks.
// Exit status is 0 only when every criterion passes.

#include <chrono>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "chronic/acceptance.hpp"

using namespace chronic;

namespace {

template <typename F>
double timed(F&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance suite"};
    int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    bool verbose = false;
    app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    app.add_flag("-v,--verbose", verbose, "Print passing checks as well");
    CLI11_PARSE(app, argc, argv);

    const ExperimentConfig config;
    std::vector<acceptance::CriterionResult> results;
    try {
        // Behavior baseline alone, timed separately from training.
        StudyResult behavior;
        const double behavior_seconds = timed([&] {
            for (auto c : config.conditions) {
                const ConditionBundle& b = config.bundle(c);
                EvalReport rep;
                rep.label = labels::kBehavior;
                rep.condition = c;
                rep.n_patients = config.eval_patients;
                for (auto seed : config.seeds) {
                    BehaviorMixturePolicy policy(b.behavior, b.spec);
                    rep.per_seed.push_back(aggregate(
                        rollout_policy(policy, b.spec, config.eval_patients, config.study_a.deploy_eps, seed), seed));
                }
                behavior.reports.push_back(std::move(rep));
            }
        });

        StudyResult a, b;
        const double a_seconds = timed([&] { a = study_a(config, config.seeds, jobs); });
        const double b_seconds = timed([&] { b = study_b(config, config.study_b.seeds, jobs); });
        std::cout << "study A: " << config.seeds.size() << " seeds in " << a_seconds << " s; study B: "
                  << config.study_b.seeds.size() << " seeds in " << b_seconds << " s\n\n";

        results.push_back(acceptance::behavior_calibration(behavior, behavior_seconds));
        results.push_back(acceptance::kappa_ordering(a));
        results.push_back(acceptance::study_a_headline(a, a_seconds));
        results.push_back(acceptance::capability_dominance(a));
        results.push_back(acceptance::study_b_generalization(b));
        results.push_back(acceptance::property_suites(config));
        results.push_back(acceptance::reward_density_bands(config));

        std::cout << markdown_table(a.reports) << '\n' << markdown_table(b.reports) << '\n';
    } catch (const std::exception& e) {
        std::cerr << "acceptance run aborted: " << e.what() << '\n';
        return 2;
    }

    bool all = true;
    for (const auto& r : results) {
        std::cout << r.summary_line() << '\n';
        all = all && r.pass();
    }
    std::cout << '\n';
    for (const auto& r : results) {
        for (const auto& c : r.checks) {
            if (verbose || !c.pass) std::cout << "  [" << r.number << "] " << (c.pass ? "ok   " : "FAIL ") << c.what << '\n';
        }
    }
    return all ? 0 : 1;
}
