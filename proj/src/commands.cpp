#include "diss/commands.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <sstream>

#include "diss/config.hpp"
#include "diss/runner.hpp"
#include "diss/svg.hpp"

namespace diss {

namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, ptr);
}

struct RunJob {
    std::string strategy;
    std::uint64_t seed = 0;
};

struct RunOutcome {
    LearningCurve curve;
    ReplayBuffer buffer;
};

std::string curves_csv(const std::vector<LearningCurve>& curves) {
    std::ostringstream out;
    out << "strategy,seed,queries,mean_reward,mean_nfeat\n";
    for (const auto& curve : curves) {
        for (const auto& p : curve.points) {
            out << curve.strategy << ',' << curve.seed << ',' << p.queries << ','
                << format_double(p.mean_reward) << ',' << format_double(p.mean_selected_features)
                << '\n';
        }
    }
    return out.str();
}

struct CsvRow {
    std::string strategy;
    std::uint64_t seed;
    double queries;
    double mean_reward;
};

std::vector<CsvRow> read_curves_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open csv file: " + path);
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("empty csv file: " + path);
    if (header.rfind("strategy,seed,queries,mean_reward,mean_nfeat", 0) != 0) {
        throw std::runtime_error("csv schema mismatch in " + path + ": got header '" + header +
                                 "'");
    }
    std::vector<CsvRow> rows;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        CsvRow row;
        std::string cell;
        if (!std::getline(ss, row.strategy, ',')) {
            throw std::runtime_error("bad csv row at line " + std::to_string(line_no));
        }
        auto next_double = [&](double& out) {
            if (!std::getline(ss, cell, ',')) {
                throw std::runtime_error("bad csv row at line " + std::to_string(line_no));
            }
            out = std::stod(cell);
        };
        double seed;
        next_double(seed);
        row.seed = static_cast<std::uint64_t>(seed);
        next_double(row.queries);
        next_double(row.mean_reward);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<ChartSeries> series_from_rows(const std::vector<CsvRow>& rows) {
    // strategy -> queries -> per-seed rewards
    std::map<std::string, std::map<double, std::vector<double>>> grouped;
    std::vector<std::string> order;
    for (const auto& row : rows) {
        if (grouped.find(row.strategy) == grouped.end()) order.push_back(row.strategy);
        grouped[row.strategy][row.queries].push_back(row.mean_reward);
    }
    std::vector<ChartSeries> series;
    for (const auto& name : order) {
        ChartSeries s;
        s.label = name;
        for (const auto& [q, vals] : grouped[name]) {
            double mean = 0.0;
            for (double v : vals) mean += v;
            mean /= static_cast<double>(vals.size());
            double var = 0.0;
            for (double v : vals) var += (v - mean) * (v - mean);
            const double stddev =
                vals.size() > 1 ? std::sqrt(var / static_cast<double>(vals.size() - 1)) : 0.0;
            s.x.push_back(q);
            s.y.push_back(mean);
            s.band.push_back(stddev);
        }
        series.push_back(std::move(s));
    }
    return series;
}

}  // namespace

std::string version_string() { return "diss 0.1.0"; }

int cmd_run(const std::string& config_path, const RunOptions& options) {
    ExperimentConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    const auto errors = validate_config(cfg);
    if (!errors.empty()) {
        for (const auto& err : errors) std::cerr << "config error: " << err << '\n';
        return 2;
    }
    if (!options.output_dir.empty()) cfg.output_dir = options.output_dir;

    std::vector<std::uint64_t> seeds;
    for (auto s : cfg.seeds) seeds.push_back(s + options.seed_offset);

    try {
        const Environment env = assemble_environment(cfg);

        std::vector<RunJob> jobs;
        for (const auto& strategy : cfg.strategies) {
            for (auto seed : seeds) jobs.push_back({strategy, seed});
        }
        std::vector<RunOutcome> outcomes(jobs.size());

        EvalConfig eval;
        eval.action_cap = cfg.eval_action_cap > 0 ? cfg.eval_action_cap
                                                  : cfg.acquisition.action_cap;
        eval.max_test_instances = cfg.eval_max_test_instances;
        if (cfg.environment.kind == "llm" && eval.max_test_instances == 0) {
            eval.max_test_instances = 100;  // bound external query volume
        }

        auto run_job = [&](std::size_t idx) {
            const auto& job = jobs[idx];
            const AcquisitionConfig acq = acquisition_for_strategy(cfg, job.strategy);
            LearningCurve curve;
            curve.strategy = job.strategy;
            curve.seed = job.seed;
            const auto on_checkpoint = [&](std::size_t queries, const ReplayBuffer& buffer,
                                           const RewardModel* model) {
                Rng eval_rng(mix_seed(job.seed, 0xe7a1u + queries));
                PolicyScorerFactory policy;
                if (model != nullptr) {
                    policy = mean_policy(*model);
                } else if (acq.strategy == Strategy::modiste_knn) {
                    policy = modiste_knn_policy(buffer, env.train, buffer.size(),
                                                static_cast<std::size_t>(acq.modiste_k));
                } else {
                    policy = modiste_uknn_policy(buffer, env.train, buffer.size(),
                                                 static_cast<std::size_t>(acq.modiste_k),
                                                 acq.modiste_nu);
                }
                const auto result = evaluate_policy(policy, env, eval, eval_rng);
                curve.points.push_back(
                    {queries, result.mean_reward(), result.mean_mask_cardinality()});
            };
            auto acq_result = run_acquisition(acq, env, job.seed, on_checkpoint);
            outcomes[idx] = {std::move(curve), std::move(acq_result.buffer)};
        };

        const int jobs_n = std::max(1, options.jobs);
        if (jobs_n == 1) {
            for (std::size_t i = 0; i < jobs.size(); ++i) run_job(i);
        } else {
            std::atomic<std::size_t> next{0};
            auto worker = [&] {
                while (true) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= jobs.size()) break;
                    run_job(i);
                }
            };
            std::vector<std::future<void>> pool;
            for (int w = 0; w < jobs_n; ++w) {
                pool.push_back(std::async(std::launch::async, worker));
            }
            for (auto& f : pool) f.get();
        }

        fs::create_directories(cfg.output_dir);
        fs::create_directories(fs::path(cfg.output_dir) / "buffers");

        std::vector<LearningCurve> curves;
        for (auto& o : outcomes) curves.push_back(o.curve);
        {
            std::ofstream out(fs::path(cfg.output_dir) / "curves.csv");
            if (!out) throw std::runtime_error("cannot write curves.csv");
            out << curves_csv(curves);
        }

        for (std::size_t i = 0; i < jobs.size(); ++i) {
            const auto name = jobs[i].strategy + "_seed" + std::to_string(jobs[i].seed) + ".ndjson";
            save_buffer(outcomes[i].buffer, (fs::path(cfg.output_dir) / "buffers" / name).string());
        }

        std::vector<ChartSeries> series;
        for (const auto& strategy : cfg.strategies) {
            std::vector<LearningCurve> per_strategy;
            for (const auto& c : curves) {
                if (c.strategy == strategy) per_strategy.push_back(c);
            }
            const auto agg = aggregate_curves(per_strategy);
            ChartSeries s;
            s.label = strategy;
            for (std::size_t p = 0; p < agg.queries.size(); ++p) {
                s.x.push_back(static_cast<double>(agg.queries[p]));
                s.y.push_back(agg.mean[p]);
                s.band.push_back(agg.stddev[p]);
            }
            series.push_back(std::move(s));
        }
        write_line_chart((fs::path(cfg.output_dir) / "curves.svg").string(), series, "queries",
                         "mean test reward", env.name);

        const auto resolved = config_to_json(cfg);
        nlohmann::json manifest = {
            {"version", version_string()},
            {"config_hash", config_hash(resolved)},
            {"seeds", seeds},
            {"config", resolved},
            {"outputs",
             {{"curves", "curves.csv"}, {"chart", "curves.svg"}, {"buffers", "buffers/"}}},
        };
        {
            std::ofstream out(fs::path(cfg.output_dir) / "manifest.json");
            if (!out) throw std::runtime_error("cannot write manifest.json");
            out << manifest.dump(2) << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    std::cout << "wrote " << cfg.output_dir << "/curves.csv\n";
    return 0;
}

int cmd_validate(const std::string& config_path) {
    ExperimentConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    const auto errors = validate_config(cfg);
    if (!errors.empty()) {
        for (const auto& err : errors) std::cerr << "config error: " << err << '\n';
        return 2;
    }
    std::cout << config_to_json(cfg).dump(2) << '\n';
    return 0;
}

int cmd_plot(const std::vector<std::string>& csv_paths, const std::string& output_svg) {
    try {
        std::vector<CsvRow> rows;
        for (const auto& path : csv_paths) {
            auto file_rows = read_curves_csv(path);
            rows.insert(rows.end(), file_rows.begin(), file_rows.end());
        }
        if (rows.empty()) throw std::runtime_error("no data rows in the given csv files");
        write_line_chart(output_svg, series_from_rows(rows), "queries", "mean test reward");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    std::cout << "wrote " << output_svg << '\n';
    return 0;
}

}  // namespace diss
