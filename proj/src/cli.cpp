#include "nq/cli.hpp"

#include "nq/dynamics.hpp"
#include "nq/errors.hpp"
#include "nq/limit_enum.hpp"
#include "nq/observers.hpp"
#include "nq/scaling.hpp"
#include "nq/verify.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace nq
{
    namespace
    {
        using json = nlohmann::ordered_json;

        class UsageError : public std::invalid_argument
        {
        public:
            using std::invalid_argument::invalid_argument;
        };

        // Flags as given on the command line; unset means "not given".
        struct Flags
        {
            std::optional<std::string> config;
            std::optional<int> m;
            std::optional<std::string> neighborhood;
            std::optional<std::string> rule;
            std::optional<double> beta;
            std::optional<Count> steps;
            std::optional<int> replicas;
            std::optional<std::uint64_t> seed;
            std::optional<std::string> init;
            std::optional<Count> sample_every;
            std::optional<std::string> out;
            std::optional<std::string> report;
            std::optional<std::string> suite;
            std::optional<int> jobs;
        };

        std::optional<std::uint64_t> env_seed()
        {
            const char* raw = std::getenv("NQ_SEED");
            if (raw == nullptr || *raw == '\0')
            {
                return std::nullopt;
            }
            std::uint64_t value = 0;
            const std::string_view text(raw);
            const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
            if (ec != std::errc() || ptr != text.data() + text.size())
            {
                throw UsageError("NQ_SEED must be an unsigned integer, got '" + std::string(text) + "'");
            }
            return value;
        }

        json read_json_file(const std::string& path)
        {
            std::ifstream in(path);
            if (!in)
            {
                throw IoError("cannot open config file '" + path + "'");
            }
            try
            {
                return json::parse(in);
            }
            catch (const json::parse_error& e)
            {
                throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
            }
        }

        ExperimentConfig resolve(ExperimentConfig config, const Flags& flags)
        {
            bool seed_from_file = false;
            if (flags.config)
            {
                const auto file = read_json_file(*flags.config);
                seed_from_file = file.is_object() && file.contains("seed");
                apply_config_file(config, file);
            }
            if (flags.m)
            {
                config.m = *flags.m;
            }
            if (flags.neighborhood)
            {
                config.neighborhood = parse_neighborhood(*flags.neighborhood);
            }
            if (flags.rule)
            {
                config.rule = *flags.rule;
            }
            if (flags.beta)
            {
                config.beta = flags.beta;
            }
            if (flags.steps)
            {
                config.steps = *flags.steps;
            }
            if (flags.replicas)
            {
                config.replicas = *flags.replicas;
            }
            if (flags.seed)
            {
                config.seed = *flags.seed;
            }
            else if (!seed_from_file)
            {
                config.seed = env_seed().value_or(config.seed);
            }
            if (flags.init)
            {
                config.init = parse_init(*flags.init);
            }
            if (flags.sample_every)
            {
                config.sample_every = *flags.sample_every;
            }
            if (flags.out)
            {
                config.out = *flags.out;
            }
            if (flags.report)
            {
                config.report = *flags.report;
            }
            if (flags.suite)
            {
                config.suite = *flags.suite;
            }
            if (flags.jobs)
            {
                config.jobs = *flags.jobs;
            }
            if (config.steps < 0)
            {
                throw UsageError("--steps must be non-negative");
            }
            if (config.replicas < 0)
            {
                throw UsageError("--replicas must be non-negative");
            }
            if (config.jobs < 1)
            {
                throw UsageError("--jobs must be at least 1");
            }
            if (config.sample_every < 0)
            {
                throw UsageError("--sample-every must be non-negative");
            }
            return config;
        }

        void add_common(CLI::App& sub, Flags& f)
        {
            sub.add_option("--config", f.config, "JSON config file; flags override its keys");
            sub.add_option("--m", f.m, "number of sites");
            sub.add_option("--seed", f.seed, "RNG seed (falls back to NQ_SEED, then 0)");
            sub.add_option("--report", f.report, "write the JSON report here instead of stdout");
        }

        void add_run_options(CLI::App& sub, Flags& f)
        {
            sub.add_option("--steps", f.steps, "number of allocations");
            sub.add_option("--replicas", f.replicas, "independent chains");
            sub.add_option("--jobs", f.jobs, "chains run concurrently");
        }

        void write_text(const std::string& path, const std::string& text, std::ostream& fallback)
        {
            if (path.empty() || path == "-")
            {
                fallback << text;
                return;
            }
            std::ofstream file(path, std::ios::binary);
            if (!file)
            {
                throw IoError("cannot open '" + path + "' for writing");
            }
            file << text;
            file.flush();
            if (!file)
            {
                throw IoError("write to '" + path + "' failed");
            }
        }

        void write_report(const ExperimentConfig& config, const json& report, std::ostream& out)
        {
            write_text(config.report, report.dump(2) + "\n", out);
        }

        json vector_json(std::span<const Count> values) { return json(std::vector<Count>(values.begin(), values.end())); }

        int cmd_simulate(const ExperimentConfig& config, std::ostream& out)
        {
            const Ring ring(config.m, config.neighborhood);
            const auto rule = parse_rule(config.rule, config.beta);
            const Occupancy initial = config.init ? Occupancy(*config.init) : Occupancy::empty(config.m);
            if (initial.size() != config.m)
            {
                throw UsageError("--init has " + std::to_string(initial.size()) + " counts but --m is " +
                                 std::to_string(config.m));
            }

            std::ofstream trajectory;
            std::optional<JsonLinesSink> lines;
            if (!config.out.empty())
            {
                trajectory.open(config.out, std::ios::binary);
                if (!trajectory)
                {
                    throw IoError("cannot open '" + config.out + "' for writing");
                }
                lines.emplace(trajectory);
            }
            const TrajectorySink sink = [&](const TrajectoryRecord& record) {
                if (lines)
                {
                    lines->write(record);
                }
            };

            LevelObserver levels;
            Observer* observers[] = {&levels};
            RandomStream rng(config.seed, 0);
            const RunOptions options{.steps = config.steps,
                                     .sample_every = config.sample_every,
                                     .record_initial = true,
                                     .record_levels = true,
                                     .check_consistency = false};
            const auto result = run(ChainState(ring, initial), rule, rng, observers, options, sink);
            if (lines)
            {
                trajectory.flush();
                if (!trajectory)
                {
                    throw IoError("write to '" + config.out + "' failed");
                }
            }

            const auto& state = result.final_state;
            std::vector<Count> v(state.u().begin(), state.u().end());
            for (auto& x : v)
            {
                x -= state.min_u();
            }
            std::vector<double> fractions;
            for (Count x : state.xi())
            {
                fractions.push_back(state.total() > 0 ? static_cast<double>(x) / static_cast<double>(state.total()) : 0.0);
            }

            std::vector<LimitConfiguration> limits;
            if (config.neighborhood == Neighborhood::Symmetric)
            {
                limits = enumerate_limits(config.m);
            }
            const auto verdict = detect_convergence(levels.log(), state.xi(), config.neighborhood, limits);

            json report;
            report["command"] = "simulate";
            report["config"] = to_json(config);
            report["rng"] = std::string(RandomStream::algorithm);
            report["final"] = {{"t", state.t()},
                               {"total", state.total()},
                               {"xi", vector_json(state.xi())},
                               {"u", vector_json(state.u())},
                               {"v", v},
                               {"m", state.min_u()}};
            report["fractions"] = fractions;
            report["levels"] = levels.log().size();
            if (verdict)
            {
                report["convergence"] = to_json(*verdict, limits);
            }
            else
            {
                report["convergence"] = {{"status", "pending"}};
            }
            report["trajectory"] = config.out.empty() ? json() : json(config.out);
            write_report(config, report, out);
            return kExitOk;
        }

        struct EnumerateFlags
        {
            std::string format = "table";
            bool from_empty = false;
            bool up_to_rotation = false;
            bool counts = false;
        };

        int cmd_enumerate(const ExperimentConfig& config, const EnumerateFlags& f, std::ostream& out)
        {
            if (config.m < 4)
            {
                throw UsageError("enumerate needs --m >= 4");
            }
            const auto all = enumerate_limits(config.m);
            if (f.counts)
            {
                const auto c = count_limits(all);
                json report;
                report["m"] = config.m;
                report["distinct_unstarred"] = c.distinct_unstarred;
                report["distinct_total"] = c.distinct_total;
                report["all_unstarred"] = c.all_unstarred;
                report["all_total"] = c.all_total;
                write_report(config, report, out);
                return kExitOk;
            }

            std::vector<LimitConfiguration> chosen;
            std::copy_if(all.begin(), all.end(), std::back_inserter(chosen),
                         [&](const auto& c) { return !f.from_empty || c.achievable_from_empty; });
            std::string text;
            if (f.format == "table")
            {
                text = limits_table(config.m, chosen);
            }
            else if (f.up_to_rotation)
            {
                const auto classes = rotation_classes(chosen);
                text = f.format == "json" ? classes_to_json(classes) : classes_to_csv(classes);
            }
            else
            {
                text = f.format == "json" ? limits_to_json(chosen) : limits_to_csv(chosen);
            }
            if (!text.empty() && text.back() != '\n')
            {
                text += '\n';
            }
            write_text(config.report, text, out);
            return kExitOk;
        }

        int cmd_verify(const ExperimentConfig& config, std::ostream& out)
        {
            VerifyConfig vc;
            vc.suite = parse_suite(config.suite);
            vc.sites = config.m;
            vc.kind = config.neighborhood;
            vc.steps = config.steps;
            vc.replicas = config.replicas;
            vc.seed = config.seed;
            vc.jobs = config.jobs;
            const auto result = run_suite(vc);
            json report = result.json;
            report["resolved_config"] = to_json(config);
            write_report(config, report, out);
            return result.passed ? kExitOk : kExitViolation;
        }

        int cmd_scaling(const ExperimentConfig& config, std::ostream& out, std::ostream& err)
        {
            if (config.neighborhood != Neighborhood::Asymmetric)
            {
                throw UsageError("scaling needs --neighborhood asym");
            }
            if (config.m % 2 != 0)
            {
                throw UsageError("scaling needs an even --m: for odd M the fluctuation term Z(t) is identically 0, "
                                 "so there is no Brownian component to estimate");
            }
            if (config.replicas < 2)
            {
                throw UsageError("scaling needs at least 2 replicas");
            }
            if (config.steps < 1)
            {
                throw UsageError("scaling needs --steps >= 1");
            }
            SigmaConfig sc;
            sc.sites = config.m;
            sc.replicas = config.replicas;
            sc.checkpoints = default_checkpoints(config.steps);
            sc.seed = config.seed;
            sc.jobs = config.jobs;
            const auto estimate = estimate_sigma(sc);
            for (const auto& w : estimate.warnings)
            {
                err << "warning: " << w << '\n';
            }
            json report = to_json(estimate);
            report["config"] = to_json(config);
            report["rng"] = std::string(RandomStream::algorithm);
            write_report(config, report, out);
            return kExitOk;
        }
    } // namespace

    nlohmann::ordered_json to_json(const ExperimentConfig& c)
    {
        json j;
        j["m"] = c.m;
        j["neighborhood"] = std::string(to_string(c.neighborhood));
        j["rule"] = c.rule;
        j["beta"] = c.beta ? json(*c.beta) : json();
        j["steps"] = c.steps;
        j["replicas"] = c.replicas;
        j["seed"] = c.seed;
        j["init"] = c.init ? json(*c.init) : json("empty");
        j["sample_every"] = c.sample_every;
        j["out"] = c.out.empty() ? json() : json(c.out);
        j["report"] = c.report.empty() ? json() : json(c.report);
        j["suite"] = c.suite.empty() ? json() : json(c.suite);
        j["jobs"] = c.jobs;
        return j;
    }

    void apply_config_file(ExperimentConfig& config, const nlohmann::ordered_json& file)
    {
        if (!file.is_object())
        {
            throw std::invalid_argument("config file must hold a JSON object");
        }
        try
        {
            for (const auto& [key, value] : file.items())
            {
                if (key == "m")
                {
                    config.m = value.get<int>();
                }
                else if (key == "neighborhood")
                {
                    config.neighborhood = parse_neighborhood(value.get<std::string>());
                }
                else if (key == "rule")
                {
                    config.rule = value.get<std::string>();
                }
                else if (key == "beta")
                {
                    config.beta = value.is_null() ? std::nullopt : std::optional<double>(value.get<double>());
                }
                else if (key == "steps")
                {
                    config.steps = value.get<Count>();
                }
                else if (key == "replicas")
                {
                    config.replicas = value.get<int>();
                }
                else if (key == "seed")
                {
                    config.seed = value.get<std::uint64_t>();
                }
                else if (key == "init")
                {
                    config.init = value.is_string() ? parse_init(value.get<std::string>())
                                                    : std::optional(value.get<std::vector<Count>>());
                }
                else if (key == "sample_every")
                {
                    config.sample_every = value.get<Count>();
                }
                else if (key == "out")
                {
                    config.out = value.get<std::string>();
                }
                else if (key == "report")
                {
                    config.report = value.get<std::string>();
                }
                else if (key == "suite")
                {
                    config.suite = value.get<std::string>();
                }
                else if (key == "jobs")
                {
                    config.jobs = value.get<int>();
                }
                else
                {
                    throw std::invalid_argument("unknown config key '" + key + "'");
                }
            }
        }
        catch (const nlohmann::ordered_json::type_error& e)
        {
            throw std::invalid_argument(std::string("config file has a value of the wrong type: ") + e.what());
        }
    }

    std::optional<std::vector<Count>> parse_init(const std::string& text)
    {
        if (text == "empty")
        {
            return std::nullopt;
        }
        std::vector<Count> counts;
        std::stringstream in(text);
        std::string item;
        while (std::getline(in, item, ','))
        {
            Count value = 0;
            const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
            if (ec != std::errc() || ptr != item.data() + item.size() || value < 0)
            {
                throw std::invalid_argument("--init expects 'empty' or comma-separated non-negative counts, got '" +
                                            text + "'");
            }
            counts.push_back(value);
        }
        if (counts.empty())
        {
            throw std::invalid_argument("--init has no counts");
        }
        return counts;
    }

    int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
    {
        CLI::App app{"Neighbour-coupled allocation chains on a ring: simulation, enumeration, verification", "nqsim"};
        app.require_subcommand(1);

        Flags sim_flags;
        auto* simulate = app.add_subcommand("simulate", "run one chain and summarise it");
        add_common(*simulate, sim_flags);
        simulate->add_option("--neighborhood", sim_flags.neighborhood, "asym or sym");
        simulate->add_option("--rule", sim_flags.rule, "min, softmax or max");
        simulate->add_option("--beta", sim_flags.beta, "softmax parameter");
        simulate->add_option("--steps", sim_flags.steps, "number of allocations");
        simulate->add_option("--init", sim_flags.init, "'empty' or comma-separated counts");
        simulate->add_option("--sample-every", sim_flags.sample_every, "trajectory stride (level openings always kept)");
        simulate->add_option("--out", sim_flags.out, "JSON-lines trajectory path");

        Flags enum_flags;
        EnumerateFlags enum_opts;
        auto* enumerate = app.add_subcommand("enumerate", "list limiting configurations for the symmetric ring");
        add_common(*enumerate, enum_flags);
        enumerate->add_option("--format", enum_opts.format, "json, csv or table")
            ->check(CLI::IsMember({"json", "csv", "table"}));
        enumerate->add_flag("--from-empty", enum_opts.from_empty, "only configurations reachable from empty");
        enumerate->add_flag("--up-to-rotation", enum_opts.up_to_rotation, "one row per rotation class");
        enumerate->add_flag("--counts", enum_opts.counts, "print the four summary counts");

        Flags verify_flags;
        auto* verify = app.add_subcommand("verify", "run an invariant battery");
        add_common(*verify, verify_flags);
        add_run_options(*verify, verify_flags);
        verify->add_option("--suite", verify_flags.suite, "asym-odd, asym-even, sym, appendix or algebra");
        verify->add_option("--neighborhood", verify_flags.neighborhood, "asym or sym (appendix suite)");

        Flags scaling_flags;
        auto* scaling = app.add_subcommand("scaling", "estimate the diffusion constant of the parity gap");
        add_common(*scaling, scaling_flags);
        add_run_options(*scaling, scaling_flags);

        std::vector<std::string> reversed(args.rbegin(), args.rend());
        try
        {
            app.parse(reversed);
        }
        catch (const CLI::ParseError& e)
        {
            const int code = app.exit(e, out, err);
            return code == 0 ? kExitOk : kExitUsage;
        }

        try
        {
            if (simulate->parsed())
            {
                return cmd_simulate(resolve(ExperimentConfig{}, sim_flags), out);
            }
            if (enumerate->parsed())
            {
                ExperimentConfig base;
                base.m = 4;
                return cmd_enumerate(resolve(base, enum_flags), enum_opts, out);
            }
            if (verify->parsed())
            {
                ExperimentConfig base;
                base.suite = "sym";
                if (resolve(base, verify_flags).suite == "appendix")
                {
                    base.steps = 10000;
                }
                const auto config = resolve(base, verify_flags);
                return cmd_verify(config, out);
            }
            ExperimentConfig base;
            base.neighborhood = Neighborhood::Asymmetric;
            base.m = 4;
            base.replicas = 1000;
            base.steps = 65536;
            return cmd_scaling(resolve(base, scaling_flags), out, err);
        }
        catch (const IoError& e)
        {
            err << "error: " << e.what() << '\n';
            return kExitIo;
        }
        catch (const std::invalid_argument& e)
        {
            err << "error: " << e.what() << '\n';
            return kExitUsage;
        }
        catch (const std::out_of_range& e)
        {
            err << "error: " << e.what() << '\n';
            return kExitUsage;
        }
        catch (const std::logic_error& e)
        {
            err << "invariant violation: " << e.what() << '\n';
            return kExitViolation;
        }
        catch (const std::exception& e)
        {
            err << "error: " << e.what() << '\n';
            return kExitViolation;
        }
    }
} // namespace nq
