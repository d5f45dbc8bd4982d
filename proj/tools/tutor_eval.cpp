// tutor-eval: reproduces the failure-rate, latency and cost measurements
// against a bank, using the mock gateway or a live endpoint.

#include "tutor/code_validation.hpp"
#include "tutor/eval.hpp"
#include "tutor/llm_gateway.hpp"
#include "tutor/profile.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

using namespace tutor;

namespace {

struct Common {
    std::string bank = "data/bank.json";
    std::string mock;
    std::string model;
    std::string format = "json";
    std::string out;
    int workers = 1;
};

void add_common(CLI::App& cmd, Common& c)
{
    cmd.add_option("--bank", c.bank, "exercise bank file")->check(CLI::ExistingFile);
    cmd.add_option("--mock", c.mock, "mock script; overrides LLM_MOCK_SCRIPT")->check(CLI::ExistingFile);
    cmd.add_option("--model", c.model, "model id; overrides LLM_MODEL");
    cmd.add_option("--format", c.format, "report format")->check(CLI::IsMember({"json", "csv"}));
    cmd.add_option("--out", c.out, "write the report here instead of stdout");
    cmd.add_option("--workers", c.workers, "concurrent records")->check(CLI::PositiveNumber);
}

std::shared_ptr<Gateway> gateway_for(const Common& c)
{
    auto config = GatewayConfig::from_env();
    if (!c.mock.empty()) {
        config.mock_script = c.mock;
    }
    if (!c.model.empty()) {
        config.model_id = c.model;
    }
    return make_gateway(config);
}

std::vector<NamedProfile> profiles_from(const std::string& csv)
{
    std::vector<NamedProfile> out;
    std::stringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) {
            out.push_back(named_profile(item));
        }
    }
    if (out.empty()) {
        throw Error("--profiles needs at least one profile");
    }
    return out;
}

void write(const Common& c, const std::string& content)
{
    if (c.out.empty()) {
        std::cout << content;
    } else {
        emit_report(content, c.out);
    }
}

void warn(const std::vector<RecordFailure>& failures)
{
    for (const auto& f : failures) {
        std::cerr << "warning: " << f.profile << " " << f.record_id << ": " << f.message << "\n";
    }
}

ReportFormat format_of(const Common& c)
{
    return c.format == "csv" ? ReportFormat::Csv : ReportFormat::Json;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Evaluation harness for the code tutor"};
    app.require_subcommand(1);

    Common fr_opts;
    std::string fr_profile = "improved";
    auto* fr = app.add_subcommand("failure-rate", "per-error-type failure rates of the judge");
    add_common(*fr, fr_opts);
    fr->add_option("--profile", fr_profile, "initial, improved or a profile file");

    Common lat_opts;
    std::string lat_profiles = "initial,improved";
    int lat_trials = 1;
    auto* lat = app.add_subcommand("latency", "review-pipeline latency per profile");
    add_common(*lat, lat_opts);
    lat->add_option("--profiles", lat_profiles, "comma-separated profiles");
    lat->add_option("--trials", lat_trials, "runs per record")->check(CLI::PositiveNumber);

    Common cost_opts;
    std::string cost_profiles = "initial,improved";
    std::string pricing = "data/pricing.json";
    int cost_trials = 1;
    auto* cost = app.add_subcommand("cost", "mean per-run cost per profile");
    add_common(*cost, cost_opts);
    cost->add_option("--profiles", cost_profiles, "comma-separated profiles; delta is first vs last");
    cost->add_option("--pricing", pricing, "pricing table")->check(CLI::ExistingFile);
    cost->add_option("--trials", cost_trials, "runs per record")->check(CLI::PositiveNumber);

    std::string show_name;
    auto* profile = app.add_subcommand("profile", "prompt profiles");
    profile->require_subcommand(1);
    auto* show = profile->add_subcommand("show", "print a profile as JSON");
    show->add_option("name", show_name, "initial, improved or a profile file")->required();

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "structural check of a Python file");
    validate->add_option("file", validate_path)->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*fr) {
            const auto gateway = gateway_for(fr_opts);
            HarnessOptions options;
            options.workers = fr_opts.workers;
            const auto run = evaluate_records(load_bank(fr_opts.bank), named_profile(fr_profile), *gateway, options);
            warn(run.failures);
            write(fr_opts, render_report(failure_rate(run.records), format_of(fr_opts)));
        } else if (*lat) {
            const auto gateway = gateway_for(lat_opts);
            HarnessOptions options;
            options.workers = lat_opts.workers;
            options.trials = lat_trials;
            const auto report = latency_bench(load_bank(lat_opts.bank), profiles_from(lat_profiles), *gateway, options);
            warn(report.failures);
            write(lat_opts, render_report(report, format_of(lat_opts)));
        } else if (*cost) {
            const auto gateway = gateway_for(cost_opts);
            HarnessOptions options;
            options.workers = cost_opts.workers;
            options.trials = cost_trials;
            const auto report = cost_bench(load_bank(cost_opts.bank), profiles_from(cost_profiles), *gateway,
                                           load_pricing(pricing), options);
            warn(report.failures);
            write(cost_opts, render_report(report, format_of(cost_opts)));
        } else if (*show) {
            std::cout << profile_to_json(resolve_profile(show_name)).dump(2) << "\n";
        } else if (*validate) {
            std::ifstream in(validate_path, std::ios::binary);
            std::stringstream buf;
            buf << in.rdbuf();
            const auto report = validate_source(buf.str());
            for (const auto& f : report.findings) {
                std::cout << validate_path << ":" << f.line << ": " << to_string(f.kind) << ": " << f.message << "\n";
            }
            return report.valid() ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
