#include "cms/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace {

std::uint64_t default_seed() {
    if (const char* s = std::getenv("CMS_SEED")) {
        try {
            return std::stoull(s);
        } catch (const std::exception&) {
            throw cms::cli::error(cms::cli::error::Kind::usage, std::string("CMS_SEED is not a number: ") + s);
        }
    }
    return 42;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw cms::cli::error(cms::cli::error::Kind::usage, "cannot read '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run(const std::string& path, const std::string& format) {
    const std::string text = slurp(path);
    const auto s = cms::cli::parse_scenario(text);
    const auto rep = cms::cli::run_scenario(s, text);
    std::cout << (format == "json" ? cms::cli::report_json(s, rep) : cms::cli::report_text(s, rep));
    return rep.all_match() ? 0 : 3;
}

int verify(std::uint64_t seed, std::size_t cases, const std::string& suite, const std::string& fault, const std::string& format) {
    cms::verify::VerifyOptions opt;
    opt.seed = seed;
    opt.cases = cases;
    opt.suite = suite;
    const auto f = cms::verify::parse_fault(fault);
    if (!f) throw cms::cli::error(cms::cli::error::Kind::usage, "unknown fault '" + fault + "'");
    opt.fault = *f;
    if (!suite.empty() && !cms::verify::find_suite(suite))
        throw cms::cli::error(cms::cli::error::Kind::usage, "unknown suite '" + suite + "'");
    const auto rep = cms::verify::run_verify(opt);
    std::cout << (format == "json" ? cms::cli::verify_json(opt, rep) : cms::cli::verify_text(opt, rep));
    return rep.ok() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact conditional measure theory over finite measure algebras"};
    app.require_subcommand(1);

    std::string file, format = "text", suite, fault = "none", op;
    std::uint64_t seed = 0;
    std::size_t cases = 100;

    auto* run_cmd = app.add_subcommand("run", "run the queries of a scenario file");
    run_cmd->add_option("file", file, "scenario JSON")->required();
    run_cmd->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));

    auto* verify_cmd = app.add_subcommand("verify", "run the randomized property suites");
    auto* seed_opt = verify_cmd->add_option("--seed", seed, "seed (default: CMS_SEED or 42)");
    verify_cmd->add_option("--cases", cases, "cases per suite")->check(CLI::PositiveNumber);
    verify_cmd->add_option("--suite", suite, "run one suite only");
    verify_cmd->add_option("--fault", fault, "inject a documented fault (see 'cms explain verify')");
    verify_cmd->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));

    auto* explain_cmd = app.add_subcommand("explain", "describe a query operation");
    explain_cmd->add_option("op", op, "operation name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*run_cmd) return run(file, format);
        if (*verify_cmd) return verify(seed_opt->count() ? seed : default_seed(), cases, suite, fault, format);
        std::cout << cms::cli::explain(op);
        return 0;
    } catch (const cms::cli::error& e) {
        std::cerr << "cms: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "cms: validation error: " << e.what() << "\n";
        return 2;
    }
}
