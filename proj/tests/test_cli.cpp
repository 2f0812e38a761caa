#include "cms/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cms;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<std::filesystem::path> scenario_files() {
    std::vector<std::filesystem::path> out;
    for (const auto& e : std::filesystem::directory_iterator(CMS_SCENARIO_DIR))
        if (e.path().extension() == ".json") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

const char* minimal = R"({
  "atoms": [{"id": "w", "prob": "1"}],
  "ground": {"points": ["x", "y"]},
  "measures": {"mu": {"w": {"x": "1/4", "y": "3/4"}}},
  "queries": [{"op": "eval-measure", "measure": "mu", "set": {"support": ["w"], "fibers": {"w": ["y"]}}}]
})";

std::string message_of(std::string_view text) {
    try {
        cli::parse_scenario(text);
    } catch (const cli::error& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(ParseScenario, Minimal) {
    const auto s = cli::parse_scenario(minimal);
    EXPECT_EQ(s.algebra.size(), 1u);
    EXPECT_EQ(s.ground.size(), 2u);
    const auto rep = cli::run_scenario(s);
    ASSERT_EQ(rep.results.size(), 1u);
    EXPECT_TRUE(rep.all_match());
    EXPECT_NE(cli::report_text(s, rep).find("3/4"), std::string::npos);
}

TEST(ParseScenario, RejectsWeightsNotSummingToOne) {
    std::string text = minimal;
    text.replace(text.find("\"1\""), 3, "\"9/10\"");
    EXPECT_EQ(message_of(text), "validation error: weights must sum to 1");
}

TEST(ParseScenario, ZeroDenominatorIsASyntaxErrorWithPosition) {
    std::string text = minimal;
    text.replace(text.find("\"1/4\""), 5, "\"1/0\"");
    const auto m = message_of(text);
    EXPECT_EQ(m.rfind("syntax error at line 4, column ", 0), 0u) << m;
    EXPECT_NE(m.find("zero denominator"), std::string::npos);
}

TEST(ParseScenario, MalformedJsonReportsLineAndColumn) {
    const auto m = message_of("{\n  \"atoms\": [\n}");
    EXPECT_EQ(m.rfind("syntax error at line 3", 0), 0u) << m;
}

TEST(ParseScenario, UnknownReferencesAndKeys) {
    std::string text = minimal;
    text.replace(text.find("[\"y\"]}}"), 5, "[\"z\"]");
    try {
        cli::run_scenario(cli::parse_scenario(text));
        FAIL();
    } catch (const cli::error& e) {
        EXPECT_NE(std::string(e.what()).find("unknown reference: point 'z'"), std::string::npos) << e.what();
        EXPECT_EQ(e.exit_code(), 2);
    }
    EXPECT_NE(message_of(R"({"atoms": [], "extra": 1})").find("unexpected top-level key"), std::string::npos);
}

TEST(Scenarios, PrintThenParseRoundTrips) {
    for (const auto& p : scenario_files()) {
        const auto s = cli::parse_scenario(slurp(p));
        const auto printed = cli::print_scenario(s);
        const auto back = cli::parse_scenario(printed);
        EXPECT_EQ(back, s) << p;
        EXPECT_EQ(cli::print_scenario(back), printed) << p;
    }
}

TEST(Scenarios, AllQueriesMatchTheOracleAndReportsAreDeterministic) {
    const auto files = scenario_files();
    EXPECT_EQ(files.size(), 5u);
    for (const auto& p : files) {
        const auto text = slurp(p);
        const auto s = cli::parse_scenario(text);
        const auto r1 = cli::run_scenario(s, text), r2 = cli::run_scenario(cli::parse_scenario(text), text);
        EXPECT_TRUE(r1.all_match()) << p;
        EXPECT_EQ(cli::report_text(s, r1), cli::report_text(s, r2)) << p;
        EXPECT_EQ(cli::report_json(s, r1), cli::report_json(s, r2)) << p;
    }
}

TEST(Verify, OutputIsDeterministicForAFixedSeed) {
    verify::VerifyOptions opt;
    opt.cases = 20;
    opt.seed = 7;
    const auto a = verify::run_verify(opt), b = verify::run_verify(opt);
    EXPECT_TRUE(a.ok());
    EXPECT_EQ(cli::verify_text(opt, a), cli::verify_text(opt, b));
    EXPECT_EQ(cli::verify_json(opt, a), cli::verify_json(opt, b));
}

TEST(Verify, EachFaultIsCaughtByItsSuite) {
    const std::vector<std::pair<const char*, const char*>> expect{
        {"complement", "lattice"}, {"union", "lattice"}, {"sigma", "pi-lambda"}, {"integral", "integral"}, {"rn", "product-rn"}};
    for (const auto& [fault, suite] : expect) {
        verify::VerifyOptions opt;
        opt.fault = *verify::parse_fault(fault);
        opt.suite = suite;
        const auto rep = verify::run_verify(opt);
        ASSERT_EQ(rep.results.size(), 1u);
        EXPECT_FALSE(rep.ok()) << fault;
        ASSERT_TRUE(rep.results.front().failure.has_value());
        EXPECT_NE(rep.results.front().failure->find("shrunk to"), std::string::npos) << fault;
    }
    EXPECT_FALSE(verify::parse_fault("nonsense").has_value());
}

TEST(Explain, KnowsEveryOperation) {
    for (const char* op : {"eval-measure", "integrate", "cond-expect", "rn-derivative", "fubini-check", "extend", "hahn",
                           "daniell-stone", "markov-product", "verify"})
        EXPECT_EQ(cli::explain(op).rfind(op, 0), 0u) << op;
    EXPECT_THROW(cli::explain("nope"), cli::error);
}
