#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "palacs/cli.hpp"

using namespace palacs;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::size_t count(const std::string& haystack, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
    return n;
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "palacs");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("palacs_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string config(const std::string& name, const cli::json& j) const {
        const auto p = dir_ / name;
        std::ofstream(p) << j.dump(2);
        return p.string();
    }

    cli::json minimal(const std::string& out, std::vector<std::string> strategies = {"pal-acs", "random"}) const {
        return {{"dataset", {{"synthetic", "3clusters"}, {"seed", 0}, {"instances_per_class", 120}}},
                {"strategies", strategies},
                {"trials", 10},
                {"out", (dir_ / out).string()}};
    }

    fs::path dir_;
};

ExperimentReport hand_report() {
    auto rec = [](std::string s, int t, std::vector<double> e, std::vector<ClassIndex> c) {
        return TrialRecord{std::move(s), "fixture", t, std::move(e), std::move(c)};
    };
    const std::vector<TrialRecord> recs{
        rec("A", 0, {0.5, 0.25, 0.25, 0.125}, {0, 1, 1, 0}), rec("B", 0, {0.5, 0.5, 0.25, 0.25}, {1, 1, 1, 1}),
        rec("A", 1, {0.75, 0.5, 0.25, 0.25}, {0, 0, 1, 1}), rec("B", 1, {0.5, 0.5, 0.25, 0.25}, {0, 1, 0, 1})};
    return aggregate(recs, 2);
}

}  // namespace

TEST(Config, DefaultsAreTheReferenceValues) {
    const auto c = cli::parse_config({{"dataset", {{"synthetic", "spirals"}}}, {"strategies", {"pal-acs"}}});
    EXPECT_EQ(c.trials, 500);
    EXPECT_FALSE(c.budget.has_value());
    EXPECT_EQ(c.sigma, 0.05);
    EXPECT_EQ(c.pseudo_per_class, 25);
    EXPECT_EQ(c.local_budget_max, 3);
    EXPECT_EQ(c.folds, 3);
    const auto ds = generate_synthetic("spirals", 200, 0);
    const auto plan = cli::make_plan(c, ds);
    EXPECT_EQ(plan.budget, 120);
    EXPECT_EQ(plan.strategies[0].chunk.chunk_size, 6);
}

TEST(Config, ErrorsNameTheKey) {
    const auto key_of = [](const cli::json& j) {
        try {
            auto c = cli::parse_config(j);
            cli::validate(c);
        } catch (const ConfigError& e) {
            return e.key();
        }
        return std::string("<none>");
    };
    const cli::json base = {{"dataset", {{"synthetic", "bars"}}}, {"strategies", {"random"}}};
    auto j = base;
    j["trails"] = 5;
    EXPECT_EQ(key_of(j), "trails");
    j = base;
    j["sigma"] = -1.0;
    EXPECT_EQ(key_of(j), "sigma");
    j = base;
    j["strategies"] = {"random", {{"name", "inverse"}, {"folds", 1}}};
    EXPECT_EQ(key_of(j), "strategies[1].folds");
    j = base;
    j["dataset"]["path"] = "x.csv";
    EXPECT_EQ(key_of(j), "dataset");
    j = base;
    j["workers"] = "two";
    EXPECT_EQ(key_of(j), "workers");
    j = base;
    j["strategies"] = {"random", "random"};
    EXPECT_EQ(key_of(j), "strategies[1]");
    EXPECT_EQ(key_of(base), "<none>");
}

TEST(Config, ChunkSizeBelowClassCountRejected) {
    auto c = cli::parse_config({{"dataset", {{"synthetic", "bars"}}}, {"strategies", {"inverse"}}, {"chunk_size", 2}});
    try {
        cli::make_plan(c, generate_synthetic("bars", 120, 0));
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key(), "chunk_size");
    }
}

TEST_F(CliTest, MinimalRunWritesBundle) {
    const auto r = invoke({"run", config("c.json", minimal("out"))});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* f : {"learning_curves.csv", "phase_table.csv", "sampling_proportions.csv", "run_manifest.json"})
        EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;
    EXPECT_FALSE(fs::exists(dir_ / "out" / "learning_curves.svg"));
    const auto curve = lines(slurp(dir_ / "out" / "learning_curves.csv"));
    ASSERT_EQ(curve.size(), 1u + 2u * 60u);
    EXPECT_EQ(curve[0], io::kLearningCurvesHeader);
    std::size_t pal = 0, rnd = 0;
    for (const auto& l : curve) {
        pal += l.rfind("3clusters,pal-acs,", 0) == 0;
        rnd += l.rfind("3clusters,random,", 0) == 0;
    }
    EXPECT_EQ(pal, 60u);
    EXPECT_EQ(rnd, 60u);
    EXPECT_NE(r.out.find("pal-acs"), std::string::npos);
}

TEST_F(CliTest, UnknownStrategyExitsTwo) {
    const auto r = invoke({"run", config("c.json", minimal("out", {"pal-acs", "foo"}))});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("foo"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir_ / "out"));
}

TEST_F(CliTest, ZeroTrialsExitsTwo) {
    auto j = minimal("out");
    j["trials"] = 0;
    const auto r = invoke({"run", config("c.json", j)});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("trials"), std::string::npos);
}

TEST_F(CliTest, UsageAndConfigFileProblemsExitTwo) {
    EXPECT_EQ(invoke({}).code, 2);
    EXPECT_EQ(invoke({"run"}).code, 2);
    EXPECT_EQ(invoke({"frobnicate"}).code, 2);
    EXPECT_EQ(invoke({"run", (dir_ / "missing.json").string()}).code, 2);
    const auto bad = dir_ / "bad.json";
    std::ofstream(bad) << "{ not json";
    EXPECT_EQ(invoke({"run", bad.string()}).code, 2);
    EXPECT_EQ(invoke({"run", config("c.json", minimal("out")), "--trials", "zero"}).code, 2);
}

TEST_F(CliTest, DatasetProblemsExitThree) {
    cli::json j = minimal("out");
    j["dataset"] = {{"path", (dir_ / "absent.csv").string()}};
    EXPECT_EQ(invoke({"run", config("c.json", j)}).code, 3);
    j = minimal("out");
    j["budget"] = 71;  // 120 per class leaves 70 for acquisition
    EXPECT_EQ(invoke({"run", config("c.json", j)}).code, 3);
}

TEST_F(CliTest, FlagsOverrideConfig) {
    const auto r = invoke({"run", config("c.json", minimal("ignored")), "--trials", "2", "--budget", "8", "--seed", "5",
                        "--workers", "2", "--out", (dir_ / "flagged").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_FALSE(fs::exists(dir_ / "ignored"));
    const auto m = cli::json::parse(slurp(dir_ / "flagged" / "run_manifest.json"));
    EXPECT_EQ(m["trials"], 2);
    EXPECT_EQ(m["budget"], 8);
    EXPECT_EQ(m["seed"], 5);
    EXPECT_EQ(m["workers"], 2);
    EXPECT_EQ(lines(slurp(dir_ / "flagged" / "learning_curves.csv")).size(), 1u + 2u * 8u);
}

TEST_F(CliTest, ManifestRoundTripReproducesOutputs) {
    auto j = minimal("first");
    j["trials"] = 3;
    j["strategies"] = {"pal-acs", {{"name", "inverse"}, {"chunk_size", 9}}, "redistricting"};
    ASSERT_EQ(invoke({"run", config("c.json", j)}).code, 0);
    const auto manifest = (dir_ / "first" / "run_manifest.json").string();
    const auto r = invoke({"run", manifest, "--out", (dir_ / "second").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* f : {"learning_curves.csv", "phase_table.csv", "sampling_proportions.csv", "records.csv"})
        EXPECT_EQ(slurp(dir_ / "first" / f), slurp(dir_ / "second" / f)) << f;
    const auto m = cli::json::parse(slurp(manifest));
    EXPECT_EQ(m["strategies"][1]["chunk_size"], 9);
    EXPECT_EQ(m["strategies"][2]["chunk_size"], 6);
    EXPECT_EQ(m["provenance"]["num_classes"], 3);
}

TEST_F(CliTest, ReportPrintsMarkedTable) {
    ASSERT_EQ(invoke({"run", config("c.json", minimal("out"))}).code, 0);
    const auto r = invoke({"report", (dir_ / "out").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto text = lines(r.out);
    std::size_t rows = 0;
    for (const auto& l : text) {
        if (l.rfind("pal-acs ", 0) == 0 || l.rfind("random ", 0) == 0) ++rows;
    }
    EXPECT_EQ(rows, 4u);  // phase table plus sampling table
    EXPECT_NE(r.out.find("phase 4"), std::string::npos);
    EXPECT_GE(count(r.out, "*"), 4u);
    EXPECT_NE(r.out.find("final sampling proportions"), std::string::npos);
}

TEST_F(CliTest, ReportOnEmptyDirectoryFails) {
    fs::create_directories(dir_ / "empty");
    const auto r = invoke({"report", (dir_ / "empty").string()});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("run_manifest.json"), std::string::npos);
    EXPECT_EQ(invoke({"report", (dir_ / "nowhere").string()}).code, 3);
    EXPECT_EQ(invoke({"plot", (dir_ / "empty").string()}).code, 3);
}

TEST_F(CliTest, ReportRejectsCorruptRecords) {
    ASSERT_EQ(invoke({"run", config("c.json", minimal("out", {"random"}))}).code, 0);
    std::ofstream(dir_ / "out" / "records.csv", std::ios::app) << "3clusters,random,0,61,9,0.5\n";
    EXPECT_EQ(invoke({"report", (dir_ / "out").string()}).code, 3);
}

TEST_F(CliTest, SingleStrategyWinsEverything) {
    ASSERT_EQ(invoke({"run", config("c.json", minimal("out", {"random"}))}).code, 0);
    const auto r = invoke({"report", (dir_ / "out").string()});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(count(r.out, "100.00%"), 4u);
}

TEST_F(CliTest, PlotIsStructuredAndDeterministic) {
    auto j = minimal("out");
    j["dataset"]["synthetic"] = "bars";
    j["dataset"]["instances_per_class"] = 200;
    j["trials"] = 2;
    ASSERT_EQ(invoke({"run", config("c.json", j)}).code, 0);
    ASSERT_EQ(invoke({"plot", (dir_ / "out").string()}).code, 0);
    const auto svg = slurp(dir_ / "out" / "learning_curves.svg");
    EXPECT_EQ(count(svg, "<polyline class=\"mean\""), 2u);
    EXPECT_EQ(count(svg, "<polygon class=\"band\""), 2u);
    EXPECT_NE(svg.find("class=\"xtick\""), std::string::npos);

    std::regex tick("class=\"xtick\"[^>]*>(\\d+)<");
    std::vector<int> ticks;
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), tick); it != std::sregex_iterator(); ++it)
        ticks.push_back(std::stoi((*it)[1]));
    ASSERT_FALSE(ticks.empty());
    EXPECT_EQ(ticks.front(), 1);
    EXPECT_EQ(ticks.back(), 120);

    ASSERT_EQ(invoke({"plot", (dir_ / "out").string()}).code, 0);
    EXPECT_EQ(slurp(dir_ / "out" / "learning_curves.svg"), svg);
    EXPECT_EQ(io::render_svg(hand_report()), io::render_svg(hand_report()));
}

TEST_F(CliTest, PlotFlagInConfigWritesSvg) {
    auto j = minimal("out", {"random"});
    j["plot"] = true;
    j["trials"] = 2;
    ASSERT_EQ(invoke({"run", config("c.json", j)}).code, 0);
    EXPECT_TRUE(fs::exists(dir_ / "out" / "learning_curves.svg"));
}

TEST(Golden, CsvSchemas) {
    const fs::path golden = PALACS_GOLDEN_DIR;
    const auto rep = hand_report();
    std::ostringstream curves, phases, sampling;
    io::write_learning_curves(curves, rep);
    io::write_phase_table(phases, rep);
    io::write_sampling_proportions(sampling, rep, {"neg", "pos"});
    EXPECT_EQ(curves.str(), slurp(golden / "learning_curves.csv"));
    EXPECT_EQ(phases.str(), slurp(golden / "phase_table.csv"));
    EXPECT_EQ(sampling.str(), slurp(golden / "sampling_proportions.csv"));
    EXPECT_EQ(io::render_tables(rep), slurp(golden / "report.txt"));
}

TEST(Golden, RecordsRoundTrip) {
    const std::vector<TrialRecord> recs{TrialRecord{"A", "fixture", 0, {0.5, 0.25}, {0, 1}},
                                        TrialRecord{"B", "fixture", 0, {0.125, 1.0}, {1, 1}},
                                        TrialRecord{"A", "fixture", 1, {0.0, 0.1}, {2, 0}}};
    std::stringstream s;
    io::write_records(s, recs);
    EXPECT_EQ(lines(s.str())[0], io::kRecordsHeader);
    EXPECT_EQ(lines(s.str())[1], "fixture,A,0,1,1,0.5");
    EXPECT_EQ(io::read_records(s), recs);
}
