#include <gtest/gtest.h>

#include "json.hpp"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "support.hpp"

#ifndef PERPL_CLI_PATH
#define PERPL_CLI_PATH "perplc"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run perplc(const std::string &args, bool merge_stderr = false) {
    std::string cmd = std::string(PERPL_CLI_PATH) + " " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
    Run r;
    FILE *pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf;
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string temp_program(const std::string &name, const std::string &source) {
    auto dir = fs::temp_directory_path() / "perpl_cli_test";
    fs::create_directories(dir);
    auto path = dir / name;
    std::ofstream(path) << source;
    return path.string();
}

std::string corpus(const std::string &name) { return perpl::test::corpus_path(name); }

// Tiny structural checker: every key must be present with the given JSON type.
void expect_shape(const json &j, const std::vector<std::pair<std::string, json::value_t>> &fields) {
    for (auto &[key, type] : fields) {
        ASSERT_TRUE(j.contains(key)) << key << " missing in " << j.dump();
        auto t = j[key].type();
        if (type == json::value_t::number_float)
            EXPECT_TRUE(j[key].is_number()) << key;
        else
            EXPECT_EQ(t, type) << key;
    }
}

const std::string kLinear = "define twice = \\f: Bool -> Bool. (f true, f false)\n\ntwice (\\x: Bool. x)\n";

}  // namespace

TEST(Cli, SolveCoin) {
    auto r = perplc("solve " + corpus("coin"));
    ASSERT_EQ(r.code, 0);
    auto j = json::parse(r.out);
    ASSERT_EQ(j["support"].size(), 2u);
    for (auto &e : j["support"]) expect_shape(e, {{"value", json::value_t::string}, {"weight", json::value_t::number_float}});
    EXPECT_EQ(j["support"][0]["value"], "true");
    EXPECT_NEAR(j["support"][0]["weight"].get<double>(), 0.3, 1e-12);
}

TEST(Cli, SolveJsonCarriesReport) {
    auto r = perplc("solve --json " + corpus("pcfg_unit"));
    ASSERT_EQ(r.code, 0);
    auto j = json::parse(r.out);
    expect_shape(j, {{"support", json::value_t::array}, {"report", json::value_t::object}});
    auto &rep = j["report"];
    expect_shape(rep, {{"sccs", json::value_t::array},
                       {"converged", json::value_t::boolean},
                       {"newton_iterations", json::value_t::number_unsigned}});
    bool nonlinear = false;
    for (auto &s : rep["sccs"]) {
        expect_shape(s, {{"size", json::value_t::number_unsigned},
                         {"class", json::value_t::string},
                         {"iterations", json::value_t::number_unsigned},
                         {"residual", json::value_t::number_float}});
        nonlinear |= s["class"] == "nonlinear";
    }
    EXPECT_TRUE(nonlinear);
}

TEST(Cli, SolveExactAddsRationals) {
    auto r = perplc("solve --exact " + corpus("fair_loop"));
    ASSERT_EQ(r.code, 0);
    auto j = json::parse(r.out);
    for (auto &e : j["support"]) EXPECT_EQ(e["exact"], "1/2");
}

TEST(Cli, CheckJson) {
    auto r = perplc("check --json " + corpus("coin"));
    ASSERT_EQ(r.code, 0);
    auto j = json::parse(r.out);
    EXPECT_EQ(j["ok"], true);
    EXPECT_EQ(j["globals"]["flip"], "Bool");
    EXPECT_EQ(j["main"], "Bool");
}

TEST(Cli, LinearityErrorExitsOne) {
    auto file = temp_program("twice.ppl", kLinear);
    auto r = perplc("check --json " + file);
    EXPECT_EQ(r.code, 1);
    auto j = json::parse(r.out);
    EXPECT_EQ(j["ok"], false);
    ASSERT_EQ(j["diagnostics"].size(), 1u);
    auto &d = j["diagnostics"][0];
    expect_shape(d, {{"file", json::value_t::string},
                     {"line", json::value_t::number_unsigned},
                     {"col", json::value_t::number_unsigned},
                     {"stage", json::value_t::string},
                     {"message", json::value_t::string}});
    EXPECT_EQ(d["line"], 1);
    EXPECT_EQ(d["stage"], "typecheck");
    EXPECT_NE(d["message"].get<std::string>().find("'f'"), std::string::npos);

    auto plain = perplc("check " + file, true);
    EXPECT_EQ(plain.code, 1);
    EXPECT_NE(plain.out.find("twice.ppl:1:"), std::string::npos) << plain.out;
}

TEST(Cli, ParseErrorExitsOne) {
    auto r = perplc("check --json " + temp_program("bad.ppl", "define = 3\n"));
    EXPECT_EQ(r.code, 1);
    auto j = json::parse(r.out);
    EXPECT_EQ(j["diagnostics"][0]["stage"], "parse");
    EXPECT_EQ(j["diagnostics"][0]["col"], 8);
}

TEST(Cli, StuckEliminationExitsTwo) {
    auto src = perpl::test::corpus_source("cfg_parse");
    src = src.substr(0, src.rfind("equal (gen")) + "equal (gen S Nil) (gen S Nil)\n";
    auto r = perplc("solve " + temp_program("stuck.ppl", src), true);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("digraph"), std::string::npos) << r.out;
}

TEST(Cli, BudgetExitsThree) {
    auto r = perplc("solve --max-vars 10 " + corpus("pda"), true);
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.out.find("budget"), std::string::npos) << r.out;
}

TEST(Cli, TransformPrintsSequence) {
    auto r = perplc("transform " + corpus("pda"));
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("sequence: String:D, Stack:R"), std::string::npos) << r.out;
}

TEST(Cli, MspeJson) {
    auto r = perplc("mspe --json " + corpus("coin"));
    ASSERT_EQ(r.code, 0);
    auto j = json::parse(r.out);
    expect_shape(j, {{"vars", json::value_t::array}, {"eqs", json::value_t::array}, {"roots", json::value_t::array}});
    for (auto &eq : j["eqs"]) {
        expect_shape(eq, {{"lhs", json::value_t::number_unsigned}, {"monomials", json::value_t::array}});
        for (auto &m : eq["monomials"]) expect_shape(m, {{"coef", json::value_t::string}, {"vars", json::value_t::array}});
    }
}

TEST(Cli, Oracle) {
    auto r = perplc("oracle --steps 4 " + corpus("coin"));
    ASSERT_EQ(r.code, 0);
    auto j = json::parse(r.out);
    expect_shape(j, {{"support", json::value_t::array}, {"residual", json::value_t::number_float}});
    double total = 0;
    for (auto &e : j["support"]) total += e["weight"].get<double>();
    EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Cli, TestCorpus) {
    auto r = perplc("test-corpus --dir " + std::string(PERPL_CORPUS_DIR));
    EXPECT_EQ(r.code, 0) << r.out;
    for (auto &name : perpl::test::corpus_names()) EXPECT_NE(r.out.find("PASS " + name), std::string::npos) << name;
}
