#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

namespace {

struct CliRun {
    int code = -1;
    std::string out;
};

// Runs the tool through the shell; stderr goes to a file next to the work dir.
CliRun run(const std::string& args) {
    std::filesystem::create_directories(PRTE_WORK_DIR);
    const std::string cmd = std::string("\"") + PRTE_CLI_PATH + "\" " + args + " 2>\"" + PRTE_WORK_DIR + "/stderr.txt\"";
    CliRun r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string work(const std::string& name) { return std::string(PRTE_WORK_DIR) + "/" + name; }

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Cli, HelpDocumentsSchemaAndExitCodes) {
    const CliRun r = run("--help");
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("Exit codes"), std::string::npos);
    EXPECT_NE(r.out.find("\"lower\": num|null"), std::string::npos);
    EXPECT_NE(r.out.find("n,sigma,v_dim,target,coverage"), std::string::npos);
}

TEST(Cli, InvalidInputExitsTwo) {
    EXPECT_EQ(run("tables 99").code, 2);
    EXPECT_EQ(run("bounds --method nonsense").code, 2);
    EXPECT_EQ(run("bounds --sigma 0").code, 2);
    EXPECT_EQ(run("bounds --restrictions r9").code, 2);
    EXPECT_EQ(run("bounds --config /nonexistent.ini").code, 2);
    EXPECT_EQ(run("").code, 2);
}

TEST(Cli, BoundsJsonMatchesPublishedCell) {
    const CliRun r = run("bounds --method cvr,manski --target ate --dgp local --vdim 1 --sigma 0.1");
    ASSERT_EQ(r.code, 0);
    const auto j = nlohmann::json::parse(r.out);
    ASSERT_EQ(j.size(), 2u);
    for (const auto& rec : j) {
        EXPECT_EQ(rec["status"], "Bounded");
        EXPECT_NEAR(rec["lower"].get<double>(), -0.188, 5e-3);
        EXPECT_NEAR(rec["upper"].get<double>(), 0.462, 5e-3);
        EXPECT_EQ(rec["v_dim"], 1);
    }
    EXPECT_EQ(j[0]["method"], "cvr");
    EXPECT_EQ(j[1]["method"], "manski");
}

TEST(Cli, ThresholdModelOnRandomCoefficientsIsEmpty) {
    const CliRun r = run("bounds --method mst --dgp random --vdim 1 --sigma 0.5");
    ASSERT_EQ(r.code, 0);
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j[0]["status"], "Empty");
    EXPECT_TRUE(j[0]["lower"].is_null());
}

TEST(Cli, ConfigFileAndOverrides) {
    {
        std::ofstream ini(work("grid.ini"));
        ini << "[dgp]\ntreatment_model = local\nv_dim = 1\nsigma = 0.1,0.5\n[method]\nname = cvr\nrestrictions = r1\n";
    }
    CliRun r = run("bounds --config " + work("grid.ini"));
    ASSERT_EQ(r.code, 0);
    auto j = nlohmann::json::parse(r.out);
    ASSERT_EQ(j.size(), 2u);
    EXPECT_EQ(j[0]["restrictions"], "r1");
    r = run("bounds --config " + work("grid.ini") + " --sigma 0.9");
    ASSERT_EQ(r.code, 0);
    j = nlohmann::json::parse(r.out);
    ASSERT_EQ(j.size(), 1u);
    EXPECT_DOUBLE_EQ(j[0]["sigma"].get<double>(), 0.9);
    {
        std::ofstream bad(work("bad.ini"));
        bad << "[dgp]\ncolour = blue\n";
    }
    EXPECT_EQ(run("bounds --config " + work("bad.ini")).code, 2);
}

TEST(Cli, OutputIsDeterministic) {
    const std::string args = "bounds --method cvr,mst,hv --dgp local,random --vdim 1 --sigma 0.1,0.9 --jobs ";
    const CliRun a = run(args + "1"), b = run(args + "4");
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    ASSERT_EQ(run("bounds --sample-size 500 --seed 3 --output " + work("s1.json")).code, 0);
    ASSERT_EQ(run("bounds --sample-size 500 --seed 3 --output " + work("s2.json")).code, 0);
    EXPECT_EQ(slurp(work("s1.json")), slurp(work("s2.json")));
}

TEST(Cli, MonteCarloSmoke) {
    const std::string args = "mc --dgp local --vdim 1 --sigma 0.5 --n 300 -M 2 --seed 5";
    const CliRun a = run(args), b = run(args + " --jobs 2");
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(a.out.rfind("n,sigma,v_dim,target,coverage,mean_width,failures,M,seed\n", 0), 0u);
    EXPECT_NE(a.out.find("300,0.5,1,ate,"), std::string::npos);
    EXPECT_EQ(run("mc --alpha 0.7").code, 2);
}

TEST(Cli, TableReportWritesDiff) {
    const CliRun r = run("tables 3 --jobs 4 --output " + work("t3.txt"));
    EXPECT_EQ(r.code, 0);
    const std::string text = slurp(work("t3.txt"));
    EXPECT_NE(text.find("table 3:"), std::string::npos);
    EXPECT_NE(text.find("cells match within 0.005"), std::string::npos);
}
