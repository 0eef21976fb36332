#include <doctest.h>

#include <fstream>
#include <sstream>

#include "doe/cli.hpp"

namespace {

struct Run {
    int exit;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = doe::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string fixture(const std::string& name) {
    return std::string(DOE_FIXTURES_DIR) + "/" + name;
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("table prints the oats skeleton with the known df column") {
    Run r = run({"table", fixture("oats.design")});
    CHECK(r.exit == 0);
    for (const char* needle :
         {"Block", "Variety", "Plot", "Nitrogen", "Variety:Nitrogen", "Residual"})
        CHECK(r.out.find(needle) != std::string::npos);
    CHECK(r.out.find("45") != std::string::npos);
}

TEST_CASE("table --csv emits the machine-readable format") {
    Run r = run({"table", fixture("oats.design"), "--csv"});
    CHECK(r.exit == 0);
    CHECK(r.out.rfind("factor,levels,df,stratum,denominator,ems\n", 0) == 0);
    CHECK(r.out.find("Variety,3,2,Plot,Plot,") != std::string::npos);
}

TEST_CASE("formula prints both dialects by default") {
    Run r = run({"formula", fixture("oats.design")});
    CHECK(r.exit == 0);
    CHECK(r.out == "Variety*Nitrogen+Error(Block/Plot)\nVariety*Nitrogen+(1|Block/Plot)\n");
    Run pipe = run({"formula", fixture("oats.design"), "--dialect", "pipe"});
    CHECK(pipe.out == "Variety*Nitrogen+(1|Block/Plot)\n");
}

TEST_CASE("plan output is byte-identical for a repeated seed") {
    Run a = run({"plan", fixture("rcbd.design"), "--seed", "42"});
    Run b = run({"plan", fixture("rcbd.design"), "--seed", "42"});
    CHECK(a.exit == 0);
    CHECK(a.out == b.out);
    Run c = run({"plan", fixture("rcbd.design"), "--seed", "43"});
    CHECK(a.out != c.out);
}

TEST_CASE("check reports diagnostics and exits zero on a clean design") {
    Run r = run({"check", fixture("latin.design")});
    CHECK(r.exit == 0);
    CHECK(r.out.find("experimental unit of A: Cell") != std::string::npos);
}

TEST_CASE("parse failures exit 2 with a position") {
    std::string path = fixture("broken_tmp.design");
    {
        std::ofstream f(path);
        f << "design broken { treatment { A fixed 2; } }";
    }
    Run r = run({"table", path});
    CHECK(r.exit == 2);
    CHECK(r.err.find("parse error") != std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("validation failures exit 1") {
    std::string path = fixture("unbalanced_tmp.design");
    {
        std::ofstream f(path);
        f << "design u { treatment { A: fixed 3; structure: A; } "
             "unit { E: random 10; response: E; } randomize { A -> E; } }";
    }
    Run r = run({"table", path});
    CHECK(r.exit == 1);
    CHECK(r.err.find("balance") != std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("unknown flags exit 2") {
    Run r = run({"table", fixture("oats.design"), "--frobnicate"});
    CHECK(r.exit == 2);
}

TEST_CASE("anova runs end to end on a simulated dataset") {
    // Plan plus a response column forms a complete data file.
    Run plan = run({"plan", fixture("rcbd.design"), "--seed", "5"});
    REQUIRE(plan.exit == 0);
    std::string data_path = fixture("rcbd_tmp_data.csv");
    {
        std::istringstream in(plan.out);
        std::ofstream f(data_path);
        std::string line;
        bool header = true;
        int i = 0;
        while (std::getline(in, line)) {
            if (header) {
                f << line << ",response\n";
                header = false;
            } else {
                f << line << "," << (i * 37 % 11) << "\n";
                ++i;
            }
        }
    }
    Run r = run({"anova", fixture("rcbd.design"), "--data", data_path});
    CHECK(r.exit == 0);
    CHECK(r.out.find("Residual") != std::string::npos);
    CHECK(r.out.find("F") != std::string::npos);
    std::remove(data_path.c_str());
}

TEST_CASE("render respects --format") {
    Run dot = run({"render", fixture("oats.design"), "--format", "dot"});
    CHECK(dot.exit == 0);
    CHECK(dot.out.rfind("digraph", 0) == 0);
    Run tikz = run({"render", fixture("oats.design"), "--format", "tikz"});
    CHECK(tikz.out.find("\\node") != std::string::npos);
}

TEST_CASE("merge flag relabels the confounded residual") {
    std::string path = fixture("rcbd_keep_tmp.design");
    {
        std::ofstream f(path);
        f << "design k { treatment { A: fixed 4; structure: A; } "
             "unit { Block: random 5; Unit: random 4 in Block; response: Unit; } "
             "randomize { A -> Unit; } interactions: all; }";
    }
    Run merged = run({"table", path, "--merge-zero-df"});
    CHECK(merged.exit == 0);
    CHECK(merged.out.find("Unit") == std::string::npos);
    Run kept = run({"table", path});
    CHECK(kept.out.find("Unit") != std::string::npos);
    std::remove(path.c_str());
}

TEST_SUITE_END();
