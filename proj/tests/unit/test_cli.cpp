#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = HBNET_CLI_PATH;
const std::string kExamples = HBNET_EXAMPLES_DIR;

int run(const std::string& args) {
    const int rc = std::system((kCli + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("hbnet_cli_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("cli: simulate, learn, predict") {
    TempDir tmp;
    REQUIRE(run("simulate --spec " + kExamples + "/six_node.json --n-per-cluster 30 --seed 4 --out " + (tmp / "d.csv") +
                " --schema-out " + (tmp / "s.json")) == 0);
    CHECK(fs::exists(tmp / "d.csv"));

    const std::string learn = "learn --data " + (tmp / "d.csv") + " --schema " + (tmp / "s.json");
    REQUIRE(run(learn + " --out " + (tmp / "m1.json") + " --out-dir " + (tmp / "o1")) == 0);
    REQUIRE(run(learn + " --out " + (tmp / "m2.json") + " --out-dir " + (tmp / "o2") + " --threads 2") == 0);
    CHECK(slurp(tmp / "m1.json") == slurp(tmp / "m2.json"));
    for (const char* f : {"arcs.csv", "trace.csv", "bic.csv", "bic_audit.csv", "dag.dot"})
        CHECK(slurp(tmp.path / "o1" / f) == slurp(tmp.path / "o2" / f));
    CHECK(slurp(tmp.path / "o1" / "trace.csv").rfind("iteration,move,parent,child,delta,score\n0,start", 0) == 0);

    const auto model = nlohmann::json::parse(slurp(tmp / "m1.json"));
    CHECK(model.at("format") == "hbnet-model");

    std::ofstream(tmp / "ev.json") << R"({"W1": 20.0, "W2": 15.0, "F": "2"})";
    REQUIRE(run("predict --model " + (tmp / "m1.json") + " --evidence " + (tmp / "ev.json") + " --query Y --out " +
                (tmp / "p.csv") + " --particles 500") == 0);
    const auto pred = slurp(tmp / "p.csv");
    CHECK(pred.rfind("row,mean,q10,q50,q90,ess\n", 0) == 0);
    CHECK(std::count(pred.begin(), pred.end(), '\n') == 2);

    CHECK(run("predict --model " + (tmp / "m1.json") + " --evidence " + (tmp / "ev.json") + " --query Nope --out " +
              (tmp / "p2.csv")) == 2);
}

TEST_CASE("cli: exit codes") {
    TempDir tmp;
    CHECK(run("--version") == 0);
    CHECK(run("learn --no-such-flag") == 1);
    CHECK(run("frobnicate") == 1);
    CHECK(run("learn --data " + (tmp / "missing.csv") + " --schema " + (tmp / "missing.json") + " --out " +
              (tmp / "m.json")) == 2);

    std::ofstream(tmp / "d.csv") << "group,F,A,Y\n1,1,1.0,2.0\n";
    std::ofstream(tmp / "s.json") << R"({"columns": [
        {"name": "group", "kind": "discrete", "role": "group_key"},
        {"name": "B", "kind": "continuous", "role": "weather"},
        {"name": "Y", "kind": "continuous", "role": "target"}]})";
    CHECK(run("learn --data " + (tmp / "d.csv") + " --schema " + (tmp / "s.json") + " --out " + (tmp / "m.json")) == 2);
    CHECK_FALSE(fs::exists(tmp / "m.json"));
}
