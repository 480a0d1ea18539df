#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = -1;
    std::string out;
};

// Runs the tool with `args`, capturing stdout and the exit status.
Outcome invoke(const std::string& args) {
    const fs::path capture = fs::temp_directory_path() / ("loopaction_cli_" + std::to_string(::getpid()) + ".txt");
    const std::string cmd = std::string("\"") + LOOPACTION_CLI + "\" " + args + " > \"" + capture.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    Outcome o;
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(capture);
    std::stringstream ss;
    ss << in.rdbuf();
    o.out = ss.str();
    fs::remove(capture);
    return o;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
        : path(fs::temp_directory_path() / ("loopaction_cli_" + tag + "_" + std::to_string(::getpid()))) {
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string arg() const { return "--out \"" + path.string() + "\""; }
};

int count_lines(const fs::path& p) {
    std::ifstream in(p);
    int n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n;
}

}  // namespace

TEST_CASE("minimize2 writes a record and a summary") {
    TempDir dir("min2");
    const auto o = invoke("minimize2 --a 1 --h -0.5 --modes 8 --grid 256 --seeds 1 --plots " + dir.arg());
    CHECK(o.code == 0);
    CHECK(fs::exists(dir.path / "run_seed1.json"));
    CHECK(count_lines(dir.path / "summary.csv") == 2);
    CHECK(fs::exists(dir.path / "plots" / "run_seed1_orbit.svg"));
}

TEST_CASE("minimize3 runs the three-body problem") {
    TempDir dir("min3");
    const auto o = invoke("minimize3 --m1 1 --m2 1 --m3 1 --E -0.5 --seeds 1 " + dir.arg());
    CHECK(o.code == 0);
    std::ifstream in(dir.path / "summary.csv");
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(row.find("three_body") != std::string::npos);
}

TEST_CASE("sweep gives one row per energy and seed") {
    TempDir dir("sweep");
    const auto o = invoke("sweep --modes 8 --grid 256 --sweep=-0.3,-0.5,-0.8,-1,-2 --seeds 1,2,3 " + dir.arg());
    CHECK(o.code == 0);
    CHECK(count_lines(dir.path / "summary.csv") == 16);
}

TEST_CASE("formulas, verify and oracle") {
    TempDir dir("reports");
    const auto f = invoke("formulas " + dir.arg());
    CHECK(f.code == 0);
    CHECK(f.out.find("claimed_min_action") != std::string::npos);
    CHECK(fs::exists(dir.path / "formulas.csv"));
    CHECK(fs::exists(dir.path / "formulas.json"));

    const auto v = invoke("verify --problem three_body " + dir.arg());
    CHECK(v.code == 0);
    CHECK(v.out.find("PASS") != std::string::npos);
    CHECK(v.out.find("FAIL") == std::string::npos);
    CHECK(fs::exists(dir.path / "verify.csv"));

    const auto k = invoke("oracle --e 0.5 " + dir.arg());
    CHECK(k.code == 0);
    CHECK(fs::exists(dir.path / "oracle_orbit.csv"));
}

TEST_CASE("config file values are overridden by flags") {
    TempDir dir("cfg");
    fs::create_directories(dir.path);
    const fs::path cfg = dir.path / "run.cfg";
    std::ofstream(cfg) << "modes = 8\ngrid = 256\nh = -1\nseeds = 2\n";
    const auto o = invoke("minimize2 --config \"" + cfg.string() + "\" --h -2 " + dir.arg());
    CHECK(o.code == 0);
    std::ifstream in(dir.path / "summary.csv");
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(row.rfind("seed2,two_body,-2,2,", 0) == 0);
}

TEST_CASE("exit codes for configuration and I/O errors") {
    const auto bad_h = invoke("minimize2 --h 0.5 --out /tmp/loopaction_unused");
    CHECK(bad_h.code == 2);
    CHECK(bad_h.out.find("h must be negative") != std::string::npos);
    CHECK(invoke("minimize2 --bogus 1").code == 2);
    CHECK(invoke("").code == 2);
    CHECK(invoke("sweep --modes 8 --grid 256 --out /tmp/loopaction_unused").code == 2);
    CHECK(invoke("minimize2 --config /nonexistent/file.cfg").code == 2);
    CHECK(invoke("minimize2 --modes 8 --grid 256 --out /proc/loopaction_no_such_dir").code == 3);
    CHECK(invoke("--help").code == 0);
}
