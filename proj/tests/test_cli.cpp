// End-to-end checks of the iptdesign binary: exit codes, file shapes, and a
// few frozen numbers that the library tests already pin, re-read here through
// the CSV/JSON emission path.  The binary location and the shipped config
// directory arrive through the environment (IPTDESIGN_BIN, IPT_CONFIG_DIR),
// wired up by CMake.

#include <catch2/catch_amalgamated.hpp>

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string required_env(const char* name) {
    const char* v = std::getenv(name);
    REQUIRE(v != nullptr);
    return v;
}

std::string bin() { return required_env("IPTDESIGN_BIN"); }
fs::path config_dir() { return required_env("IPT_CONFIG_DIR"); }

// Scratch directory that cleans up after itself; one per test section.
struct TmpDir {
    fs::path path;
    TmpDir() {
        static int counter = 0;
        std::ostringstream name;
        name << "iptcli_" << ::getpid() << "_" << counter++;
        path = fs::temp_directory_path() / name.str();
        fs::create_directories(path);
    }
    ~TmpDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    fs::path operator/(const std::string& leaf) const { return path / leaf; }
};

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run_tool(const std::string& args, const TmpDir& scratch) {
    const fs::path out_file = scratch / "stdout.txt";
    const fs::path err_file = scratch / "stderr.txt";
    const std::string cmd = "\"" + bin() + "\" " + args + " >" + out_file.string() +
                            " 2>" + err_file.string();
    const int raw = std::system(cmd.c_str());
    RunResult r;
    REQUIRE(raw != -1);
    REQUIRE(WIFEXITED(raw));
    r.code = WEXITSTATUS(raw);
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    return r;
}

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    REQUIRE(out.good());
    out << text;
}

// Table I topology block shared by the generated sweep configs.
const char* kTopologyBlock = R"(topology.variant = class-e
topology.v_in   = 30V
topology.f_s    = 400kHz
topology.duty   = 0.5
topology.r_on   = 50mohm
topology.r_off  = 1Mohm
topology.l1     = 10uH
topology.c1     = 9.49nF
topology.c0     = 1.15nF
topology.l_tx   = 140uH
topology.l_rx   = 50uH
topology.q_tx   = 350
topology.q_rx   = 251
topology.c_rx   = 3.3nF
topology.r_load = 12.5ohm
topology.k      = 0.05
)";

} // namespace

TEST_CASE("design-constants reports the class-e design point", "[cli]") {
    TmpDir t;
    auto r = run_tool("design-constants --variant class-e", t);
    REQUIRE(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["variant"] == "class-e");
    CHECK(j["duty"].get<double>() == Catch::Approx(0.5));
    CHECK(j["q"].get<double>() == Catch::Approx(1.2915).epsilon(5e-3));
    CHECK(j["x_over_wl1"].get<double>() == Catch::Approx(0.2663).epsilon(1e-2));
    CHECK(std::abs(j["phi_rad"].get<double>() - 3.14159265) < 0.05);
    CHECK(j["beta_residual"].get<double>() < 1e-8);
    CHECK(j["flatness_residual"].get<double>() < 1e-6);
    CHECK(j["iterations"].get<int>() >= 1);
}

TEST_CASE("design-constants reports the class-ef design point", "[cli]") {
    TmpDir t;
    auto r = run_tool("design-constants --variant class-ef", t);
    REQUIRE(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["variant"] == "class-ef");
    CHECK(j["q2"].get<double>() == Catch::Approx(1.3).epsilon(1e-2));
    CHECK(j["q1"].get<double>() == Catch::Approx(0.956106791659).epsilon(1e-6));
    CHECK(j["k_ratio"].get<double>() == Catch::Approx(1.178228584066).epsilon(1e-9));
    CHECK(j["x_over_wl2"].get<double>() == Catch::Approx(0.765102917569).epsilon(1e-6));
    CHECK(j["psi1"].get<double>() == Catch::Approx(-0.549485848).epsilon(1e-6));
    CHECK(j["beta_residual"].get<double>() < 1e-8);
}

TEST_CASE("design-constants rejects bad arguments", "[cli]") {
    TmpDir t;
    CHECK(run_tool("design-constants --duty 1.5", t).code == 2);
    CHECK(run_tool("design-constants --duty 0", t).code == 2);
    CHECK(run_tool("design-constants --variant class-d", t).code == 2);
    auto r = run_tool("design-constants --variant class-e --k-ratio 1.2", t);
    CHECK(r.code == 2);
    CHECK(r.err.find("class-ef") != std::string::npos);
}

TEST_CASE("solve writes the report and waveform files", "[cli]") {
    TmpDir t;
    const fs::path conf = config_dir() / "tablei.conf";
    auto r = run_tool("solve --config " + conf.string() + " --out " + (t / "out").string(), t);
    REQUIRE(r.code == 0);

    const std::string csv = slurp(t / "out" / "waveforms.csv");
    CHECK(csv.rfind("theta_rad,v_ds_V,i_o_A,v_load_V\n", 0) == 0);
    CHECK(count_lines(csv) == 4097); // header + 4096 samples

    auto j = json::parse(slurp(t / "out" / "report.json"));
    CHECK(j["p_out_W"].get<double>() == Catch::Approx(103.0661855185).epsilon(1e-6));
    CHECK(j["p_in_W"].get<double>() == Catch::Approx(128.3557939654).epsilon(1e-6));
    CHECK(j["efficiency"].get<double>() == Catch::Approx(0.8029725993).epsilon(1e-6));
    CHECK(j["zvs_residual_V"].get<double>() == Catch::Approx(22.63854319).epsilon(1e-5));
    CHECK(j["N"].get<int>() == 30);
    CHECK(j["k"].get<double>() == Catch::Approx(0.05));
    CHECK(j["residual"].get<double>() < 1e-10);
    CHECK(j["balance_rel"].get<double>() < 1e-9);
    CHECK(j["config"]["topology.variant"] == "class-e");
    CHECK(j["config"].contains("topology.c0"));
}

TEST_CASE("solve flag overrides reach the model", "[cli]") {
    TmpDir t;
    const std::string conf = (config_dir() / "tablei.conf").string();

    SECTION("k = 0 decouples the receiver") {
        auto r = run_tool("solve --config " + conf + " --k 0 --out " + (t / "o").string(), t);
        REQUIRE(r.code == 0);
        auto j = json::parse(slurp(t / "o" / "report.json"));
        CHECK(j["p_out_W"].get<double>() < 1e-10);
        CHECK(j["k"].get<double>() == 0.0);
    }
    SECTION("k = 0.06 lands on the pinned output power") {
        auto r = run_tool("solve --config " + conf + " --k 0.06 --out " + (t / "o").string(), t);
        REQUIRE(r.code == 0);
        auto j = json::parse(slurp(t / "o" / "report.json"));
        CHECK(j["p_out_W"].get<double>() == Catch::Approx(76.9774357333).epsilon(1e-6));
    }
    SECTION("harmonics override is reported back") {
        auto r = run_tool("solve --config " + conf + " --harmonics 12 --out " +
                              (t / "o").string(),
                          t);
        REQUIRE(r.code == 0);
        auto j = json::parse(slurp(t / "o" / "report.json"));
        CHECK(j["N"].get<int>() == 12);
    }
    SECTION("out-of-range k is a usage error") {
        CHECK(run_tool("solve --config " + conf + " --k 1.5 --out " + (t / "o").string(), t)
                  .code == 2);
        CHECK(run_tool("solve --config " + conf + " --harmonics 0 --out " +
                           (t / "o").string(),
                       t)
                  .code == 2);
    }
}

TEST_CASE("solve output is byte-identical across reruns", "[cli]") {
    TmpDir t;
    const std::string conf = (config_dir() / "tablei.conf").string();
    // same --out both times: the embedded resolved config includes the
    // output directory, so only an identical invocation must reproduce bytes
    const std::string cmd = "solve --config " + conf + " --out " + (t / "a").string();
    REQUIRE(run_tool(cmd, t).code == 0);
    const std::string wave_a = slurp(t / "a" / "waveforms.csv");
    const std::string rep_a = slurp(t / "a" / "report.json");
    REQUIRE(run_tool(cmd, t).code == 0);
    CHECK(slurp(t / "a" / "waveforms.csv") == wave_a);
    CHECK(slurp(t / "a" / "report.json") == rep_a);
}

TEST_CASE("oracle simulates Table I to periodic steady state", "[cli]") {
    TmpDir t;
    const std::string conf = (config_dir() / "tablei.conf").string();
    auto r = run_tool("oracle --config " + conf + " --out " + (t / "o").string(), t);
    REQUIRE(r.code == 0);

    auto j = json::parse(slurp(t / "o" / "oracle_report.json"));
    REQUIRE(j["converged"].get<bool>());
    CHECK(j["cycles"].get<int>() >= 50);
    CHECK(j["cycles"].get<int>() <= 400);
    CHECK(j["steps_per_cycle"].get<int>() == 8192);
    CHECK(j["periodicity_residual"].get<double>() < 1e-6);
    CHECK(j["p_out_W"].get<double>() == Catch::Approx(102.51916711).epsilon(1e-6));
    CHECK(j["p_in_W"].get<double>() == Catch::Approx(127.87746824).epsilon(1e-6));
    CHECK(j["vds_rms_V"].get<double>() == Catch::Approx(52.26124627).epsilon(1e-6));

    const std::string csv = slurp(t / "o" / "trajectory.csv");
    CHECK(csv.rfind("theta_rad,v_ds_V,i_o_A,v_load_V\n", 0) == 0);
    CHECK(count_lines(csv) == 8193); // header + one row per step
}

TEST_CASE("sweep emits ranked candidates, curves and plot series", "[cli]") {
    TmpDir t;
    std::string conf_text = std::string(kTopologyBlock) +
                            "sweep.k_min = 0.045\n"
                            "sweep.k_max = 0.055\n"
                            "sweep.k_steps = 3\n"
                            "sweep.delta_min = 0.95\n"
                            "sweep.delta_max = 1.05\n"
                            "sweep.delta_steps = 3\n"
                            "sweep.x_min = 5ohm\n"
                            "sweep.x_max = 7ohm\n"
                            "sweep.x_steps = 2\n";
    write_file(t / "small.conf", conf_text);
    auto r = run_tool("sweep --config " + (t / "small.conf").string() + " --out " +
                          (t / "s").string(),
                      t);
    REQUIRE(r.code == 0);

    const std::string cand = slurp(t / "s" / "candidates.csv");
    CHECK(cand.rfind("delta,x_ohm,beta_fluct,mean_eff,reflected_sign\n", 0) == 0);
    CHECK(count_lines(cand) == 1 + 3 * 2);

    const std::string curves = slurp(t / "s" / "curves.csv");
    CHECK(curves.rfind("delta,x_ohm,k,p_out_W,efficiency\n", 0) == 0);
    CHECK(count_lines(curves) == 1 + 3 * 2 * 3);

    int plot_files = 0;
    for (const auto& e : fs::directory_iterator(t / "s")) {
        const std::string name = e.path().filename().string();
        if (name.rfind("plot_d", 0) == 0 && e.path().extension() == ".dat") {
            ++plot_files;
            CHECK(count_lines(slurp(e.path())) == 3); // one line per k point
        }
    }
    CHECK(plot_files == 6);

    auto j = json::parse(slurp(t / "s" / "sweep_report.json"));
    CHECK(j["candidates_evaluated"].get<int>() == 6);
    CHECK(j["c_rx_resonant_F"].get<double>() == Catch::Approx(3.1662869888e-9).epsilon(1e-6));
    REQUIRE(j.contains("top_candidate"));
    const auto& top = j["top_candidate"];
    CHECK(top["beta_fluct"].get<double>() >= 0.0);
    CHECK((top["reflected_class"] == "capacitive" || top["reflected_class"] == "inductive" ||
           top["reflected_class"] == "resonant"));

    // ranking column is non-decreasing in beta_fluct
    std::istringstream lines(cand);
    std::string line;
    std::getline(lines, line); // header
    double prev = -1.0;
    while (std::getline(lines, line)) {
        std::istringstream cells(line);
        std::string d, x, beta;
        std::getline(cells, d, ',');
        std::getline(cells, x, ',');
        std::getline(cells, beta, ',');
        const double b = std::stod(beta);
        CHECK(b >= prev - 1e-15);
        prev = b;
    }
}

TEST_CASE("sweep --verify appends the oracle deviation column", "[cli]") {
    TmpDir t;
    std::string conf_text = std::string(kTopologyBlock) +
                            "sweep.k_min = 0.045\n"
                            "sweep.k_max = 0.055\n"
                            "sweep.k_steps = 3\n"
                            "sweep.delta_min = 1.0\n"
                            "sweep.delta_max = 1.0\n"
                            "sweep.delta_steps = 1\n"
                            "sweep.x_min = 5.8695ohm\n"
                            "sweep.x_max = 5.8695ohm\n"
                            "sweep.x_steps = 1\n";
    write_file(t / "tiny.conf", conf_text);
    auto r = run_tool("sweep --config " + (t / "tiny.conf").string() + " --verify --out " +
                          (t / "v").string(),
                      t);
    REQUIRE(r.code == 0);

    const std::string cand = slurp(t / "v" / "candidates.csv");
    REQUIRE(cand.rfind("delta,x_ohm,beta_fluct,mean_eff,reflected_sign,oracle_dev_p_out\n", 0) ==
            0);
    CHECK(count_lines(cand) == 2); // single grid point -> one candidate row

    std::istringstream lines(cand);
    std::string header, row;
    std::getline(lines, header);
    REQUIRE(std::getline(lines, row));
    const std::string dev = row.substr(row.rfind(',') + 1);
    CHECK(std::stod(dev) < 0.02); // solver and oracle agree to 2 %

    auto j = json::parse(slurp(t / "v" / "sweep_report.json"));
    CHECK(j["candidates_evaluated"].get<int>() == 1);
}

TEST_CASE("config and usage failures exit with status 2", "[cli]") {
    TmpDir t;
    SECTION("missing config file fails the flag check") {
        CHECK(run_tool("solve --config " + (t / "nope.conf").string(), t).code == 2);
    }
    SECTION("malformed config is a config error") {
        write_file(t / "bad.conf", "topology.variant = class-e\ntopology.v_in = 30 bananas\n");
        auto r = run_tool("solve --config " + (t / "bad.conf").string() + " --out " +
                              (t / "o").string(),
                          t);
        CHECK(r.code == 2);
        CHECK(r.err.find("config error") != std::string::npos);
    }
    SECTION("unknown flag is a usage error") {
        CHECK(run_tool("solve --bogus", t).code == 2);
    }
    SECTION("no subcommand is a usage error") {
        CHECK(run_tool("", t).code == 2);
    }
    SECTION("help exits cleanly") {
        auto r = run_tool("--help", t);
        CHECK(r.code == 0);
        CHECK(r.out.find("design-constants") != std::string::npos);
    }
}
