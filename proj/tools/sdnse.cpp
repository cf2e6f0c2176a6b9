// Command-line entry point. Exit codes: 0 success, 2 a checked property
// failed, 1 usage / configuration / input error.

#include <omp.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sdnse/config.hpp"
#include "sdnse/embeddings.hpp"
#include "sdnse/field.hpp"
#include "sdnse/manifest.hpp"
#include "sdnse/monitor.hpp"
#include "sdnse/nse.hpp"
#include "sdnse/sdspace.hpp"
#include "sdnse/testfns.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace sdnse;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kFailed = 2;

// A checked property did not hold; maps to exit code 2.
struct CheckFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << text;
    if (!out) throw std::runtime_error("failed writing " + path);
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

double parse_p(const std::string& s) {
    if (s == "inf" || s == "infinity" || s == "Inf") return std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double p = 0;
    try {
        p = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || !(p >= 1)) throw std::invalid_argument("--p must be a number >= 1 or 'inf', got '" + s + "'");
    return p;
}

// Resolves a path in a config file relative to that file's directory.
std::string relative_to(const std::string& base_file, const std::string& p) {
    const fs::path q(p);
    if (q.is_absolute()) return p;
    return (fs::path(base_file).parent_path() / q).lexically_normal().string();
}

struct DumpArgs {
    int level = 1;
    long long cube = 1;
    int grid = 101;
    int dim = 1;
    int axis = 0;
    std::string out;
};

int run_dump(const DumpArgs& a, RunManifest& m) {
    if (a.dim < 1 || a.dim > 3) throw std::invalid_argument("--dim must be 1, 2 or 3");
    if (a.axis < 0 || a.axis >= a.dim) throw std::invalid_argument("--axis must be below --dim");
    if (a.grid < 2) throw std::invalid_argument("--grid needs at least 2 points");
    if (a.cube < 1) throw std::invalid_argument("--cube must be >= 1");
    const auto k = testfns::pair_index(a.level, a.cube);
    const auto cube = testfns::CubeIndex::from_k(k, a.dim);
    const testfns::TestFunctionFamily fam(a.dim, a.level);
    std::string csv = "x,re_xi,im_xi\n";
    const double lo = cube.lo(a.axis), hi = cube.hi(a.axis);
    char buf[128];
    for (int i = 0; i < a.grid; ++i) {
        const double x = lo + (hi - lo) * i / (a.grid - 1);
        const auto v = fam.xi(cube, a.axis, x);
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", x, v.real(), v.imag());
        csv += buf;
    }
    write_text(a.out, csv);
    if (!a.out.empty() && a.out != "-") m.add_output(a.out);
    return kOk;
}

struct SdnormArgs {
    std::string input;
    std::string p = "2";
    int K = 200;
    int interp = 3;
    std::string out;
};

int run_sdnorm(const SdnormArgs& a, RunManifest& m) {
    const double p = parse_p(a.p);
    if (a.K < 1) throw std::invalid_argument("--K must be positive");
    m.add_input(a.input);
    const auto f = read_field_csv(a.input, a.interp);
    const sd::SdSpace space(f.dim(), a.K);
    const auto v = sd::sd_norm_p(space, f, p, a.K);
    json j{{"value", v.real()}, {"K", v.K}, {"tail_bound", v.tail_bound}, {"warnings", v.warnings},
           {"p", std::isinf(p) ? json("inf") : json(p)}, {"input", a.input}};
    write_json(a.out, j);
    if (!a.out.empty() && a.out != "-") m.add_output(a.out);
    return kOk;
}

struct VerifyArgs {
    std::string suite = "embeddings";
    std::string corpus;
    std::string out;
};

json verify_embeddings(const std::string& corpus, RunManifest& m, bool& passed) {
    emb::CorpusSpec spec;
    if (corpus.empty()) {
        spec = emb::default_corpus_spec();
    } else {
        m.add_input(corpus);
        spec = emb::load_corpus_spec(KeyValueConfig::load(corpus));
    }
    m.seed = spec.seed;
    auto j = emb::run_embeddings_suite(spec, passed);
    j["corpus"] = corpus.empty() ? json("<default>") : json(corpus);
    j["passed"] = passed;
    return j;
}

int run_verify(const VerifyArgs& a, RunManifest& m) {
    m.config_path = a.corpus;
    bool passed = true;
    const auto j = verify_embeddings(a.corpus, m, passed);
    write_json(a.out, j);
    if (!a.out.empty() && a.out != "-") m.add_output(a.out);
    if (!passed) std::cerr << "verify: at least one asserted check failed\n";
    return passed ? kOk : kFailed;
}

struct NseArgs {
    std::string config;
    std::string out;
};

nse::Trajectory run_solver(const std::string& config, const std::string& out, RunManifest& m) {
    m.add_input(config);
    const auto cfg = nse::load_solver_config(KeyValueConfig::load(config));
    m.seed = cfg.seed;
    try {
        auto traj = nse::solve(cfg);
        nse::write_trajectory(traj, out);
        return traj;
    } catch (const nse::SolverError& e) {
        throw CheckFailed(std::string("solver aborted: ") + e.what());
    }
}

int run_nse(const NseArgs& a, RunManifest& m) {
    m.config_path = a.config;
    run_solver(a.config, a.out, m);
    m.add_output(a.out);
    return kOk;
}

struct MonitorArgs {
    std::string trajectory;
    std::optional<double> nu;
    int K = 60;
    std::string norm = "SD2";
    bool no_contraction = false;
    std::string out;
};

json monitor_trajectory(const std::string& dir, const monitor::ReportOptions& opt, bool& passed) {
    const auto traj = nse::read_trajectory(dir);
    try {
        auto j = monitor::dissipativity_report(traj, opt);
        passed = j["passed"].get<bool>();
        return j;
    } catch (const monitor::MonitorError& e) {
        throw CheckFailed(e.what());
    }
}

int run_monitor(const MonitorArgs& a, RunManifest& m) {
    monitor::ReportOptions opt;
    opt.norm = monitor::parse_norm(a.norm);
    opt.K = a.K;
    opt.nu = a.nu;
    opt.contraction = !a.no_contraction;
    m.add_input((fs::path(a.trajectory) / "run.ini").string());
    m.add_input((fs::path(a.trajectory) / "series.csv").string());
    bool passed = true;
    const auto j = monitor_trajectory(a.trajectory, opt, passed);
    write_json(a.out, j);
    if (!a.out.empty() && a.out != "-") m.add_output(a.out);
    if (!passed) std::cerr << "monitor: at least one asserted check failed\n";
    return passed ? kOk : kFailed;
}

struct PipelineArgs {
    std::string config;
};

// Pipeline file: a [pipeline] section with run (solver config), out, and the
// optional corpus, norm, K, contraction keys. Paths are relative to the file.
int run_pipeline(const PipelineArgs& a, RunManifest& m) {
    m.config_path = a.config;
    m.add_input(a.config);
    const auto cfg = KeyValueConfig::load(a.config);
    cfg.require_known({"pipeline.run", "pipeline.out", "pipeline.corpus", "pipeline.norm", "pipeline.K",
                       "pipeline.contraction"});
    const auto run = relative_to(a.config, cfg.get_string("pipeline.run"));
    const auto out = relative_to(a.config, cfg.get_string("pipeline.out"));
    const auto corpus = cfg.has("pipeline.corpus") ? relative_to(a.config, cfg.get_string("pipeline.corpus")) : "";
    monitor::ReportOptions opt;
    opt.norm = monitor::parse_norm(cfg.get_string("pipeline.norm", "SD2"));
    opt.K = static_cast<int>(cfg.get_int("pipeline.K", 60));
    opt.contraction = cfg.get_bool("pipeline.contraction", true);
    fs::create_directories(out);

    json report;
    const auto traj_dir = (fs::path(out) / "trajectory").string();
    run_solver(run, traj_dir, m);
    report["solve"] = {{"config", run}, {"trajectory", traj_dir}};

    bool monitor_ok = true;
    const auto mon = monitor_trajectory(traj_dir, opt, monitor_ok);
    write_json((fs::path(out) / "monitor.json").string(), mon);
    report["monitor"] = mon;

    bool verify_ok = true;
    const auto ver = verify_embeddings(corpus, m, verify_ok);
    write_json((fs::path(out) / "verify.json").string(), ver);
    report["verify"] = ver;

    report["passed"] = monitor_ok && verify_ok;
    write_json((fs::path(out) / "report.json").string(), report);
    m.add_output(out);
    if (!(monitor_ok && verify_ok)) std::cerr << "pipeline: at least one asserted check failed\n";
    return monitor_ok && verify_ok ? kOk : kFailed;
}

int resolve_threads(std::optional<int> flag) {
    int n = omp_get_num_procs();
    if (flag) {
        n = *flag;
    } else if (const char* env = std::getenv("SDNSE_THREADS"); env && *env) {
        try {
            n = std::stoi(env);
        } catch (const std::exception&) {
            throw std::invalid_argument(std::string("SDNSE_THREADS is not an integer: ") + env);
        }
    }
    if (n < 1) throw std::invalid_argument("thread count must be positive");
    return n;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SD-space construction, verification suites and Navier-Stokes dissipativity monitoring"};
    app.set_version_flag("--version", tool_version());
    app.require_subcommand(1);
    app.fallthrough();
    std::optional<int> threads;
    app.add_option("--threads", threads, "worker threads (default: SDNSE_THREADS, else all cores)");

    DumpArgs dump;
    auto* testfns_cmd = app.add_subcommand("testfns", "test-function diagnostics");
    testfns_cmd->require_subcommand(1);
    auto* dump_cmd = testfns_cmd->add_subcommand("dump", "sample xi of one cube along an axis as CSV");
    dump_cmd->add_option("--level", dump.level, "level l")->check(CLI::Range(1, 60));
    dump_cmd->add_option("--cube", dump.cube, "rational point index i of the cube B_l(x^i)");
    dump_cmd->add_option("--grid", dump.grid, "number of sample points across the cube");
    dump_cmd->add_option("--dim", dump.dim, "space dimension");
    dump_cmd->add_option("--axis", dump.axis, "axis to sample");
    dump_cmd->add_option("--out", dump.out, "output CSV (default stdout)");

    SdnormArgs sdn;
    auto* sdnorm_cmd = app.add_subcommand("sdnorm", "truncated SD^p norm of a sampled field");
    sdnorm_cmd->add_option("--input", sdn.input, "field CSV")->required()->check(CLI::ExistingFile);
    sdnorm_cmd->add_option("--p", sdn.p, "exponent (>= 1 or inf)");
    sdnorm_cmd->add_option("--K", sdn.K, "number of functionals");
    sdnorm_cmd->add_option("--interp", sdn.interp, "interpolation order")->check(CLI::IsMember({1, 3}));
    sdnorm_cmd->add_option("--out", sdn.out, "output JSON (default stdout)");

    VerifyArgs ver;
    auto* verify_cmd = app.add_subcommand("verify", "run a verification suite");
    verify_cmd->add_option("--suite", ver.suite, "suite name")->check(CLI::IsMember({"embeddings"}));
    verify_cmd->add_option("--corpus", ver.corpus, "corpus file (default built-in corpus)")->check(CLI::ExistingFile);
    verify_cmd->add_option("--out", ver.out, "output JSON (default stdout)");

    NseArgs ns;
    auto* nse_cmd = app.add_subcommand("nse", "Navier-Stokes solver");
    nse_cmd->require_subcommand(1);
    auto* run_cmd = nse_cmd->add_subcommand("run", "solve and write a trajectory directory");
    run_cmd->add_option("--config", ns.config, "run configuration")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--out", ns.out, "output directory")->required();

    MonitorArgs mon;
    auto* monitor_cmd = app.add_subcommand("monitor", "dissipativity report for a trajectory");
    monitor_cmd->add_option("--trajectory", mon.trajectory, "trajectory directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    monitor_cmd->add_option("--nu", mon.nu, "viscosity (default from the trajectory)");
    monitor_cmd->add_option("--K", mon.K, "SD truncation");
    monitor_cmd->add_option("--norm", mon.norm, "report norm")->check(CLI::IsMember({"L2", "SD2"}));
    monitor_cmd->add_flag("--no-contraction", mon.no_contraction, "skip the contraction pair");
    monitor_cmd->add_option("--out", mon.out, "output JSON (default stdout)");

    PipelineArgs pipe;
    auto* pipeline_cmd = app.add_subcommand("pipeline", "solve, monitor and verify from one file");
    pipeline_cmd->add_option("--config", pipe.config, "pipeline file")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    RunManifest m;
    m.started = utc_timestamp();
    for (int i = 0; i < argc; ++i) m.argv.emplace_back(argv[i]);
    std::string manifest_path;
    int rc = kOk;
    try {
        m.threads = resolve_threads(threads);
        omp_set_num_threads(m.threads);
        if (*dump_cmd) {
            m.subcommand = "testfns dump";
            if (!dump.out.empty() && dump.out != "-") manifest_path = dump.out + ".manifest.json";
            rc = run_dump(dump, m);
        } else if (*sdnorm_cmd) {
            m.subcommand = "sdnorm";
            if (!sdn.out.empty() && sdn.out != "-") manifest_path = sdn.out + ".manifest.json";
            rc = run_sdnorm(sdn, m);
        } else if (*verify_cmd) {
            m.subcommand = "verify";
            if (!ver.out.empty() && ver.out != "-") manifest_path = ver.out + ".manifest.json";
            rc = run_verify(ver, m);
        } else if (*run_cmd) {
            m.subcommand = "nse run";
            manifest_path = (fs::path(ns.out) / "manifest.json").string();
            rc = run_nse(ns, m);
        } else if (*monitor_cmd) {
            m.subcommand = "monitor";
            if (!mon.out.empty() && mon.out != "-") manifest_path = mon.out + ".manifest.json";
            rc = run_monitor(mon, m);
        } else if (*pipeline_cmd) {
            m.subcommand = "pipeline";
            rc = run_pipeline(pipe, m);
            const auto cfg = KeyValueConfig::load(pipe.config);
            manifest_path = (fs::path(relative_to(pipe.config, cfg.get_string("pipeline.out"))) / "manifest.json").string();
        }
    } catch (const CheckFailed& e) {
        std::cerr << "sdnse: " << e.what() << '\n';
        rc = kFailed;
    } catch (const std::exception& e) {
        std::cerr << "sdnse: " << e.what() << '\n';
        return kUsage;
    }
    m.exit_code = rc;
    m.finished = utc_timestamp();
    if (!manifest_path.empty() && fs::exists(fs::path(manifest_path).parent_path().empty()
                                                 ? fs::path(".")
                                                 : fs::path(manifest_path).parent_path())) {
        try {
            m.write(manifest_path);
        } catch (const std::exception& e) {
            std::cerr << "sdnse: " << e.what() << '\n';
            return kUsage;
        }
    }
    return rc;
}
