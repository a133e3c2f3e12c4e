// Acceptance suite: criteria 1 to 13 at their stated sizes and tolerances.
// Prints one PASS/FAIL line per criterion and exits nonzero if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "vrjp/experiments.hpp"

using namespace vrjp;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    int id;
    std::string title;
    std::function<std::vector<CheckReport>()> run;
};

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + VRJP_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Re-runs CLI experiments with one and four workers and compares every CSV.
CheckReport determinism() {
    CheckReport rep;
    rep.name = "determinism";
    const fs::path dir = fs::temp_directory_path() / "vrjp_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path cfg = dir / "run.ini";
    std::ofstream(cfg) << "[run]\nseed = 2024\n"
                          "[marginals]\nn = 5000\n"
                          "[renewal]\nreplicates = 10\n"
                          "[exitprob]\nn = 2000\n"
                          "[scan]\nn_grid = 1, 2\nW_grid = 0.5, 1, 2\nreplicates = 2000\n"
                          "[simulate]\nreplicates = 20\n";
    const std::vector<std::pair<std::string, std::string>> runs{
        {"marginals", "--only marginals validate"},
        {"renewal", "--only renewal validate"},
        {"exitprob", "--only exitprob validate"},
        {"phase", "--only phase scan"},
        {"moments", "--only moments scan"},
        {"simulate", "simulate"},
    };
    for (const auto& [name, args] : runs) {
        std::vector<fs::path> outs;
        for (int workers : {1, 4}) {
            const fs::path out = dir / (name + "_w" + std::to_string(workers));
            const int code = run_cli("--config " + cfg.string() + " --out " + out.string() + " --workers " +
                                     std::to_string(workers) + " " + args);
            if (code != 0 && code != 1) {
                rep.pass = false;
                rep.note(name + ": exit code " + std::to_string(code));
            }
            outs.push_back(out);
        }
        int compared = 0;
        for (const auto& e : fs::directory_iterator(outs[0])) {
            if (e.path().extension() != ".csv") continue;
            ++compared;
            const fs::path other = outs[1] / e.path().filename();
            if (!fs::exists(other) || slurp(e.path()) != slurp(other)) {
                rep.pass = false;
                rep.note(name + ": " + e.path().filename().string() + " differs between 1 and 4 workers");
            }
        }
        if (compared == 0) {
            rep.pass = false;
            rep.note(name + ": no CSV output");
        }
        rep.note(name + ": " + std::to_string(compared) + " CSV files compared");
    }
    fs::remove_all(dir);
    return rep;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "Laplace conformance", [] { return std::vector{check_laplace({})}; }},
        {2, "inverse Gaussian marginals", [] { return std::vector{check_ig_marginals({})}; }},
        {3, "restriction and conditioning", [] { return std::vector{check_restriction({})}; }},
        {4, "martingale property", [] { return std::vector{check_martingale({})}; }},
        {5, "renewal identity", [] { return std::vector{check_renewal({})}; }},
        {6, "path-sum oracle equivalence", [] { return std::vector{check_oracle({})}; }},
        {7, "exit-probability identity", [] { return std::vector{check_exitprob({})}; }},
        {8, "toy closed form and chain identity",
         [] { return std::vector{check_toy_moments({}), check_chain_identity({})}; }},
        {9, "Rapenne identity", [] { return std::vector{check_rapenne({})}; }},
        {10, "convex order", [] { return std::vector{check_convex({})}; }},
        {11, "tail bound", [] { return std::vector{check_tail({})}; }},
        {12, "overshoot machinery", [] { return std::vector{check_overshoot({}), check_igtail({})}; }},
        {13, "determinism across workers", [] { return std::vector{determinism()}; }},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        bool pass = true;
        std::vector<std::string> notes;
        try {
            for (const auto& rep : c.run()) {
                pass = pass && rep.pass;
                for (const auto& n : rep.notes) notes.push_back(rep.name + ": " + n);
            }
        } catch (const std::exception& e) {
            pass = false;
            notes.push_back(std::string("error: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.title << " (" << fmt(secs, 3)
                  << " s)\n";
        for (const auto& n : notes) std::cout << "    " << n << '\n';
        std::cout.flush();
        if (!pass) ++failed;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << " of " << criteria.size()
              << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
