#include "fracback/errors.hpp"
#include "fracback/experiment.hpp"
#include "fracback/mlf.hpp"
#include "fracback/report.hpp"
#include "fracback/scenario.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct Common {
    std::optional<std::uint64_t> seed;
    std::optional<int> reps;
    std::string out;
    bool svg = false;
    bool json_manifest = false;
    unsigned threads = 0;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--seed", c.seed, "Base seed");
    app->add_option("--reps", c.reps, "Number of consecutive seeds")->check(CLI::PositiveNumber);
    app->add_option("--out", c.out, "Output directory");
    app->add_flag("--svg", c.svg, "Also write SVG line plots");
    app->add_flag("--json-manifest", c.json_manifest, "Also write manifest.json");
    app->add_option("--threads", c.threads, "Worker threads (0 = all cores)");
}

fracback::RunOptions run_options(const Common& c) { return {c.out, c.svg, c.json_manifest, c.threads}; }

void apply_seeds(fracback::Scenario& s, const Common& c) {
    if (c.seed) {
        s.seed = *c.seed;
        s.seeds.clear();
    }
    if (c.reps) {
        s.seed_count = *c.reps;
        s.seeds.clear();
    }
}

std::string opt(const std::optional<double>& v) { return v ? fracback::format_double(*v) : "-"; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Regularized backward solver for time-fractional diffusion with noisy final data"};
    app.require_subcommand(1);

    Common run_c;
    std::string run_file;
    auto* run = app.add_subcommand("run", "Run a scenario file (or the built-in case1/case2)");
    run->add_option("scenario", run_file, "Scenario file or built-in name")->required();
    add_common(run, run_c);

    Common conv_c;
    std::string conv_file;
    std::vector<int> ns;
    std::vector<double> qbv_thetas;
    auto* conv = app.add_subcommand("convergence", "Error and bound across grid sizes");
    conv->add_option("scenario", conv_file, "Scenario file or built-in name")->required();
    conv->add_option("--ns", ns, "Grid sizes")->delimiter(',')->required();
    conv->add_option("--qbv-thetas", qbv_thetas, "Also measure the quasi-boundary gap to truncation")->delimiter(',');
    add_common(conv, conv_c);

    Common ill_c;
    std::vector<int> ill_ns{16, 32, 64};
    double ill_alpha = 0.3;
    auto* ill = app.add_subcommand("illposed", "Unregularized reconstruction from pure-noise data");
    ill->add_option("--ns", ill_ns, "Grid sizes")->delimiter(',');
    ill->add_option("--alpha", ill_alpha, "Fractional order (< 1/2)");
    add_common(ill, ill_c);

    double ml_alpha = 0.5, ml_beta = 1.0, ml_z = 0.0;
    bool ml_json = false;
    auto* ml = app.add_subcommand("ml-eval", "Evaluate the Mittag-Leffler function E_{alpha,beta}(z)");
    ml->add_option("--alpha", ml_alpha)->required();
    ml->add_option("--beta", ml_beta)->required();
    ml->add_option("--z", ml_z)->required();
    ml->add_flag("--json", ml_json);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            auto s = fracback::load_scenario(run_file);
            apply_seeds(s, run_c);
            const auto res = fracback::run_scenario(s, run_options(run_c));
            std::cout << "scenario " << s.name << ": " << res.seeds.size() << " seeds, " << res.failures
                      << " failures\n";
            std::cout << "t,mean_err_rms,ci95,rms_err_L2,bound\n";
            for (const auto& r : res.summary) {
                std::cout << fracback::format_double(r.t) << ',' << fracback::format_double(r.mean_err_rms) << ','
                          << fracback::format_double(r.ci_err_rms) << ',' << fracback::format_double(r.rms_err_L2)
                          << ',' << opt(r.bound) << '\n';
            }
            return res.failures == 0 ? 0 : 2;
        }
        if (*conv) {
            auto s = fracback::load_scenario(conv_file);
            apply_seeds(s, conv_c);
            const auto res = fracback::convergence_study(s, ns, run_options(conv_c));
            std::cout << "n,schedule,err_xt,bound,bound_uniform\n";
            for (const auto& r : res.rows) {
                std::cout << r.n << ',' << r.schedule << ',' << fracback::format_double(r.err_xt) << ','
                          << opt(r.bound) << ',' << opt(r.bound_uniform) << '\n';
            }
            std::cout << "slope_error " << fracback::format_double(res.slope_error) << "\nslope_bound "
                      << opt(res.slope_bound) << '\n';
            if (!qbv_thetas.empty()) {
                const auto gaps = fracback::qbv_limit_study(s, qbv_thetas, s.seed_list().front(), run_options(conv_c));
                std::cout << "theta,gap\n";
                for (const auto& g : gaps) {
                    std::cout << fracback::format_double(g.theta) << ',' << fracback::format_double(g.gap) << '\n';
                }
            }
            return 0;
        }
        if (*ill) {
            const auto res = fracback::illposed_demo(ill_ns, ill_alpha, ill_c.seed.value_or(1), ill_c.reps.value_or(20),
                                                     run_options(ill_c));
            std::cout << "source K " << fracback::format_double(res.source_K) << '\n';
            std::cout << "n,mean_phi_sq,expected_phi_sq,mean_u0_L2,top_mode_amplification\n";
            for (const auto& r : res.rows) {
                std::cout << r.n << ',' << fracback::format_double(r.mean_phi_sq) << ','
                          << fracback::format_double(r.expected_phi_sq) << ',' << fracback::format_double(r.mean_u0)
                          << ',' << fracback::format_double(r.top_amplification) << '\n';
            }
            return 0;
        }
        if (*ml) {
            const auto v = fracback::mlf::ml_evaluate({ml_alpha, ml_beta, ml_z});
            if (ml_json) {
                nlohmann::json j{{"alpha", ml_alpha}, {"beta", ml_beta}, {"z", ml_z}, {"value", v.value},
                                 {"branch", fracback::mlf::to_string(v.branch)}};
                std::cout << j.dump() << '\n';
            } else {
                std::cout << fracback::format_double(v.value) << " (" << fracback::mlf::to_string(v.branch) << ")\n";
            }
            return 0;
        }
    } catch (const fracback::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
