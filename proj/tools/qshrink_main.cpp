// qshrink: pretest and Stein-type shrinkage estimation for linear quantile
// regression, with penalized baselines, asymptotic risk curves, simulation
// protocols, and a repeated-split prediction-error study.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "qshrink/ape.hpp"
#include "qshrink/asymptotics.hpp"
#include "qshrink/csv.hpp"
#include "qshrink/errors.hpp"
#include "qshrink/model_select.hpp"
#include "qshrink/penalized.hpp"
#include "qshrink/qr.hpp"
#include "qshrink/report.hpp"
#include "qshrink/shrinkage.hpp"
#include "qshrink/simlab.hpp"

namespace fs = std::filesystem;
using namespace qshrink;

namespace {

struct IoSettings {
    std::string input;
    std::string response;
    std::vector<std::string> partition; // column names, or the single token "bic"
    bool drop_missing = false;
    bool add_intercept = false;
    std::string transform = "none";
    double scale_factor = 1.0;
    std::string out_dir = ".";
};

void add_io_options(CLI::App* cmd, IoSettings& io, bool needs_partition) {
    cmd->add_option("--input", io.input, "input CSV file (RFC 4180, header row)")
        ->required();
    cmd->add_option("--response", io.response, "response column name")->required();
    auto* part = cmd->add_option("--partition", io.partition,
                                 "X1 column names (comma separated), or 'bic' to select "
                                 "the sub-model by forward-stepwise BIC")
                     ->delimiter(',');
    if (needs_partition) part->required();
    cmd->add_flag("--drop-missing", io.drop_missing, "drop rows with missing cells");
    cmd->add_flag("--intercept", io.add_intercept, "prepend an intercept column");
    cmd->add_option("--transform", io.transform,
                    "response transform: none|log|sqrt|scale")
        ->check(CLI::IsMember({"none", "log", "sqrt", "scale"}));
    cmd->add_option("--scale-factor", io.scale_factor, "divisor for --transform scale");
    cmd->add_option("--out", io.out_dir, "output directory");
}

Dataset load_partitioned(const IoSettings& io, bool quantile_bic, double tau) {
    IngestOptions opts;
    opts.drop_missing = io.drop_missing;
    opts.add_intercept = io.add_intercept;
    opts.transform = parse_transform(io.transform);
    opts.scale_factor = io.scale_factor;
    IngestResult r = ingest_csv_file(io.input, io.response, opts);
    std::cerr << "loaded " << r.data.n() << " rows (" << r.rows_dropped << " dropped), "
              << r.data.p() << " columns\n";

    std::vector<int> keep;
    if (io.partition.size() == 1 && io.partition[0] == "bic") {
        SelectOptions sopts;
        sopts.quantile_bic = quantile_bic;
        sopts.tau = tau;
        keep = select_submodel_bic(r.data, sopts);
        std::cerr << "BIC sub-model:";
        for (int j : keep) std::cerr << ' ' << r.data.names[j];
        std::cerr << '\n';
    } else {
        for (const auto& name : io.partition) {
            bool found = false;
            for (int j = 0; j < r.data.p(); ++j) {
                if (r.data.names[j] == name) {
                    keep.push_back(j);
                    found = true;
                    break;
                }
            }
            if (!found) throw schema_error("partition column not found: " + name, {name});
        }
        if (io.add_intercept &&
            std::find(keep.begin(), keep.end(), 0) == keep.end())
            keep.insert(keep.begin(), 0);
    }
    return partition_by_columns(r.data, keep);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw validation_error("cannot open output file " + path.string());
    out << text;
    if (!out) throw validation_error("write failed for " + path.string());
}

fs::path ensure_out_dir(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw validation_error("cannot create output directory " + dir);
    return p;
}

nlohmann::ordered_json coeff_json(const Dataset& data, const Eigen::VectorXd& beta) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (int k = 0; k < data.p(); ++k) {
        const std::string name = data.names.empty() ? "x" + std::to_string(k) : data.names[k];
        j[name] = beta[k];
    }
    return j;
}

int run_fit(const IoSettings& io, std::vector<double> taus, double alpha, bool quantile_bic) {
    const Dataset data = load_partitioned(io, quantile_bic, taus.front());
    const fs::path out = ensure_out_dir(io.out_dir);
    nlohmann::ordered_json doc;
    doc["command"] = "fit";
    doc["input"] = io.input;
    doc["n"] = data.n();
    doc["p1"] = data.p1;
    doc["p2"] = data.p2();
    doc["alpha"] = alpha;
    doc["transform"] = io.transform;
    doc["fits"] = nlohmann::ordered_json::array();
    for (double tau : taus) {
        const QuantileFit full = fit_full(data, tau);
        const QuantileFit sub = fit_sub(data, tau);
        const GammaBlocks blocks = gamma_blocks(full);
        const ShrinkageResult res = shrinkage_estimate(full, sub, blocks, alpha);
        nlohmann::ordered_json f;
        f["tau"] = tau;
        f["wald"] = res.wald;
        f["critical_value"] = res.critical_value;
        f["pretest_accepts"] = res.pretest_accepts;
        f["shrink_factor"] = res.shrink_factor;
        f["wald_degenerate"] = res.wald_degenerate;
        f["coefficients"]["FM"] = coeff_json(data, res.full_vector(Estimator::FM));
        f["coefficients"]["SM"] = coeff_json(data, res.full_vector(Estimator::SM));
        f["coefficients"]["PT"] = coeff_json(data, res.full_vector(Estimator::PT));
        if (data.p2() >= 3) {
            f["coefficients"]["S"] = coeff_json(data, res.full_vector(Estimator::S));
            f["coefficients"]["PS"] = coeff_json(data, res.full_vector(Estimator::PS));
        }
        doc["fits"].push_back(f);
        std::cout << "tau=" << tau << " wald=" << res.wald
                  << (res.pretest_accepts ? " (pretest accepts the sub-model)"
                                          : " (pretest keeps the full model)")
                  << '\n';
    }
    write_text(out / "fit.json", doc.dump(2) + "\n");
    std::cout << "wrote " << (out / "fit.json").string() << '\n';
    return 0;
}

int run_curves(const IoSettings& io, double tau, double alpha, double delta_max,
               int delta_steps) {
    const Dataset data = load_partitioned(io, false, tau);
    const QuantileFit full = fit_full(data, tau);
    const GammaBlocks blocks = gamma_blocks(full);
    const auto inputs = make_asymptotic_inputs(
        blocks, tau, Eigen::MatrixXd::Identity(data.p1, data.p1), alpha);
    std::vector<double> grid(delta_steps);
    for (int i = 0; i < delta_steps; ++i)
        grid[i] = delta_max * static_cast<double>(i) / std::max(1, delta_steps - 1);
    const auto pts = risk_curves(inputs, Eigen::VectorXd::Ones(data.p2()), grid,
                                 {Estimator::FM, Estimator::SM, Estimator::PT, Estimator::S,
                                  Estimator::PS});
    const fs::path out = ensure_out_dir(io.out_dir);
    std::ostringstream os;
    write_curves_csv(os, pts);
    write_text(out / "curves.csv", os.str());
    std::cout << "wrote " << (out / "curves.csv").string() << " (" << pts.size()
              << " rows)\n";
    return 0;
}

int run_simulate(const std::string& protocol, int reps, std::uint64_t seed,
                 std::vector<double> taus, double alpha, double rho, int n, int p1, int p2,
                 double gamma, int error_case, double dstar_max, int dstar_steps,
                 const std::string& metric, const std::string& out_dir) {
    const fs::path out = ensure_out_dir(out_dir);
    SimulationConfig cfg;
    cfg.rho = rho;
    cfg.alpha = alpha;
    cfg.seed = seed;
    cfg.replications = reps;
    cfg.taus = taus;
    cfg.metric = (metric == "pmad") ? Metric::pmad : Metric::model_error_test;
    if (protocol == "mrme") {
        cfg.n_train = n;
        cfg.p1 = p1;
        cfg.p2 = p2;
        cfg.beta_true = Eigen::VectorXd::Zero(p1 + p2);
        cfg.beta_true.head(p1).setOnes();
        cfg.error = (error_case == 1) ? case1(gamma) : case2(gamma);
        std::vector<double> grid(dstar_steps);
        for (int i = 0; i < dstar_steps; ++i)
            grid[i] = dstar_max * static_cast<double>(i) / std::max(1, dstar_steps - 1);
        const MrmeReport rep = mrme_sweep(cfg, grid);
        std::ostringstream os;
        write_mrme_csv(os, rep);
        write_text(out / "mrme.csv", os.str());
        std::cout << "wrote " << (out / "mrme.csv").string() << '\n';
        return 0;
    }
    if (protocol == "pmad") {
        cfg.n_train = 50;
        cfg.n_valid = 50;
        cfg.n_test = 200;
        cfg.p1 = 3;
        cfg.p2 = 5;
        cfg.beta_true = Eigen::VectorXd::Zero(8);
        cfg.beta_true << 3.0, 1.5, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0;
        cfg.standardize_columns = true;
        std::vector<PmadCaseSpec> cases;
        for (double g : {0.10, 0.25}) {
            cases.push_back({"case1", case1(g)});
            cases.push_back({"case2", case2(g)});
        }
        const PmadReports reps_out = pmad_experiment(cfg, cases);
        const ExperimentReport& primary =
            cfg.metric == Metric::pmad ? reps_out.pmad : reps_out.model_error;
        std::ostringstream c1, c2;
        write_report_csv(c1, reps_out.model_error);
        write_report_csv(c2, reps_out.pmad);
        write_text(out / "pmad_model_error.csv", c1.str());
        write_text(out / "pmad_test_mad.csv", c2.str());
        write_text(out / "pmad.json", report_to_json(primary));
        write_report_table(std::cout, primary);
        std::cout << "wrote " << (out / "pmad_model_error.csv").string() << ", "
                  << (out / "pmad_test_mad.csv").string() << '\n';
        return 0;
    }
    throw validation_error("unknown protocol: " + protocol);
}

int run_ape(const IoSettings& io, std::vector<double> taus, int splits, std::uint64_t seed,
            double train_fraction, double alpha, bool quantile_bic) {
    Dataset data = load_partitioned(io, quantile_bic, taus.front());
    ApeOptions opts;
    opts.train_fraction = train_fraction;
    opts.alpha = alpha;
    opts.intercept_first_column = io.add_intercept;
    const ExperimentReport rep = ape_protocol(data, taus, splits, seed, opts);
    const fs::path out = ensure_out_dir(io.out_dir);
    std::ostringstream os;
    write_report_csv(os, rep);
    write_text(out / "ape.csv", os.str());
    write_text(out / "ape.json", report_to_json(rep));
    write_report_table(std::cout, rep);
    std::cout << "wrote " << (out / "ape.csv").string() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"pretest and shrinkage estimation for linear quantile regression"};
    app.set_config("--config", "", "read options from a TOML-style key=value file");
    app.require_subcommand(1);

    IoSettings io;
    std::vector<double> taus{0.5};
    double alpha = 0.05;
    bool quantile_bic = false;
    std::uint64_t seed = 42;

    auto* fit = app.add_subcommand("fit", "fit FM/SM/PT/S/PS at one or more quantile levels");
    add_io_options(fit, io, /*needs_partition=*/true);
    fit->add_option("--tau", taus, "quantile levels")->delimiter(',');
    fit->add_option("--alpha", alpha, "pretest size");
    fit->add_flag("--quantile-bic", quantile_bic, "score BIC selection with check loss");

    auto* curves = app.add_subcommand("curves", "asymptotic bias/QB/risk over a Delta grid");
    double delta_max = 30.0;
    int delta_steps = 61;
    double curve_tau = 0.5;
    add_io_options(curves, io, /*needs_partition=*/true);
    curves->add_option("--tau", curve_tau, "quantile level");
    curves->add_option("--alpha", alpha, "pretest size");
    curves->add_option("--delta-max", delta_max, "largest noncentrality on the grid");
    curves->add_option("--delta-steps", delta_steps, "number of grid points")
        ->check(CLI::PositiveNumber);

    auto* sim = app.add_subcommand("simulate", "Monte Carlo protocols: mrme or pmad");
    std::string protocol = "mrme";
    std::string metric = "model_error";
    int reps = 1000, n = 60, p1 = 5, p2 = 5, error_case = 2, dstar_steps = 17;
    double rho = 0.5, mix_gamma = 0.5, dstar_max = 4.0;
    std::string sim_out = ".";
    sim->add_option("--protocol", protocol, "mrme | pmad")
        ->check(CLI::IsMember({"mrme", "pmad"}));
    sim->add_option("--reps", reps, "replications")->check(CLI::PositiveNumber);
    sim->add_option("--seed", seed, "stream seed");
    sim->add_option("--tau", taus, "quantile levels")->delimiter(',');
    sim->add_option("--alpha", alpha, "pretest size");
    sim->add_option("--rho", rho, "design correlation base");
    sim->add_option("--n", n, "sample size (mrme)");
    sim->add_option("--p1", p1, "retained block size (mrme)");
    sim->add_option("--p2", p2, "tested block size (mrme)");
    sim->add_option("--gamma", mix_gamma, "contamination fraction (mrme)");
    sim->add_option("--case", error_case, "error model: 1 Cauchy mixture, 2 normal mixture")
        ->check(CLI::IsMember({1, 2}));
    sim->add_option("--dstar-max", dstar_max, "largest Delta* (mrme)");
    sim->add_option("--dstar-steps", dstar_steps, "Delta* grid size (mrme)")
        ->check(CLI::PositiveNumber);
    sim->add_option("--metric", metric, "primary table metric: model_error | pmad")
        ->check(CLI::IsMember({"model_error", "pmad"}));
    sim->add_option("--out", sim_out, "output directory");

    auto* ape = app.add_subcommand("ape", "repeated random-split prediction error");
    int splits = 999;
    double train_fraction = 0.5;
    add_io_options(ape, io, /*needs_partition=*/true);
    ape->add_option("--tau", taus, "quantile levels")->delimiter(',');
    ape->add_option("--alpha", alpha, "pretest size");
    ape->add_option("--splits", splits, "number of random splits")->check(CLI::PositiveNumber);
    ape->add_option("--seed", seed, "stream seed");
    ape->add_option("--train-fraction", train_fraction, "fraction of rows used for fitting");
    ape->add_flag("--quantile-bic", quantile_bic, "score BIC selection with check loss");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(fit)) return run_fit(io, taus, alpha, quantile_bic);
        if (app.got_subcommand(curves)) return run_curves(io, curve_tau, alpha, delta_max,
                                                          delta_steps);
        if (app.got_subcommand(sim))
            return run_simulate(protocol, reps, seed, taus, alpha, rho, n, p1, p2, mix_gamma,
                                error_case, dstar_max, dstar_steps,
                                metric == "pmad" ? "pmad" : "model_error", sim_out);
        if (app.got_subcommand(ape))
            return run_ape(io, taus, splits, seed, train_fraction, alpha, quantile_bic);
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const numeric_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "unexpected failure: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
