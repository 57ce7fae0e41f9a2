// Command-line front end: model validation, curve extraction, analytic
// predictions, Monte Carlo runs and comparisons, all persisted as JSON/CSV
// artifacts that embed their configuration.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "windingstats/analytic.hpp"
#include "windingstats/errors.hpp"
#include "windingstats/model_io.hpp"
#include "windingstats/stats.hpp"

namespace ws = windingstats;
using nlohmann::json;

namespace {

struct Options {
    std::string model;
    std::string report;
    int n = 100;
    long samples = 1000;
    std::uint64_t seed = 1;
    std::string out = ".";
    int workers = 1;
    bool full = false;
    std::string method = "pencil";
    std::vector<double> points;
    int scan_grid = 256;
};

ws::WindingMethod parse_method(const std::string& name) {
    if (name == "pencil") return ws::WindingMethod::pencil;
    if (name == "unwrap") return ws::WindingMethod::phase_unwrap;
    if (name == "root-count") return ws::WindingMethod::root_count;
    throw ws::ModelError("unknown winding method: " + name);
}

std::string hash_hex(std::uint64_t h) {
    std::ostringstream out;
    out << std::hex << h;
    return out.str();
}

json base_config(const std::string& command, const Options& opt,
                 const ws::CoefficientField& field) {
    json cfg;
    cfg["command"] = command;
    cfg["model"] = opt.model.empty() ? "<builtin reference>" : opt.model;
    cfg["model_hash"] = hash_hex(field.model_hash());
    cfg["n"] = opt.n;
    cfg["samples"] = opt.samples;
    cfg["seed"] = opt.seed;
    cfg["workers"] = opt.workers;
    cfg["method"] = opt.method;
    cfg["scan_grid"] = opt.scan_grid;
    cfg["full"] = opt.full;
    if (!opt.points.empty()) cfg["points"] = opt.points;
    return cfg;
}

void write_json(const json& doc, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ws::ModelError("cannot write artifact: " + path.string());
    out << doc.dump(2) << '\n';
}

ws::CoefficientField load_model(const Options& opt) {
    if (opt.model.empty())
        throw ws::ModelError("--model is required for this command");
    return ws::load_model_file(opt.model);
}

int cmd_validate(const Options& opt) {
    const ws::CoefficientField field = load_model(opt);
    const ws::CoefficientField canon = field.canonicalize();

    std::printf("model hash: %s\n", hash_hex(field.model_hash()).c_str());
    if (canon.berry_phase()) {
        const ws::Complex b = *canon.berry_phase();
        std::printf("Berry phase B = %.12f + %.12fi  (|B| = %.12f)\n", b.real(),
                    b.imag(), std::abs(b));
    }

    // Residuals of the canonical conditions ||u|| = 1 and udag u' = 0.
    double norm_residual = 0.0;
    double ortho_residual = 0.0;
    const int grid = 512;
    for (int i = 0; i < grid; ++i) {
        const double p = ws::two_pi * i / grid;
        const ws::Vec2c u = canon.eval(p);
        const ws::Vec2c u1 = canon.eval(p, 1);
        norm_residual = std::max(norm_residual, std::abs(u.norm() - 1.0));
        ortho_residual = std::max(ortho_residual, std::abs(u.dot(u1)));
    }
    std::printf("max | ||u|| - 1 |   = %.3e\n", norm_residual);
    std::printf("max | udag u' |     = %.3e\n", ortho_residual);

    const ws::CurveSet curves = ws::find_parallel_curves(canon, opt.scan_grid);
    std::printf("parallelism curves: %zu\n", curves.curves.size());
    for (std::size_t i = 0; i < curves.curves.size(); ++i)
        std::printf("  curve %zu: length %.9f, %zu samples\n", i,
                    curves.curves[i].length, curves.curves[i].samples.size());
    std::printf("I2 = %.10f\n", ws::i2(canon, curves));

    if (norm_residual > 1e-8 || ortho_residual > 1e-8) {
        std::fprintf(stderr, "canonical-condition residuals exceed 1e-8\n");
        return 2;
    }
    return 0;
}

int cmd_curves(const Options& opt) {
    const ws::CoefficientField field = load_model(opt);
    const ws::CoefficientField canon = field.canonicalize();
    const ws::CurveSet curves = ws::find_parallel_curves(canon, opt.scan_grid);

    std::filesystem::create_directories(opt.out);
    const std::filesystem::path dir(opt.out);
    ws::export_curves_csv(curves, (dir / "curves.csv").string());

    json doc;
    doc["schema_version"] = ws::schema_version;
    doc["config"] = base_config("curves", opt, field);
    doc["curve_count"] = curves.curves.size();
    doc["i2"] = ws::i2(canon, curves);
    doc["i3"] = ws::i3(canon, curves);
    doc["curves"] = json::array();
    for (const ws::Curve& c : curves.curves)
        doc["curves"].push_back(
            {{"length", c.length}, {"samples", c.samples.size()}});
    write_json(doc, dir / "curves.json");

    std::printf("curves: %zu, I2 = %.10f\n", curves.curves.size(), doc["i2"].get<double>());
    std::printf("wrote %s and curves.json\n", (dir / "curves.csv").string().c_str());
    return 0;
}

int cmd_analytic(const Options& opt) {
    const ws::CoefficientField field = load_model(opt);
    const ws::CoefficientField canon = field.canonicalize();
    const ws::CurveSet curves = ws::find_parallel_curves(canon, opt.scan_grid);
    const double i2_value = ws::i2(canon, curves);

    json doc;
    doc["schema_version"] = ws::schema_version;
    doc["config"] = base_config("analytic", opt, field);
    doc["i2"] = i2_value;
    doc["i3"] = ws::i3(canon, curves);
    doc["predicted_moments"] = json::array();
    for (int order = 2; order <= 6; order += 2) {
        const ws::MomentPrediction pred = ws::predict_moments(opt.n, order, i2_value);
        doc["predicted_moments"].push_back({{"order", order},
                                            {"value", pred.leading_value},
                                            {"error_order", pred.error_order}});
    }
    if (!opt.points.empty()) {
        const ws::Complex c = ws::corr_k(canon, opt.n, opt.points);
        doc["corr_k"] = {{"k", opt.points.size()},
                         {"points", opt.points},
                         {"re", c.real()},
                         {"im", c.imag()}};
        std::printf("corr_%zu = %.10e + %.10ei\n", opt.points.size(), c.real(),
                    c.imag());
    }

    std::filesystem::create_directories(opt.out);
    write_json(doc, std::filesystem::path(opt.out) / "analytic.json");
    std::printf("i2 = %.10f\n", i2_value);
    return 0;
}

int cmd_mc(const Options& opt) {
    if (opt.samples <= 0) throw CLI::ValidationError("--samples must be positive");
    const ws::CoefficientField field = load_model(opt);
    std::filesystem::create_directories(opt.out);
    const std::filesystem::path dir(opt.out);
    const json cfg = base_config("mc", opt, field);

    if (!opt.points.empty()) {
        const ws::CorrelatorEstimate est =
            ws::mc_corr(field.canonicalize(), opt.n,
                        std::span<const double>(opt.points),
                        static_cast<std::size_t>(opt.samples), opt.seed, opt.workers);
        write_json(ws::estimate_to_json(est, cfg), dir / "mc_corr.json");
        std::printf("corr_%d estimate = %.6e + %.6ei (+- %.2e), excluded %zu\n",
                    est.k, est.estimate.real(), est.estimate.imag(), est.std_error,
                    est.excluded);
        return 0;
    }

    ws::McOptions mc_opts;
    mc_opts.workers = opt.workers;
    mc_opts.method = parse_method(opt.method);
    const ws::MomentReport report = ws::mc_winding_moments(
        field, opt.n, static_cast<std::size_t>(opt.samples), opt.seed, mc_opts);
    write_json(ws::report_to_json(report, cfg), dir / "mc_moments.json");
    ws::write_histogram_csv(report, (dir / "mc_histogram.csv").string());
    const ws::Verdict verdict =
        ws::compare(report, ws::PredictionConfig{opt.n, field.model_hash()});
    write_json(ws::verdict_to_json(verdict, cfg), dir / "mc_verdict.json");
    std::printf("mean W = %.4f (+- %.4f), Var = %.4f, predicted %.4f, %s\n",
                report.mean, report.mean_std_error, report.central_moments[1].value,
                report.central_moments[1].predicted,
                verdict.pass ? "PASS" : "FAIL");
    return 0;
}

int cmd_compare(const Options& opt) {
    if (opt.report.empty())
        throw CLI::ValidationError("--report is required for compare");
    const ws::CoefficientField field = load_model(opt);
    std::ifstream in(opt.report);
    if (!in) throw ws::ModelError("cannot open report: " + opt.report);
    json doc = json::parse(in);
    const ws::MomentReport report = ws::report_from_json(doc);
    const ws::Verdict verdict =
        ws::compare(report, ws::PredictionConfig{report.n, field.model_hash()});

    std::filesystem::create_directories(opt.out);
    json cfg = base_config("compare", opt, field);
    cfg["report"] = opt.report;
    write_json(ws::verdict_to_json(verdict, cfg),
               std::filesystem::path(opt.out) / "verdict.json");
    for (const ws::VerdictEntry& e : verdict.entries)
        std::printf("%-18s value %.6e predicted %.6e z %+.3f %s\n",
                    e.quantity.c_str(), e.value, e.predicted, e.z,
                    e.pass ? "PASS" : "FAIL");
    std::printf("overall: %s\n", verdict.pass ? "PASS" : "FAIL");
    return verdict.pass ? 0 : 1;
}

int cmd_reproduce_fig3(Options opt) {
    const ws::CoefficientField field =
        opt.model.empty() ? ws::models::reference_affine() : load_model(opt);
    opt.n = opt.full ? 1500 : 200;
    opt.samples = opt.full ? 10000 : 2000;

    ws::McOptions mc_opts;
    mc_opts.workers = opt.workers;
    mc_opts.method = parse_method(opt.method);
    const ws::MomentReport report = ws::mc_winding_moments(
        field, opt.n, static_cast<std::size_t>(opt.samples), opt.seed, mc_opts);

    std::filesystem::create_directories(opt.out);
    const std::filesystem::path dir(opt.out);
    const json cfg = base_config("reproduce-fig3", opt, field);
    write_json(ws::report_to_json(report, cfg), dir / "fig3_report.json");
    ws::write_histogram_csv(report, (dir / "fig3_histogram.csv").string());

    const bool skew_ok = std::abs(report.skewness.value) < 0.15;
    const bool kurt_ok = std::abs(report.kurtosis.value - 3.0) < 0.3;
    const bool mean_ok = std::abs(report.mean_z) < 3.0;
    const bool var_ok =
        std::abs(report.central_moments[1].value - report.central_moments[1].predicted) <
        std::max(3.0 * report.central_moments[1].std_error,
                 0.15 * report.central_moments[1].predicted);
    const bool pass = skew_ok && kurt_ok && mean_ok && var_ok;

    std::ofstream verdict(dir / "fig3_verdict.txt");
    auto line = [&verdict](const char* name, double value, double bound, bool ok) {
        verdict << name << ": " << value << " (bound " << bound << ") "
                << (ok ? "PASS" : "FAIL") << '\n';
        std::printf("%s: %.4f (bound %.4f) %s\n", name, value, bound,
                    ok ? "PASS" : "FAIL");
    };
    line("|skewness|", std::abs(report.skewness.value), 0.15, skew_ok);
    line("|kurtosis - 3|", std::abs(report.kurtosis.value - 3.0), 0.3, kurt_ok);
    line("|mean z|", std::abs(report.mean_z), 3.0, mean_ok);
    line("variance rel. dev.",
         std::abs(report.central_moments[1].value / report.central_moments[1].predicted -
                  1.0),
         0.15, var_ok);
    verdict << "overall: " << (pass ? "PASS" : "FAIL") << '\n';
    std::printf("overall: %s\n", pass ? "PASS" : "FAIL");
    return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Winding-number statistics of parametric chiral random matrices"};
    app.set_config("--config", "", "key/value config file; sections per subcommand");
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&opt](CLI::App* sub, bool needs_model) {
        auto* model = sub->add_option("--model", opt.model, "model definition file");
        if (needs_model) model->required();
        sub->add_option("--n", opt.n, "matrix dimension N");
        sub->add_option("--samples", opt.samples, "Monte Carlo sample count");
        sub->add_option("--seed", opt.seed, "master seed");
        sub->add_option("--out", opt.out, "output directory");
        sub->add_option("--workers", opt.workers, "worker thread count");
        sub->add_option("--scan-grid", opt.scan_grid, "curve scan grid size");
    };

    CLI::App* validate = app.add_subcommand("validate", "parse and check a model");
    add_common(validate, true);

    CLI::App* curves = app.add_subcommand("curves", "trace parallelism curves");
    add_common(curves, true);

    CLI::App* analytic =
        app.add_subcommand("analytic", "closed-form predictions (I2, moments, corr_k)");
    add_common(analytic, true);
    analytic->add_option("--points", opt.points, "angles p_1..p_k for corr_k");

    CLI::App* mc = app.add_subcommand("mc", "Monte Carlo moments or correlators");
    add_common(mc, true);
    mc->add_option("--points", opt.points, "angles p_1..p_k: estimate corr_k instead");
    mc->add_option("--method", opt.method, "winding extractor: pencil|unwrap|root-count");

    CLI::App* compare = app.add_subcommand("compare", "verdicts for a saved mc report");
    add_common(compare, true);
    compare->add_option("--report", opt.report, "mc_moments.json artifact")->required();

    CLI::App* fig3 =
        app.add_subcommand("reproduce-fig3", "winding histogram experiment");
    add_common(fig3, false);
    fig3->add_flag("--full", opt.full, "full scale n=1500, 10^4 samples");
    fig3->add_option("--method", opt.method, "winding extractor: pencil|unwrap|root-count");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return cmd_validate(opt);
        if (curves->parsed()) return cmd_curves(opt);
        if (analytic->parsed()) return cmd_analytic(opt);
        if (mc->parsed()) return cmd_mc(opt);
        if (compare->parsed()) return cmd_compare(opt);
        if (fig3->parsed()) return cmd_reproduce_fig3(opt);
    } catch (const CLI::ValidationError& err) {
        std::fprintf(stderr, "usage error: %s\n", err.what());
        return 2;
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 2;
    }
    return 2;
}
