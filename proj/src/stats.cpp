#include "windingstats/stats.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "windingstats/errors.hpp"
#include "windingstats/rng.hpp"

namespace windingstats {

namespace {

// Stream index reserved for the bootstrap generator; realization indices
// are dense from zero, so any huge constant is safe.
constexpr std::uint64_t bootstrap_stream = 0xb007b007b007b007ULL;

bool is_exclusion(const std::exception_ptr& eptr) {
    try {
        std::rethrow_exception(eptr);
    } catch (const NearSingularError&) {
        return true;
    } catch (const RootOnCircleError&) {
        return true;
    } catch (const NonConvergentError&) {
        return true;
    } catch (...) {
        return false;
    }
}

struct SliceResult {
    std::vector<double> values;          // included, index order
    std::vector<std::uint8_t> included;  // per index
    std::exception_ptr fatal;
    std::size_t fatal_index = 0;
};

struct Moments {
    double mean = 0.0;
    double central[7] = {};  // orders 0..6, order 0 unused
    double skewness = 0.0;
    double kurtosis = 0.0;
};

Moments compute_moments(const std::vector<double>& w) {
    Moments m;
    const double count = static_cast<double>(w.size());
    for (double x : w) m.mean += x;
    m.mean /= count;
    for (double x : w) {
        const double d = x - m.mean;
        double pow_d = d;
        for (int order = 1; order <= 6; ++order) {
            m.central[order] += pow_d;
            pow_d *= d;
        }
    }
    for (int order = 1; order <= 6; ++order) m.central[order] /= count;
    const double var = std::max(m.central[2], 1e-300);
    m.skewness = m.central[3] / std::pow(var, 1.5);
    m.kurtosis = m.central[4] / (var * var);
    return m;
}

double ratio_z(double value, double predicted, double std_error) {
    if (std_error <= 0.0) return value == predicted ? 0.0 : HUGE_VAL;
    return (value - predicted) / std_error;
}

std::string hash_hex(std::uint64_t h) {
    std::ostringstream out;
    out << std::hex << h;
    return out.str();
}

const char* method_name(WindingMethod method) {
    switch (method) {
        case WindingMethod::phase_unwrap:
            return "phase_unwrap";
        case WindingMethod::root_count:
            return "root_count";
        case WindingMethod::pencil:
        default:
            return "pencil";
    }
}

}  // namespace

double analytic_mean_winding(const CoefficientField& field, int n) {
    const int grid = 4096;
    Complex acc{0.0, 0.0};
    for (int i = 0; i < grid; ++i) {
        const double p = two_pi * i / grid;
        const Vec2c v = field.eval_raw(p, 0);
        const Vec2c v1 = field.eval_raw(p, 1);
        acc += v.dot(v1) / v.dot(v);
    }
    acc *= two_pi / grid;
    // W = (1/2 pi i) contour-integral of w, w = n vdag v'/vdag v on average.
    return static_cast<double>(n) * (acc / Complex(0.0, two_pi)).real();
}

MomentReport mc_winding_moments(const CoefficientField& field, int n,
                                std::size_t samples, std::uint64_t master_seed,
                                const McOptions& opts) {
    if (!field.periodic())
        throw ModelError("mc_winding_moments needs the periodic field; winding of the "
                         "gauged field is not an integer");
    if (samples < 2) throw ModelError("mc_winding_moments requires samples >= 2");
    if (opts.workers < 1) throw ModelError("worker count must be >= 1");

    // Analytic side: curve quadrature on the canonical field.
    const CoefficientField canon = field.canonical() ? field : field.canonicalize();
    const CurveSet curves = find_parallel_curves(canon);
    const double i2_value = i2(canon, curves);

    std::vector<int> w_by_index(samples, 0);
    std::vector<std::uint8_t> included(samples, 0);
    std::vector<std::exception_ptr> fatal(static_cast<std::size_t>(opts.workers));
    std::vector<std::size_t> fatal_index(static_cast<std::size_t>(opts.workers),
                                         samples);
    std::atomic<std::size_t> cursor{0};

    auto worker = [&](int worker_id) {
        for (;;) {
            const std::size_t idx = cursor.fetch_add(1);
            if (idx >= samples) return;
            try {
                const Realization real = sample(n, derive_seed(master_seed, idx));
                const WindingResult result = compute_winding(real, field, opts.method);
                if (idx < static_cast<std::size_t>(opts.cross_check_count)) {
                    const WindingResult a = winding_unwrap(real, field);
                    if (a.w != result.w)
                        throw InconsistentError("winding extractors disagree");
                    if (real.n * (field.max_index() - field.min_index()) <= 2048) {
                        const WindingResult b = winding_root_count(real, field);
                        if (b.w != result.w)
                            throw InconsistentError("winding extractors disagree");
                    }
                }
                w_by_index[idx] = result.w;
                included[idx] = 1;
            } catch (...) {
                const std::exception_ptr eptr = std::current_exception();
                if (is_exclusion(eptr)) continue;  // leave index excluded
                auto& slot = fatal[static_cast<std::size_t>(worker_id)];
                auto& slot_idx = fatal_index[static_cast<std::size_t>(worker_id)];
                if (idx < slot_idx) {
                    slot = eptr;
                    slot_idx = idx;
                }
                return;
            }
        }
    };

    if (opts.workers == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(opts.workers));
        for (int t = 0; t < opts.workers; ++t) pool.emplace_back(worker, t);
        for (std::thread& t : pool) t.join();
    }

    std::exception_ptr first_fatal;
    std::size_t first_index = samples;
    for (std::size_t t = 0; t < fatal.size(); ++t)
        if (fatal[t] && fatal_index[t] < first_index) {
            first_fatal = fatal[t];
            first_index = fatal_index[t];
        }
    if (first_fatal) std::rethrow_exception(first_fatal);

    MomentReport report;
    report.n = n;
    report.samples = samples;
    report.master_seed = master_seed;
    report.model_hash = field.model_hash();
    report.method = opts.method;
    report.i2 = i2_value;

    std::vector<double> w;
    w.reserve(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        if (!included[i]) continue;
        report.windings.push_back(w_by_index[i]);
        w.push_back(static_cast<double>(w_by_index[i]));
    }
    report.excluded = samples - w.size();
    if (static_cast<double>(report.excluded) > 0.01 * static_cast<double>(samples))
        throw TooManyExclusionsError("more than 1% of realizations failed winding "
                                     "extraction");

    const Moments base = compute_moments(w);

    // Bootstrap errors for every reported statistic.
    const int resamples = std::max(opts.bootstrap_resamples, 2);
    Xoshiro256 boot(derive_seed(master_seed, bootstrap_stream));
    const std::size_t m = w.size();
    std::vector<double> resample(m);
    double sum_mean = 0.0, sq_mean = 0.0;
    double sum_c[7] = {}, sq_c[7] = {};
    double sum_skew = 0.0, sq_skew = 0.0, sum_kurt = 0.0, sq_kurt = 0.0;
    for (int r = 0; r < resamples; ++r) {
        for (std::size_t i = 0; i < m; ++i)
            resample[i] = w[static_cast<std::size_t>(boot.next() % m)];
        const Moments mm = compute_moments(resample);
        sum_mean += mm.mean;
        sq_mean += mm.mean * mm.mean;
        for (int order = 1; order <= 6; ++order) {
            sum_c[order] += mm.central[order];
            sq_c[order] += mm.central[order] * mm.central[order];
        }
        sum_skew += mm.skewness;
        sq_skew += mm.skewness * mm.skewness;
        sum_kurt += mm.kurtosis;
        sq_kurt += mm.kurtosis * mm.kurtosis;
    }
    auto boot_sd = [resamples](double sum, double sq) {
        const double mean = sum / resamples;
        const double var = std::max(sq / resamples - mean * mean, 0.0);
        return std::sqrt(var * resamples / (resamples - 1.0));
    };

    report.mean = base.mean;
    report.mean_std_error = boot_sd(sum_mean, sq_mean);
    report.mean_predicted = analytic_mean_winding(field, n);
    report.mean_z = ratio_z(report.mean, report.mean_predicted, report.mean_std_error);

    for (int order = 1; order <= 6; ++order) {
        MomentRecord rec;
        rec.order = order;
        rec.value = base.central[order];
        rec.std_error = boot_sd(sum_c[order], sq_c[order]);
        rec.predicted = order == 1 ? 0.0 : predict_moments(n, order, i2_value).leading_value;
        rec.z = ratio_z(rec.value, rec.predicted, rec.std_error);
        report.central_moments.push_back(rec);
    }

    report.skewness = {3, base.skewness, boot_sd(sum_skew, sq_skew), 0.0, 0.0};
    report.skewness.z = ratio_z(report.skewness.value, 0.0, report.skewness.std_error);
    report.kurtosis = {4, base.kurtosis, boot_sd(sum_kurt, sq_kurt), 3.0, 0.0};
    report.kurtosis.z = ratio_z(report.kurtosis.value, 3.0, report.kurtosis.std_error);
    return report;
}

CorrelatorEstimate mc_corr(const CoefficientField& field, int n,
                           std::span<const double> points, std::size_t samples,
                           std::uint64_t master_seed, int workers) {
    const std::size_t k = points.size();
    if (k == 0 || k > 4) throw ModelError("mc_corr supports 1 <= k <= 4");
    if (samples < 2) throw ModelError("mc_corr requires samples >= 2");
    if (workers < 1) throw ModelError("worker count must be >= 1");

    std::vector<Complex> prod_by_index(samples);
    std::vector<std::uint8_t> included(samples, 0);
    std::vector<std::exception_ptr> fatal(static_cast<std::size_t>(workers));
    std::vector<std::size_t> fatal_index(static_cast<std::size_t>(workers), samples);
    std::atomic<std::size_t> cursor{0};

    auto worker_fn = [&](int worker_id) {
        for (;;) {
            const std::size_t idx = cursor.fetch_add(1);
            if (idx >= samples) return;
            try {
                const Realization real = sample(n, derive_seed(master_seed, idx));
                Complex prod{1.0, 0.0};
                for (double p : points) prod *= winding_density(real, field, p);
                prod_by_index[idx] = prod;
                included[idx] = 1;
            } catch (const NearSingularError&) {
                continue;
            } catch (...) {
                auto& slot = fatal[static_cast<std::size_t>(worker_id)];
                auto& slot_idx = fatal_index[static_cast<std::size_t>(worker_id)];
                if (idx < slot_idx) {
                    slot = std::current_exception();
                    slot_idx = idx;
                }
                return;
            }
        }
    };

    if (workers == 1) {
        worker_fn(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker_fn, t);
        for (std::thread& t : pool) t.join();
    }
    std::exception_ptr first_fatal;
    std::size_t first_index = samples;
    for (std::size_t t = 0; t < fatal.size(); ++t)
        if (fatal[t] && fatal_index[t] < first_index) {
            first_fatal = fatal[t];
            first_index = fatal_index[t];
        }
    if (first_fatal) std::rethrow_exception(first_fatal);

    CorrelatorEstimate est;
    est.points.assign(points.begin(), points.end());
    est.k = static_cast<int>(k);
    est.n = n;
    est.samples = samples;
    est.master_seed = master_seed;
    est.model_hash = field.model_hash();

    std::vector<Complex> values;
    values.reserve(samples);
    for (std::size_t i = 0; i < samples; ++i)
        if (included[i]) values.push_back(prod_by_index[i]);
    est.excluded = samples - values.size();
    if (static_cast<double>(est.excluded) > 0.01 * static_cast<double>(samples))
        throw TooManyExclusionsError("more than 1% of realizations excluded in mc_corr");
    if (values.size() < 2) throw TooManyExclusionsError("too few included realizations");

    Complex mean{0.0, 0.0};
    for (const Complex& v : values) mean += v;
    const double m = static_cast<double>(values.size());
    mean /= m;
    est.estimate = mean;

    // Jackknife standard error of the mean; for the plain mean this
    // reduces to sum |x_i - mean|^2 / (m (m - 1)), combining both
    // components of the complex estimate.
    double acc = 0.0;
    for (const Complex& v : values) acc += std::norm(v - mean);
    est.std_error = std::sqrt(acc / (m * (m - 1.0)));
    return est;
}

Verdict compare(const MomentReport& report, const PredictionConfig& config) {
    if (report.n != config.n)
        throw MismatchedConfigError("compare: dimension mismatch");
    if (report.model_hash != config.model_hash)
        throw MismatchedConfigError("compare: model hash mismatch");

    Verdict verdict;
    verdict.pass = true;
    auto push = [&verdict](const std::string& name, double value, double err,
                           double predicted, double z) {
        const bool ok = std::abs(z) < 3.0;
        verdict.entries.push_back({name, value, err, predicted, z, ok});
        verdict.pass = verdict.pass && ok;
    };
    push("mean", report.mean, report.mean_std_error, report.mean_predicted,
         report.mean_z);
    for (const MomentRecord& rec : report.central_moments) {
        if (rec.order == 1) continue;  // identically zero by construction
        push("central_moment_" + std::to_string(rec.order), rec.value, rec.std_error,
             rec.predicted, rec.z);
    }
    push("skewness", report.skewness.value, report.skewness.std_error, 0.0,
         report.skewness.z);
    push("kurtosis", report.kurtosis.value, report.kurtosis.std_error, 3.0,
         report.kurtosis.z);
    return verdict;
}

Verdict compare(const CorrelatorEstimate& estimate, Complex predicted,
                const PredictionConfig& config) {
    if (estimate.n != config.n)
        throw MismatchedConfigError("compare: dimension mismatch");
    if (estimate.model_hash != config.model_hash)
        throw MismatchedConfigError("compare: model hash mismatch");
    Verdict verdict;
    const double z = estimate.std_error > 0.0
                         ? std::abs(estimate.estimate - predicted) / estimate.std_error
                         : (estimate.estimate == predicted ? 0.0 : HUGE_VAL);
    const bool ok = z < 3.0;
    verdict.pass = ok;
    verdict.entries.push_back({"corr_" + std::to_string(estimate.k),
                               std::abs(estimate.estimate), estimate.std_error,
                               std::abs(predicted), z, ok});
    return verdict;
}

nlohmann::json report_to_json(const MomentReport& report, const nlohmann::json& config) {
    nlohmann::json doc;
    doc["schema_version"] = schema_version;
    doc["config"] = config;
    doc["model_hash"] = hash_hex(report.model_hash);
    doc["n"] = report.n;
    doc["samples"] = report.samples;
    doc["excluded"] = report.excluded;
    doc["master_seed"] = report.master_seed;
    doc["method"] = method_name(report.method);
    doc["i2"] = report.i2;
    doc["mean"] = {{"value", report.mean},
                   {"std_error", report.mean_std_error},
                   {"predicted", report.mean_predicted},
                   {"z", report.mean_z}};
    doc["central_moments"] = nlohmann::json::array();
    for (const MomentRecord& rec : report.central_moments)
        doc["central_moments"].push_back({{"order", rec.order},
                                          {"value", rec.value},
                                          {"std_error", rec.std_error},
                                          {"predicted", rec.predicted},
                                          {"z", rec.z}});
    doc["skewness"] = {{"value", report.skewness.value},
                       {"std_error", report.skewness.std_error},
                       {"predicted", 0.0},
                       {"z", report.skewness.z}};
    doc["kurtosis"] = {{"value", report.kurtosis.value},
                       {"std_error", report.kurtosis.std_error},
                       {"predicted", 3.0},
                       {"z", report.kurtosis.z}};
    return doc;
}

MomentReport report_from_json(const nlohmann::json& doc) {
    if (!doc.contains("schema_version") || doc["schema_version"].get<int>() != schema_version)
        throw MismatchedConfigError("unsupported report schema version");
    MomentReport report;
    report.n = doc.at("n").get<int>();
    report.samples = doc.at("samples").get<std::size_t>();
    report.excluded = doc.at("excluded").get<std::size_t>();
    report.master_seed = doc.at("master_seed").get<std::uint64_t>();
    report.model_hash = std::stoull(doc.at("model_hash").get<std::string>(), nullptr, 16);
    report.i2 = doc.at("i2").get<double>();
    const auto& mean = doc.at("mean");
    report.mean = mean.at("value").get<double>();
    report.mean_std_error = mean.at("std_error").get<double>();
    report.mean_predicted = mean.at("predicted").get<double>();
    report.mean_z = mean.at("z").get<double>();
    for (const auto& rec : doc.at("central_moments")) {
        MomentRecord r;
        r.order = rec.at("order").get<int>();
        r.value = rec.at("value").get<double>();
        r.std_error = rec.at("std_error").get<double>();
        r.predicted = rec.at("predicted").get<double>();
        r.z = rec.at("z").get<double>();
        report.central_moments.push_back(r);
    }
    auto read_ratio = [&doc](const char* key, int order) {
        const auto& rec = doc.at(key);
        MomentRecord r;
        r.order = order;
        r.value = rec.at("value").get<double>();
        r.std_error = rec.at("std_error").get<double>();
        r.predicted = rec.at("predicted").get<double>();
        r.z = rec.at("z").get<double>();
        return r;
    };
    report.skewness = read_ratio("skewness", 3);
    report.kurtosis = read_ratio("kurtosis", 4);
    return report;
}

nlohmann::json estimate_to_json(const CorrelatorEstimate& estimate,
                                const nlohmann::json& config) {
    nlohmann::json doc;
    doc["schema_version"] = schema_version;
    doc["config"] = config;
    doc["model_hash"] = hash_hex(estimate.model_hash);
    doc["n"] = estimate.n;
    doc["k"] = estimate.k;
    doc["points"] = estimate.points;
    doc["samples"] = estimate.samples;
    doc["excluded"] = estimate.excluded;
    doc["master_seed"] = estimate.master_seed;
    doc["estimate_re"] = estimate.estimate.real();
    doc["estimate_im"] = estimate.estimate.imag();
    doc["std_error"] = estimate.std_error;
    return doc;
}

nlohmann::json verdict_to_json(const Verdict& verdict, const nlohmann::json& config) {
    nlohmann::json doc;
    doc["schema_version"] = schema_version;
    doc["config"] = config;
    doc["pass"] = verdict.pass;
    doc["entries"] = nlohmann::json::array();
    for (const VerdictEntry& e : verdict.entries)
        doc["entries"].push_back({{"quantity", e.quantity},
                                  {"value", e.value},
                                  {"std_error", e.std_error},
                                  {"predicted", e.predicted},
                                  {"z", e.z},
                                  {"pass", e.pass}});
    return doc;
}

void write_histogram_csv(const MomentReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ModelError("cannot write histogram CSV: " + path);
    out << "bin_left,bin_right,count,gaussian_pdf_value\n";
    out.precision(17);
    if (report.windings.empty()) return;
    int lo = report.windings.front(), hi = lo;
    for (int w : report.windings) {
        lo = std::min(lo, w);
        hi = std::max(hi, w);
    }
    std::vector<std::size_t> counts(static_cast<std::size_t>(hi - lo + 1), 0);
    for (int w : report.windings) ++counts[static_cast<std::size_t>(w - lo)];
    for (int w = lo; w <= hi; ++w) {
        const double center = static_cast<double>(w);
        out << center - 0.5 << ',' << center + 0.5 << ','
            << counts[static_cast<std::size_t>(w - lo)] << ','
            << gaussian_pdf(center, report.mean, report.n, report.i2) << '\n';
    }
}

}  // namespace windingstats
