#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "windingstats/analytic.hpp"
#include "windingstats/winding.hpp"

namespace windingstats {

struct MomentRecord {
    int order = 0;
    double value = 0.0;
    double std_error = 0.0;  // bootstrap
    double predicted = 0.0;
    double z = 0.0;
};

struct MomentReport {
    int n = 0;
    std::size_t samples = 0;   // requested
    std::size_t excluded = 0;  // realizations dropped on numerical failure
    std::uint64_t master_seed = 0;
    std::uint64_t model_hash = 0;
    WindingMethod method = WindingMethod::pencil;
    double i2 = 0.0;

    double mean = 0.0;
    double mean_std_error = 0.0;
    double mean_predicted = 0.0;
    double mean_z = 0.0;

    std::vector<MomentRecord> central_moments;  // orders 1..6
    MomentRecord skewness;                      // predicted 0
    MomentRecord kurtosis;                      // predicted 3

    std::vector<int> windings;  // included W values, realization-index order
};

struct CorrelatorEstimate {
    std::vector<double> points;
    int k = 0;
    int n = 0;
    Complex estimate{0.0, 0.0};
    double std_error = 0.0;  // jackknife, combined real+imaginary
    std::size_t samples = 0;
    std::size_t excluded = 0;
    std::uint64_t master_seed = 0;
    std::uint64_t model_hash = 0;
};

struct McOptions {
    int workers = 1;
    WindingMethod method = WindingMethod::pencil;
    int bootstrap_resamples = 1000;
    // First realizations are additionally run through the independent
    // extractors and must agree exactly.
    int cross_check_count = 10;
};

// Analytic ensemble mean of W for the (periodic) field: the contour
// average of the mean winding density n * vdag v' / vdag v over 2 pi i.
double analytic_mean_winding(const CoefficientField& field, int n);

// Draws `samples` realizations with per-index derived seeds, extracts W
// for each, and reports centered empirical moments with bootstrap errors
// and z-scores against the curve-quadrature predictions. Deterministic for
// fixed master_seed regardless of worker count.
MomentReport mc_winding_moments(const CoefficientField& field, int n,
                                std::size_t samples, std::uint64_t master_seed,
                                const McOptions& opts = {});

// Monte Carlo estimate of < w(p_1) ... w(p_k) > with jackknife errors.
CorrelatorEstimate mc_corr(const CoefficientField& field, int n,
                           std::span<const double> points, std::size_t samples,
                           std::uint64_t master_seed, int workers = 1);

struct VerdictEntry {
    std::string quantity;
    double value = 0.0;
    double std_error = 0.0;
    double predicted = 0.0;
    double z = 0.0;
    bool pass = false;
};

struct Verdict {
    bool pass = false;
    std::vector<VerdictEntry> entries;
};

// Expected configuration a verdict is judged against.
struct PredictionConfig {
    int n = 0;
    std::uint64_t model_hash = 0;
};

// |z| < 3 verdicts per quantity; throws MismatchedConfigError if n or the
// model hash disagrees with the report.
Verdict compare(const MomentReport& report, const PredictionConfig& config);
Verdict compare(const CorrelatorEstimate& estimate, Complex predicted,
                const PredictionConfig& config);

inline constexpr int schema_version = 1;

nlohmann::json report_to_json(const MomentReport& report, const nlohmann::json& config);
// Inverse of report_to_json for the fields compare() needs; the winding
// sample list is not persisted and comes back empty.
MomentReport report_from_json(const nlohmann::json& doc);
nlohmann::json estimate_to_json(const CorrelatorEstimate& estimate,
                                const nlohmann::json& config);
nlohmann::json verdict_to_json(const Verdict& verdict, const nlohmann::json& config);

// Unit-width bins centered on integers; columns
// bin_left,bin_right,count,gaussian_pdf_value with the Gaussian overlay
// evaluated at the bin center.
void write_histogram_csv(const MomentReport& report, const std::string& path);

}  // namespace windingstats
