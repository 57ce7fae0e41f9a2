#pragma once

#include <span>
#include <string>
#include <vector>

#include "windingstats/coeff_field.hpp"

namespace windingstats {

// One point of a parallelism curve Gamma_j(t) on the (p,q)-torus. t is the
// accumulated arclength along the trace, so the tangent has unit norm in t.
struct CurveSample {
    double t = 0.0;
    double p = 0.0;
    double q = 0.0;
    double s1 = 1.0;  // sign Gamma'_{j,1}
    double s2 = 1.0;  // sign Gamma'_{j,2}
    double abs_delta_p = 0.0;
    double abs_delta_q = 0.0;
    double tangent_norm = 1.0;
};

struct Curve {
    std::vector<CurveSample> samples;  // closed: last sample repeats the first
    double length = 0.0;
};

struct CurveSet {
    std::vector<Curve> curves;
};

struct MomentPrediction {
    int order = 0;
    double leading_value = 0.0;
    double error_order = 0.0;  // power of N of the first neglected term
    double i2 = 0.0;
};

// Generating function Z_{k|k}(p, J), k <= 8, evaluated as the ratio of the
// two k x k determinants in its regularized form. Exactly 1 at J = 0.
Complex gen_func(const CoefficientField& field, int n, std::span<const double> p,
                 std::span<const double> j);

// k-point correlation function of the winding number density via the
// double sum over pair contractions and permutations. k <= 8.
Complex corr_k(const CoefficientField& field, int n, std::span<const double> p);

// Specializations used for k <= 3 (cross-checked against corr_k).
Complex corr_1(const CoefficientField& field, int n, double p);
Complex corr_2(const CoefficientField& field, int n, double p1, double p2);
Complex corr_3(const CoefficientField& field, int n, double p1, double p2, double p3);

// Derivative structure of the numerator determinant: the m-th mixed source
// derivative of F1 at J = 0, as an explicit determinant. Test hook for the
// simplified 2- and 3-point expressions.
Complex f1_derivative(const CoefficientField& field, int n, std::span<const double> p);

CurveSet find_parallel_curves(const CoefficientField& field, int scan_grid = 256);

// Unfolded k-point function f_k given tangent signs, |Delta| values and the
// rescaled offsets psi. Identically zero for odd k.
double unfolded_corr(std::span<const double> signs, std::span<const double> abs_delta,
                     std::span<const double> psi);

// Same sum with determinants evaluated numerically even for odd k; used to
// verify (rather than assume) that odd orders vanish.
double unfolded_corr_general(std::span<const double> signs,
                             std::span<const double> abs_delta,
                             std::span<const double> psi);

// f_2 at parameter t (arclength) of one curve in the set.
double unfolded_corr(const CoefficientField& field, const CurveSet& curves,
                     std::size_t curve_index, double t, std::span<const double> psi);

// Variance coefficient: (1/2 pi^{3/2}) sum_j closed-integral of
// s1 s2 ||Gamma'|| / sqrt(|Delta_1|^2 + |Delta_2|^2).
double i2(const CoefficientField& field, const CurveSet& curves);

// Third-moment curve integral; vanishes because f_3 does. Computed by
// quadrature as a consistency check, not hard-coded to zero.
double i3(const CoefficientField& field, const CurveSet& curves);

MomentPrediction predict_moments(int n, int k, double i2_value);

double gaussian_pdf(double w, double mean, int n, double i2_value);

// |det^{-1} form - closed product form| of the Cauchy determinant identity
// in terms of kappa = a/b; self-test, expected < 1e-10.
double cauchy_identity_check(const CoefficientField& field, std::span<const double> p,
                             std::span<const double> j);

// CSV columns: curve_id,t,p,q,s1,s2,abs_delta_p,abs_delta_q,tangent_norm
void export_curves_csv(const CurveSet& curves, const std::string& path);

}  // namespace windingstats
