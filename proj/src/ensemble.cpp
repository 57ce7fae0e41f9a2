#include "windingstats/ensemble.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "windingstats/errors.hpp"
#include "windingstats/rng.hpp"

namespace windingstats {

Realization sample(int n, std::uint64_t seed) {
    if (n < 1) throw ModelError("matrix dimension must be >= 1");
    Realization real;
    real.n = n;
    real.seed = seed;
    real.k1.resize(n, n);
    real.k2.resize(n, n);
    Xoshiro256 rng(seed);
    for (Eigen::MatrixXcd* m : {&real.k1, &real.k2}) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) (*m)(i, j) = rng.complex_gaussian();
    }
    return real;
}

Eigen::MatrixXcd eval_k(const Realization& real, const CoefficientField& field,
                        double p, int order) {
    const Vec2c c = field.eval(p, order);
    return c(0) * real.k1 + c(1) * real.k2;
}

namespace {

Complex density_once(const Realization& real, const CoefficientField& field,
                     double p, bool& ok) {
    const Eigen::MatrixXcd k = eval_k(real, field, p, 0);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(k);
    if (lu.rcond() < 1e-12) {
        ok = false;
        return {};
    }
    ok = true;
    const Eigen::MatrixXcd kp = eval_k(real, field, p, 1);
    return lu.solve(kp).trace();
}

}  // namespace

Complex winding_density(const Realization& real, const CoefficientField& field,
                        double p) {
    bool ok = false;
    Complex w = density_once(real, field, p, ok);
    if (ok) return w;
    for (double shift : {1e-9, -1e-9}) {
        w = density_once(real, field, p + shift, ok);
        if (ok) return w;
    }
    throw NearSingularError("K(p) nearly singular at p = " + std::to_string(p));
}

Complex log_det_k(const Realization& real, const CoefficientField& field,
                  double p, double* rcond) {
    const Eigen::MatrixXcd k = eval_k(real, field, p, 0);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(k);
    if (rcond != nullptr) *rcond = lu.rcond();
    const auto& u = lu.matrixLU();
    double log_abs = 0.0;
    double arg = 0.0;
    for (int i = 0; i < real.n; ++i) {
        const Complex d = u(i, i);
        log_abs += std::log(std::abs(d));
        arg += std::arg(d);
    }
    if (lu.permutationP().determinant() < 0) arg += 3.14159265358979323846;
    return {log_abs, arg};
}

void save_realization(const Realization& real, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ModelError("cannot write realization dump: " + path);
    out.write("WSRE", 4);
    const std::uint32_t version = 1;
    const std::uint32_t n = static_cast<std::uint32_t>(real.n);
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(&real.seed), sizeof(real.seed));
    for (const Eigen::MatrixXcd* m : {&real.k1, &real.k2}) {
        for (int i = 0; i < real.n; ++i)
            for (int j = 0; j < real.n; ++j) {
                const Complex z = (*m)(i, j);
                const double buf[2] = {z.real(), z.imag()};
                out.write(reinterpret_cast<const char*>(buf), sizeof(buf));
            }
    }
    if (!out) throw ModelError("short write on realization dump: " + path);
}

Realization load_realization(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelError("cannot open realization dump: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "WSRE", 4) != 0)
        throw ModelError("bad realization dump magic");
    std::uint32_t version = 0, n = 0;
    std::uint64_t seed = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    in.read(reinterpret_cast<char*>(&seed), sizeof(seed));
    if (!in || version != 1) throw ModelError("unsupported realization dump version");
    Realization real;
    real.n = static_cast<int>(n);
    real.seed = seed;
    real.k1.resize(real.n, real.n);
    real.k2.resize(real.n, real.n);
    for (Eigen::MatrixXcd* m : {&real.k1, &real.k2}) {
        for (int i = 0; i < real.n; ++i)
            for (int j = 0; j < real.n; ++j) {
                double buf[2];
                in.read(reinterpret_cast<char*>(buf), sizeof(buf));
                (*m)(i, j) = Complex(buf[0], buf[1]);
            }
    }
    if (!in) throw ModelError("truncated realization dump: " + path);
    return real;
}

}  // namespace windingstats
