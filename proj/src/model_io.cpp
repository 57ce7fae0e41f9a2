#include "windingstats/model_io.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace windingstats {

namespace {

std::string strip(const std::string& s) {
    std::size_t lo = 0, hi = s.size();
    while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
    while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
    return s.substr(lo, hi - lo);
}

double parse_double(const std::string& text) {
    std::size_t pos = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &pos);
    } catch (const std::exception&) {
        throw ModelError("bad number: '" + text + "'");
    }
    if (pos != text.size()) throw ModelError("bad number: '" + text + "'");
    return value;
}

}  // namespace

Complex parse_complex(const std::string& text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    if (s.empty()) throw ModelError("empty complex literal");

    const bool has_i = s.back() == 'i' || s.back() == 'I';
    if (!has_i) return Complex(parse_double(s), 0.0);
    s.pop_back();

    // Find the sign separating the real from the imaginary part: the last
    // '+'/'-' that is not a leading sign and not part of an exponent.
    std::size_t split = std::string::npos;
    for (std::size_t i = s.size(); i-- > 1;) {
        if ((s[i] == '+' || s[i] == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') {
            split = i;
            break;
        }
    }
    if (split == std::string::npos) {
        // Pure imaginary: "0.5i", "-i", "i".
        if (s.empty() || s == "+") return Complex(0.0, 1.0);
        if (s == "-") return Complex(0.0, -1.0);
        return Complex(0.0, parse_double(s));
    }
    const std::string re = s.substr(0, split);
    std::string im = s.substr(split);
    if (im == "+") im = "1";
    if (im == "-") im = "-1";
    return Complex(parse_double(re), parse_double(im));
}

std::string format_complex(Complex z) {
    std::ostringstream out;
    out.precision(17);
    out << z.real() << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "i";
    return out.str();
}

CoefficientField parse_model(std::istream& in) {
    std::map<int, Complex> a_coeffs;
    std::map<int, Complex> b_coeffs;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = strip(line);
        if (line.empty()) continue;

        const std::size_t eq = line.find('=');
        const std::size_t lb = line.find('[');
        const std::size_t rb = line.find(']');
        if (eq == std::string::npos || lb == std::string::npos ||
            rb == std::string::npos || rb > eq || lb > rb)
            throw ModelError("model line " + std::to_string(lineno) +
                             ": expected 'a[m] = value'");
        const std::string name = strip(line.substr(0, lb));
        const int index = static_cast<int>(parse_double(strip(line.substr(lb + 1, rb - lb - 1))));
        const Complex value = parse_complex(line.substr(eq + 1));
        if (name == "a")
            a_coeffs[index] = value;
        else if (name == "b")
            b_coeffs[index] = value;
        else
            throw ModelError("model line " + std::to_string(lineno) +
                             ": unknown series '" + name + "'");
    }
    if (a_coeffs.empty() || b_coeffs.empty())
        throw ModelError("model must define both series a and b");
    return CoefficientField(LaurentSeries(std::move(a_coeffs)),
                            LaurentSeries(std::move(b_coeffs)));
}

CoefficientField load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open model file: " + path);
    return parse_model(in);
}

void write_model_file(const CoefficientField& field, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ModelError("cannot write model file: " + path);
    for (const auto& [m, c] : field.a().coeffs())
        out << "a[" << m << "] = " << format_complex(c) << "\n";
    for (const auto& [m, c] : field.b().coeffs())
        out << "b[" << m << "] = " << format_complex(c) << "\n";
}

namespace models {

CoefficientField trig() {
    // cos p = (e^{ip} + e^{-ip})/2, sin p = (e^{ip} - e^{-ip})/(2i)
    std::map<int, Complex> a{{1, {0.5, 0.0}}, {-1, {0.5, 0.0}}};
    std::map<int, Complex> b{{1, {0.0, -0.5}}, {-1, {0.0, 0.5}}};
    return CoefficientField(LaurentSeries(std::move(a)), LaurentSeries(std::move(b)));
}

CoefficientField reference_affine() {
    std::map<int, Complex> a{{0, {0.92, 0.82}}, {1, {0.91, -0.77}}};
    std::map<int, Complex> b{{0, {0.41, -0.95}}, {1, {-0.84, -0.70}}};
    return CoefficientField(LaurentSeries(std::move(a)), LaurentSeries(std::move(b)));
}

CoefficientField crossing() {
    std::map<int, Complex> a{{2, {0.5, 0.0}}, {-2, {0.5, 0.0}}};
    std::map<int, Complex> b{{1, {0.0, -0.5}}, {-1, {0.0, 0.5}}};
    return CoefficientField(LaurentSeries(std::move(a)), LaurentSeries(std::move(b)));
}

}  // namespace models

}  // namespace windingstats
