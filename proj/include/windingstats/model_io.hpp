#pragma once

#include <iosfwd>
#include <string>

#include "windingstats/coeff_field.hpp"

namespace windingstats {

// Plain-text model files: one coefficient per line, e.g.
//   a[0] = 0.92 + 0.82i
//   b[1] = -0.84 - 0.70i
// '#' starts a comment. Both series must end up non-empty; non-finite
// values are rejected.
CoefficientField parse_model(std::istream& in);
CoefficientField load_model_file(const std::string& path);
void write_model_file(const CoefficientField& field, const std::string& path);

Complex parse_complex(const std::string& text);
std::string format_complex(Complex z);

namespace models {

// v(p) = (cos p, sin p)
CoefficientField trig();

// a(p) = a1 + a2 e^{ip}, b(p) = b1 + b2 e^{ip} with the reference
// parameter set a1 = 0.92+0.82i, a2 = 0.91-0.77i, b1 = 0.41-0.95i,
// b2 = -0.84-0.70i.
CoefficientField reference_affine();

// v(p) = (cos 2p, sin p); its two parallelism curves cross at t = pi/2.
CoefficientField crossing();

}  // namespace models

}  // namespace windingstats
