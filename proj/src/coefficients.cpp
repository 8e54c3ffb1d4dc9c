#include "sfdg/coefficients.hpp"

#include <cmath>
#include <stdexcept>

namespace sfdg {

void CoefficientSet::validate() const {
    if (dim < 2 || dim > kMaxDim)
        throw std::invalid_argument("coefficients: dimension must be 2 or 3");
    if (has_diffusion() && !diffusion)
        throw ConfigError("coefficients: diffusion flagged but no evaluator given");
    if (has_velocity() && !velocity)
        throw ConfigError("coefficients: velocity flagged but no evaluator given");
    if (has_reaction() && !reaction)
        throw ConfigError("coefficients: reaction flagged but no evaluator given");
    if (has_source() && !source)
        throw ConfigError("coefficients: source flagged but no evaluator given");
}

bool is_spd(int d, const double* a) {
    double l[9] = {};
    for (int i = 0; i < d; ++i)
        for (int j = 0; j <= i; ++j) {
            if (a[i * d + j] != a[j * d + i])
                return false;
            double s = a[i * d + j];
            for (int k = 0; k < j; ++k)
                s -= l[i * d + k] * l[j * d + k];
            if (i == j) {
                if (!(s > 0.0))
                    return false;
                l[i * d + i] = std::sqrt(s);
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    return true;
}

} // namespace sfdg
