#pragma once

#include <random>

#include "gocart/numerics.hpp"

namespace gocart::testing {

// A A^T + eps I with entries of A uniform on [-1, 1].
inline Matrix random_spd(int p, Rng& rng, double eps = 0.5) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix a(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) a(i, j) = u(rng);
    return a * a.transpose() + eps * Matrix::Identity(p, p);
}

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace gocart::testing
