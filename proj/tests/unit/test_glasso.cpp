#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gocart/errors.hpp"
#include "gocart/glasso.hpp"
#include "helpers.hpp"

using namespace gocart;
using gocart::testing::max_abs;
using gocart::testing::random_spd;

namespace {

// Sample covariance of `n` draws from N(0, sigma).
Matrix sample_cov(const Matrix& sigma, int n, Rng& rng) {
    const Matrix z = sample_mvn(Vector::Zero(sigma.rows()), cholesky_logdet(sigma).factor, static_cast<std::size_t>(n), rng);
    return z.transpose() * z / n;
}

double grid_min_2x2(const Matrix& S, double lambda) {
    // Coarse-to-fine search over (w11, w22, w12) on the SPD cone.
    double c11 = 1.0, c22 = 1.0, c12 = 0.0, span = 2.0, best = INFINITY;
    for (int level = 0; level < 6; ++level) {
        const int steps = 40;
        double b11 = c11, b22 = c22, b12 = c12;
        for (int i = -steps; i <= steps; ++i)
            for (int j = -steps; j <= steps; ++j)
                for (int k = -steps; k <= steps; ++k) {
                    const double a = c11 + span * i / steps, b = c22 + span * j / steps, c = c12 + span * k / steps;
                    if (a <= 0 || b <= 0 || a * b - c * c <= 0) continue;
                    const double obj = S(0, 0) * a + S(1, 1) * b + 2 * S(0, 1) * c - std::log(a * b - c * c) +
                                       lambda * (a + b + 2 * std::abs(c));
                    if (obj < best) {
                        best = obj;
                        b11 = a;
                        b22 = b;
                        b12 = c;
                    }
                }
        c11 = b11;
        c22 = b22;
        c12 = b12;
        span /= 8.0;
    }
    return best;
}

}  // namespace

TEST_CASE("glasso at or above lambda_max is diagonal") {
    Rng rng(1);
    const Matrix S = sample_cov(random_spd(5, rng), 200, rng);
    const double lmax = lambda_max(S);
    for (double lambda : {lmax, 1.5 * lmax}) {
        const auto est = glasso_solve(S, lambda);
        CHECK(est.edges.empty());
        for (int i = 0; i < 5; ++i) CHECK(est.omega(i, i) == doctest::Approx(1.0 / (S(i, i) + lambda)).epsilon(1e-10));
    }
}

TEST_CASE("glasso at lambda = 0 is the inverse") {
    Rng rng(2);
    const Matrix S = random_spd(4, rng);
    const auto est = glasso_solve(S, 0.0);
    CHECK(max_abs(est.omega * S - Matrix::Identity(4, 4)) < 1e-8);
    CHECK(est.log_det == doctest::Approx(-log_det_spd(S)));
}

TEST_CASE("glasso on a 2x2 instance matches a parameter grid search") {
    Matrix S(2, 2);
    S << 1.0, 0.5, 0.5, 1.0;
    const auto est = glasso_solve(S, 0.1);
    const double oracle = grid_min_2x2(S, 0.1);
    CHECK(std::abs(glasso_objective(S, est.omega, 0.1) - oracle) < 1e-4);
}

TEST_CASE("lambda_max") {
    CHECK(lambda_max(Matrix::Identity(3, 3)) == 1e-3);
    Matrix S(2, 2);
    S << 1.0, 0.5, 0.5, 1.0;
    CHECK(lambda_max(S) == 0.5);
    CHECK(glasso_solve(S, lambda_max(S)).edges.empty());
}

TEST_CASE("reg_path structure") {
    Rng rng(3);
    const Matrix S = sample_cov(random_spd(6, rng), 100, rng);
    const auto path = reg_path(S);
    REQUIRE(path.lambdas.size() == 30);
    REQUIRE(path.estimates.size() == 30);
    for (std::size_t i = 1; i < path.lambdas.size(); ++i) CHECK(path.lambdas[i] < path.lambdas[i - 1]);
    CHECK(path.lambdas.front() == doctest::Approx(lambda_max(S)));
    CHECK(path.lambdas.back() == doctest::Approx(0.01 * lambda_max(S)));
    CHECK(path.estimates.front().edges.empty());

    const auto short_path = reg_path(S, 2, 1.0 - 1e-9);
    for (const auto& est : short_path.estimates) {
        Matrix off = est.omega;
        off.diagonal().setZero();
        CHECK(max_abs(off) < 1e-6);
    }
}

TEST_CASE("each path estimate beats its neighbours on its own objective") {
    Rng rng(4);
    const Matrix S = sample_cov(random_spd(5, rng), 80, rng);
    const auto path = reg_path(S, 12, 0.05);
    for (std::size_t i = 0; i < path.lambdas.size(); ++i) {
        const double own = glasso_objective(S, path.estimates[i].omega, path.lambdas[i]);
        for (std::size_t j : {i - 1, i + 1}) {
            if (j >= path.lambdas.size()) continue;
            CHECK(own <= glasso_objective(S, path.estimates[j].omega, path.lambdas[i]) + 1e-8);
        }
    }
}

TEST_CASE("glasso KKT holds on random instances") {
    Rng rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 60; ++rep) {
        const int p = 2 + rep % 5;
        const Matrix S = sample_cov(random_spd(p, rng), 3 * p, rng);
        const double lambda = u(rng) * lambda_max(S);
        const auto est = glasso_solve(S, lambda);
        CHECK(stationarity_residual(S, est) <= 1e-4);
        CHECK(is_symmetric(est.omega));
    }
}

TEST_CASE("glasso commutes with symmetric permutations") {
    Rng rng(6);
    for (int rep = 0; rep < 20; ++rep) {
        const int p = 3 + rep % 4;
        const Matrix S = sample_cov(random_spd(p, rng), 40, rng);
        std::vector<int> perm(static_cast<std::size_t>(p));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Eigen::PermutationMatrix<Eigen::Dynamic> P(p);
        for (int i = 0; i < p; ++i) P.indices()(i) = perm[static_cast<std::size_t>(i)];
        const double lambda = 0.3 * lambda_max(S);
        const auto a = glasso_solve(S, lambda);
        const auto b = glasso_solve(P * S * P.transpose(), lambda);
        CHECK(max_abs(P * a.omega * P.transpose() - b.omega) < 1e-5);
        CHECK(a.edges.size() == b.edges.size());
    }
}

TEST_CASE("glasso warm start reaches the cold solution") {
    Rng rng(7);
    const Matrix S = sample_cov(random_spd(6, rng), 50, rng);
    const auto first = glasso_solve(S, 0.4 * lambda_max(S));
    const auto warm = glasso_solve(S, 0.2 * lambda_max(S), &first);
    const auto cold = glasso_solve(S, 0.2 * lambda_max(S));
    CHECK(max_abs(warm.omega - cold.omega) < 1e-5);
}

TEST_CASE("refit_pattern closed forms") {
    Rng rng(8);
    const Matrix S = random_spd(4, rng);
    EdgeSet all;
    for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b) all.insert({a, b});
    CHECK(max_abs(refit_pattern(S, all).omega * S - Matrix::Identity(4, 4)) < 1e-6);

    const auto diag = refit_pattern(S, {});
    for (int i = 0; i < 4; ++i) CHECK(diag.omega(i, i) == doctest::Approx(1.0 / S(i, i)));
    Matrix off = diag.omega;
    off.diagonal().setZero();
    CHECK(off.isZero(0.0));
}

TEST_CASE("refit_pattern with a single edge matches the constrained optimum") {
    Rng rng(9);
    for (int rep = 0; rep < 10; ++rep) {
        const Matrix S = random_spd(3, rng);
        const auto est = refit_pattern(S, {{0, 1}});
        CHECK(est.omega(0, 2) == 0.0);
        CHECK(est.omega(1, 2) == 0.0);
        const double obj = glasso_objective(S, est.omega, 0.0);

        // The constrained problem separates into the {0,1} block and vertex 2.
        Matrix oracle = Matrix::Zero(3, 3);
        oracle.topLeftCorner(2, 2) = S.topLeftCorner(2, 2).inverse();
        oracle(2, 2) = 1.0 / S(2, 2);
        CHECK(std::abs(obj - glasso_objective(S, oracle, 0.0)) < 1e-4);

        // No feasible perturbation on a small grid does better.
        double best = INFINITY;
        for (int i = -3; i <= 3; ++i)
            for (int j = -3; j <= 3; ++j)
                for (int k = -3; k <= 3; ++k) {
                    Matrix w = est.omega;
                    w(0, 0) += 1e-3 * i;
                    w(1, 1) += 1e-3 * j;
                    w(0, 1) += 1e-3 * k;
                    w(1, 0) = w(0, 1);
                    if (w.llt().info() != Eigen::Success) continue;
                    best = std::min(best, glasso_objective(S, w, 0.0));
                }
        CHECK(obj <= best + 1e-12);
    }
}

TEST_CASE("refitting the glasso pattern cannot worsen the unpenalized fit") {
    Rng rng(10);
    for (int rep = 0; rep < 20; ++rep) {
        const Matrix S = sample_cov(random_spd(5, rng), 60, rng);
        const auto est = glasso_solve(S, 0.2 * lambda_max(S));
        const auto refit = refit_pattern(S, est.edges);
        CHECK(gaussian_loss(S, refit) <= gaussian_loss(S, est) + 1e-8);
        for (const auto& e : edges_of(refit.omega)) CHECK(est.edges.count(e) == 1);
    }
}

TEST_CASE("refit_pattern rejects singular input") {
    Matrix S = Matrix::Zero(3, 3);
    S(0, 0) = 1.0;
    CHECK_THROWS_AS(refit_pattern(S, {}), Error);
}

TEST_CASE("select_by_heldout") {
    Rng rng(11);
    const Matrix S = sample_cov(random_spd(4, rng), 80, rng);
    const Matrix H = sample_cov(random_spd(4, rng), 80, rng);

    SUBCASE("single entry") {
        RegPath path;
        path.lambdas = {0.1};
        path.estimates = {glasso_solve(S, 0.1)};
        const auto chosen = select_by_heldout(path, S, H, false);
        CHECK(chosen.omega == path.estimates[0].omega);
    }
    SUBCASE("ties go to the larger lambda") {
        RegPath path;
        const auto est = glasso_solve(S, 0.1);
        path.lambdas = {0.3, 0.2};
        path.estimates = {est, est};
        path.estimates[0].lambda = 0.3;
        path.estimates[1].lambda = 0.2;
        CHECK(select_by_heldout(path, S, H, false).lambda == 0.3);
    }
    SUBCASE("diagonal truth selects a near-diagonal entry") {
        Rng r(12);
        const Matrix truth = Matrix::Identity(6, 6);
        const Matrix train = sample_cov(truth, 500, r);
        const Matrix heldout = sample_cov(truth, 500, r);
        const auto chosen = select_by_heldout(reg_path(train), train, heldout, true);
        CHECK(chosen.edges.size() <= 2);
    }
}
