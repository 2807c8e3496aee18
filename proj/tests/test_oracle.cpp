#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "felkit/oracle.hpp"
#include "testutil.hpp"

using namespace felkit;
using namespace felkit::oracle;
using testutil::rel_err;

namespace {

GridFunction grid_of(const std::function<cplx(double)>& f, double mu_max, int m) {
    return GridFunction::sample(f, mu_max, m);
}

GridFunction grid_from_solve(const std::vector<SolutionEvaluation>& sol) {
    GridFunction g;
    g.step = sol[1].mu - sol[0].mu;
    g.values.reserve(sol.size());
    for (const auto& ev : sol) g.values.push_back(ev.h);
    return g;
}

std::vector<double> uniform_grid(double mu_max, int m) {
    std::vector<double> g(m + 1);
    for (int i = 0; i <= m; ++i) g[i] = mu_max * i / m;
    return g;
}

}  // namespace

TEST_CASE("grunwald-letnikov derivative closed forms") {
    auto lin = grid_of([](double t) { return cplx{t, 0.0}; }, 1.0, 512);
    cplx d = rl_fractional_derivative(lin, 0.5, 1.0);
    CHECK(rel_err(d, cplx{1.1283791670955126, 0.0}) < 0.02);

    auto one = grid_of([](double) { return cplx{1.0, 0.0}; }, 1.0, 512);
    cplx dc = rl_fractional_derivative(one, 0.5, 1.0);
    CHECK(rel_err(dc, cplx{0.5641895835477563, 0.0}) < 0.02);

    auto sq = grid_of([](double t) { return cplx{t * t, 0.0}; }, 1.0, 2048);
    cplx d1 = rl_fractional_derivative(sq, 1.0, 0.5);
    CHECK(std::abs(d1 - cplx{1.0, 0.0}) < 1e-3);

    CHECK_THROWS_AS(rl_fractional_derivative(lin, 0.5, 1.0 / 512), std::invalid_argument);
    CHECK_THROWS_AS(rl_fractional_derivative(lin, 0.5, 0.3001), std::invalid_argument);
}

TEST_CASE("grunwald-letnikov error halves with the step") {
    const cplx want{1.1283791670955126, 0.0};
    double errs[2];
    int idx = 0;
    for (int m : {256, 512}) {
        auto lin = grid_of([](double t) { return cplx{t, 0.0}; }, 1.0, m);
        errs[idx++] = std::abs(rl_fractional_derivative(lin, 0.5, 1.0) - want);
    }
    CHECK(errs[0] / errs[1] > 1.6);
    CHECK(errs[0] / errs[1] < 2.4);
}

TEST_CASE("l1 caputo derivative closed forms") {
    auto c = grid_of([](double) { return cplx{3.0, -2.0}; }, 1.0, 512);
    CHECK(std::abs(caputo_fractional_derivative(c, 0.5, 1.0)) < 1e-10);

    auto lin = grid_of([](double t) { return cplx{t, 0.0}; }, 1.0, 512);
    CHECK(rel_err(caputo_fractional_derivative(lin, 0.5, 1.0),
                  cplx{1.1283791670955126, 0.0}) < 0.01);

    auto sq = grid_of([](double t) { return cplx{t * t, 0.0}; }, 1.0, 512);
    CHECK(rel_err(caputo_fractional_derivative(sq, 0.5, 1.0),
                  cplx{1.5045055561273502, 0.0}) < 0.01);

    // a in (1,2) and the integer ends
    CHECK(rel_err(caputo_fractional_derivative(sq, 1.5, 1.0),
                  cplx{2.2567583341910251, 0.0}) < 0.01);
    CHECK(std::abs(caputo_fractional_derivative(sq, 1.0, 0.5) - cplx{1.0, 0.0}) < 1e-3);
    auto cab = grid_of([](double t) { return cplx{t * t * t, 0.0}; }, 1.0, 512);
    CHECK(rel_err(caputo_fractional_derivative(cab, 2.0, 0.5), cplx{3.0, 0.0}) < 0.01);

    CHECK_THROWS_AS(caputo_fractional_derivative(sq, 2.5, 1.0), std::invalid_argument);
}

TEST_CASE("l1 error shrinks by 2^(2-a)") {
    const cplx want{1.5045055561273502, 0.0};
    double errs[2];
    int idx = 0;
    for (int m : {256, 512}) {
        auto sq = grid_of([](double t) { return cplx{t * t, 0.0}; }, 1.0, m);
        errs[idx++] = std::abs(caputo_fractional_derivative(sq, 0.5, 1.0) - want);
    }
    double ratio = errs[0] / errs[1];  // expect about 2^1.5 = 2.83
    CHECK(ratio > 2.2);
    CHECK(ratio < 3.5);
}

TEST_CASE("rl and caputo derivatives agree when the origin values vanish") {
    auto f = grid_of([](double t) { return cplx{t * t, t * t * t}; }, 1.0, 512);
    cplx rl = rl_fractional_derivative(f, 0.7, 1.0);
    cplx cap = caputo_fractional_derivative(f, 0.7, 1.0);
    CHECK(rel_err(rl, cap) < 0.01);
}

TEST_CASE("volterra right-hand side closed forms") {
    auto one = grid_of([](double) { return cplx{1.0, 0.0}; }, 1.0, 64);

    FELParameters p0;
    p0.a = 1.0;
    p0.omega = {0.0, 0.0};
    p0.delta_f = {1.0, 0.0};
    CHECK(rel_err(volterra_rhs(p0, one, Forcing::constant({1.0, 0.0}), 1.0),
                  cplx{1.0, 0.0}) < 1e-13);

    FELParameters p1;
    p1.b_kernel = 2.0;
    p1.zeta = 0.0;
    p1.x_cut = 0.0;
    p1.omega = {1.0, 0.0};
    CHECK(rel_err(volterra_rhs(p1, one, Forcing::constant({0.0, 0.0}), 1.0),
                  cplx{0.5, 0.0}) < 1e-12);

    // kernel t * E^2_{1,2}(i t) = t e^{it}; integral over [0,1] in closed form
    FELParameters p2 = p1;
    p2.c = 2.0;
    p2.rho = 1.0;
    p2.zeta = 1.0;
    cplx want = std::exp(cplx{0.0, 1.0}) * cplx{1.0, -1.0} - 1.0;
    CHECK(rel_err(volterra_rhs(p2, one, Forcing::constant({0.0, 0.0}), 1.0), want) < 1e-12);
}

TEST_CASE("residual of manufactured rl solutions") {
    // h(mu) = mu solves D^1 h = 0*conv + 1 with b_1 = h(0) = 0
    FELParameters p;
    p.a = 1.0;
    p.omega = {0.0, 0.0};
    p.delta_f = {1.0, 0.0};
    auto lin = grid_of([](double t) { return cplx{t, 0.0}; }, 1.0, 512);
    auto rep = residual_rl(p, InitialData::rl({{0.0, 0.0}}), Forcing::constant({1.0, 0.0}), lin);
    CHECK(rep.rel_residual <= 1e-3);

    auto zero = grid_of([](double) { return cplx{0.0, 0.0}; }, 1.0, 512);
    auto rep0 = residual_rl(p, InitialData::rl({{0.0, 0.0}}), Forcing::constant({0.0, 0.0}), zero);
    CHECK(rep0.max_abs_residual == 0.0);
    CHECK(rep0.rel_residual == 0.0);
}

TEST_CASE("residual of manufactured caputo solutions") {
    FELParameters pc;
    pc.a = 0.75;
    pc.omega = {0.0, 0.0};
    auto one = grid_of([](double) { return cplx{1.0, 0.0}; }, 1.0, 512);
    auto rep = residual_caputo(pc, InitialData::caputo({{1.0, 0.0}}),
                               Forcing::constant({0.0, 0.0}), one);
    CHECK(rep.rel_residual < 1e-10);

    // h = mu^(1/2)/Gamma(1.5) solves D^(1/2) h = 1 with a_0 = 0
    FELParameters ph;
    ph.a = 0.5;
    ph.omega = {0.0, 0.0};
    ph.delta_f = {1.0, 0.0};
    auto root = grid_of([](double t) { return cplx{std::sqrt(t) / 0.8862269254527580, 0.0}; },
                        1.0, 512);
    auto reph = residual_caputo(ph, InitialData::caputo({{0.0, 0.0}}),
                                Forcing::constant({1.0, 0.0}), root);
    CHECK(reph.rel_residual <= 1e-3);
}

TEST_CASE("solver output passes the independent residual check") {
    FELParameters p;
    p.a = 0.75;
    p.b_kernel = 1.5;
    p.c = 1.0;
    p.rho = 1.0;
    p.zeta = 2.0;
    p.omega = {0.2, 0.0};
    p.x_cut = 0.0;
    const int m = 4096;
    auto sol = solve_caputo(p, InitialData::caputo({{1.0, 0.0}}), Forcing::constant({0.0, 0.0}),
                            uniform_grid(1.0, m));
    auto rep = residual_caputo(p, InitialData::caputo({{1.0, 0.0}}),
                               Forcing::constant({0.0, 0.0}), grid_from_solve(sol));
    CHECK(rep.rel_residual <= 1e-5);
}

TEST_CASE("positive cutoff leaves a resolution-independent residual floor") {
    // The closed-form series is built from binomial symbols of parameter c*k,
    // but the exact resolvent expansion requires k-th powers of the
    // c-parameter symbol; those coincide only at x_cut = 0 (Vandermonde).
    // With x_cut > 0 the series misses the equation at order omega^2, so the
    // residual stalls at an omega^2-proportional floor instead of refining.
    FELParameters p;
    p.a = 0.75;
    p.b_kernel = 1.5;
    p.c = 1.0;
    p.rho = 1.0;
    p.zeta = 2.0;
    p.omega = {0.2, 0.0};
    p.x_cut = 1.0;
    auto init = InitialData::caputo({{1.0, 0.0}});
    Forcing g0 = Forcing::constant({0.0, 0.0});
    double rel[2];
    int idx = 0;
    for (int m : {512, 2048}) {
        auto sol = solve_caputo(p, init, g0, uniform_grid(1.0, m));
        rel[idx++] = residual_caputo(p, init, g0, grid_from_solve(sol)).rel_residual;
    }
    CHECK(rel[0] > 5e-4);
    CHECK(rel[1] > 5e-4);
    CHECK(rel[0] / rel[1] > 0.8);
    CHECK(rel[0] / rel[1] < 1.25);

    // and the floor scales like |omega|^2
    p.omega = {0.1, 0.0};
    auto sol = solve_caputo(p, init, g0, uniform_grid(1.0, 512));
    double quarter = residual_caputo(p, init, g0, grid_from_solve(sol)).rel_residual;
    CHECK(rel[0] / quarter > 3.0);
    CHECK(rel[0] / quarter < 5.0);
}

TEST_CASE("residual detects corrupted solutions") {
    FELParameters p;
    p.a = 0.75;
    p.b_kernel = 1.5;
    p.c = 1.0;
    p.rho = 1.0;
    p.zeta = 2.0;
    p.omega = {0.2, 0.0};
    p.x_cut = 0.0;
    auto init = InitialData::caputo({{1.0, 0.0}});
    auto sol = solve_caputo(p, init, Forcing::constant({0.0, 0.0}), uniform_grid(1.0, 512));
    auto clean = grid_from_solve(sol);
    auto rep = residual_caputo(p, init, Forcing::constant({0.0, 0.0}), clean);
    CHECK(rep.rel_residual <= 1e-3);

    GridFunction bad = clean;
    for (auto& v : bad.values) v += 0.01;
    auto repb = residual_caputo(p, init, Forcing::constant({0.0, 0.0}), bad);
    CHECK(repb.rel_residual > 1e-2);
}

TEST_CASE("numerical laplace closed forms") {
    auto one = grid_of([](double) { return cplx{1.0, 0.0}; }, 40.0, 128);
    double tail = 0.0;
    CHECK(std::abs(numerical_laplace(one, {2.0, 0.0}, &tail) - cplx{0.5, 0.0}) < 1e-12);
    CHECK(tail < 1e-12);

    auto lin = grid_of([](double t) { return cplx{t, 0.0}; }, 60.0, 128);
    CHECK(std::abs(numerical_laplace(lin, {1.0, 0.0}) - cplx{1.0, 0.0}) < 1e-10);

    auto osc = [](double t) { return std::exp(cplx{0.0, t}); };
    CHECK(std::abs(numerical_laplace(osc, {2.0, 0.0}) - cplx{0.4, 0.2}) < 1e-10);

    CHECK_THROWS_AS(numerical_laplace(one, {-1.0, 0.0}), std::domain_error);
    CHECK_THROWS_AS(numerical_laplace(osc, {0.0, 1.0}), std::domain_error);
}

TEST_CASE("fixed talbot inversion closed forms") {
    auto inv_s = [](cplx s) { return 1.0 / s; };
    CHECK(std::abs(talbot_invert(inv_s, 1.0) - cplx{1.0, 0.0}) < 1e-10);

    auto inv_s2 = [](cplx s) { return 1.0 / (s * s); };
    CHECK(std::abs(talbot_invert(inv_s2, 0.5) - cplx{0.5, 0.0}) < 1e-10);

    auto inv_sqrt = [](cplx s) { return std::pow(s, -0.5); };
    CHECK(std::abs(talbot_invert(inv_sqrt, 1.0) - cplx{0.5641895835477563, 0.0}) < 1e-8);

    CHECK_THROWS_AS(talbot_invert(inv_s, 0.0), std::domain_error);
}

TEST_CASE("laplace round trip against closed-form images") {
    struct Pair {
        std::function<cplx(cplx)> image;
        std::function<cplx(double)> original;
    };
    std::vector<Pair> pairs;
    pairs.push_back({[](cplx s) { return 1.0 / s; }, [](double) { return cplx{1.0, 0.0}; }});
    pairs.push_back({[](cplx s) { return 1.0 / (s * s); }, [](double t) { return cplx{t, 0.0}; }});
    pairs.push_back({[](cplx s) { return 1.0 / (s - cplx{0.0, 1.0}); },
                     [](double t) { return std::exp(cplx{0.0, t}); }});
    pairs.push_back({[](cplx s) { return std::pow(s, -0.5); },
                     [](double t) { return cplx{1.0 / std::sqrt(M_PI * t), 0.0}; }});
    for (const auto& pr : pairs) {
        for (double t : {0.25, 0.5, 1.0}) {
            cplx got = talbot_invert(pr.image, t);
            CHECK(std::abs(got - pr.original(t)) < 1e-7);
        }
    }
}

TEST_CASE("talbot inversion of the kernel laplace image matches kernel_aleph") {
    FELParameters p;
    p.a = 0.8;
    p.b_kernel = 2.0;
    p.c = 1.0;
    p.rho = 1.0;
    p.zeta = 1.0;
    p.x_cut = 0.5;
    p.omega = {0.3, 0.0};
    // image of aleph: s^{-a} sum_k (omega s^{-a-b})^k (1 - i zeta s^{-rho})^{-[c;x]k}
    auto image = [&](cplx s) {
        cplx acc{0.0, 0.0};
        cplx upow{1.0, 0.0};
        cplx u = p.omega * std::pow(s, -(p.a + p.b_kernel));
        for (int k = 0; k < 60; ++k) {
            if (k > 0) upow *= u;
            cplx bk = k == 0 ? cplx{1.0, 0.0}
                             : incomplete_binomial(p.c * k, p.x_cut,
                                                   cplx{0.0, p.zeta} * std::pow(s, -p.rho),
                                                   TruncationControl{})
                                   .value;
            acc += upow * bk;
        }
        return std::pow(s, -p.a) * acc;
    };
    cplx via_talbot = talbot_invert(image, 0.5);
    SeriesValue direct = kernel_aleph(p, 0.5);
    CHECK(rel_err(via_talbot, direct.value) < 1e-8);
}

TEST_CASE("classical reference integrator") {
    auto flat = classical_fel_reference(0.0, 0.7, 64);
    for (const auto& v : flat.values) CHECK(std::abs(v - cplx{1.0, 0.0}) < 1e-14);

    // nu = 0: power-series solution by term recurrence
    const double g0 = 0.1;
    cplx ref{0.0, 0.0};
    cplx ck{1.0, 0.0};
    for (int k = 0; k < 30; ++k) {
        if (k > 0) {
            double k3 = 3.0 * (k - 1);
            ck *= cplx{0.0, -M_PI * g0} / ((k3 + 1.0) * (k3 + 2.0) * (k3 + 3.0));
        }
        ref += ck;  // evaluated at mu = 1
    }
    auto run = classical_fel_reference(g0, 0.0, 2048);
    CHECK(std::abs(run.values.back() - ref) < 1e-6);

    // order-2 convergence toward the series value
    double e1 = std::abs(classical_fel_reference(g0, 0.0, 512).values.back() - ref);
    double e2 = std::abs(classical_fel_reference(g0, 0.0, 1024).values.back() - ref);
    double ratio = e1 / e2;
    CHECK(ratio > 3.0);
    CHECK(ratio < 5.0);
}

TEST_CASE("classical equation matches the series solver at matching parameters") {
    // D^1 h = -i pi g0 int psi e^{i nu psi} h(mu-psi) dpsi is the a=1, b=2,
    // c=2, rho=1, zeta=nu, x=0 instance of the general equation
    const double g0 = 0.1, nu = 1.0;
    FELParameters p;
    p.a = 1.0;
    p.b_kernel = 2.0;
    p.c = 2.0;
    p.rho = 1.0;
    p.zeta = nu;
    p.x_cut = 0.0;
    p.omega = {0.0, -M_PI * g0};
    auto ref = classical_fel_reference(g0, nu, 4096);
    auto sol = solve_rl(p, InitialData::rl({{1.0, 0.0}}), Forcing::constant({0.0, 0.0}),
                        {0.25, 0.5, 1.0});
    for (const auto& ev : sol) {
        int idx = ref.node_index(ev.mu);
        CHECK(std::abs(ev.h - ref.values[idx]) < 1e-6);
    }
}
