#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>

#include "test_support.hpp"
#include "vsl/geometry.hpp"
#include "vsl/problem.hpp"
#include "vsl/propagate.hpp"
#include "vsl/wronskian.hpp"

using namespace vsl;
using namespace vsl_test;
using Catch::Approx;

namespace {

ProblemDef scalar_problem(Complex t_minus, Complex t_plus, Complex v = 0.0) {
    ProblemDef p;
    p.n = 1;
    p.potential = Potential{PotentialKind::Constant, {ComplexMatrix{{v}}}, {}};
    p.bc.t_minus = ComplexMatrix{{t_minus}};
    p.bc.t_plus = ComplexMatrix{{t_plus}};
    p.bc.a = ComplexMatrix{{0.0}};
    p.bc.b = ComplexMatrix{{0.0}};
    return p;
}

ComplexMatrix span_projector(const std::vector<Complex>& v) {
    ComplexMatrix col(v.size(), 1);
    for (std::size_t i = 0; i < v.size(); ++i) col(i, 0) = v[i];
    return projector_from_columns(orthonormal_columns(col));
}

ProblemDef twisted_problem(double gamma, std::size_t n_extra_dd = 0) {
    const std::size_t n = 2 + n_extra_dd;
    ProblemDef p;
    p.n = n;
    p.potential = Potential::zero(n);
    std::vector<Complex> e1(n, 0.0), u(n, 0.0);
    e1[0] = 1.0;
    u[0] = std::cos(gamma);
    u[1] = std::sin(gamma);
    ComplexMatrix tm = span_projector(e1);
    ComplexMatrix tp = span_projector(u);
    for (std::size_t k = 2; k < n; ++k) {
        std::vector<Complex> ek(n, 0.0);
        ek[k] = 1.0;
        tm += span_projector(ek);
        tp += span_projector(ek);
    }
    p.bc.t_minus = tm;
    p.bc.t_plus = tp;
    p.bc.a = ComplexMatrix(n, n);
    p.bc.b = ComplexMatrix(n, n);
    return p;
}

ComplexMatrix unperturbed_from_products(const ProblemDef& p, Complex lambda) {
    const Complex w = std::sqrt(lambda);
    const TrigPair t = entire_trig(lambda);
    const ComplexMatrix tm = p.bc.t_minus;
    const ComplexMatrix tp = p.bc.t_plus;
    const ComplexMatrix tm_perp = ComplexMatrix::identity(p.n) - tm;
    const ComplexMatrix tp_perp = ComplexMatrix::identity(p.n) - tp;
    ComplexMatrix out(p.n, p.n);
    out += (-(w * std::sin(w))) * (tp_perp * tm_perp);
    out += t.c * (tp_perp * tm);
    out += (-t.c) * (tp * tm_perp);
    out += (-t.s) * (tp * tm);
    return out;
}

} // namespace

TEST_CASE("scalar Wronskians reduce to the classical characteristic functions") {
    const Complex lambda = 4.0;
    SECTION("Dirichlet at both ends") {
        const WronskianValue wv = wronskian(scalar_problem(1.0, 1.0), lambda);
        REQUIRE(wv.kappa == 0.0);
        REQUIRE(wv.w(0, 0).real() == Approx(-std::sin(2.0) / 2.0).margin(1e-10));
        REQUIRE(wv.w(0, 0).imag() == Approx(0.0).margin(1e-12));
    }
    SECTION("Neumann at both ends") {
        const WronskianValue wv = wronskian(scalar_problem(0.0, 0.0), lambda);
        REQUIRE(wv.w(0, 0).real() == Approx(-2.0 * std::sin(2.0)).margin(1e-10));
    }
    SECTION("Dirichlet left, Neumann right") {
        const WronskianValue wv = wronskian(scalar_problem(1.0, 0.0), lambda);
        REQUIRE(wv.w(0, 0).real() == Approx(std::cos(2.0)).margin(1e-10));
    }
    SECTION("Neumann left, Dirichlet right") {
        const WronskianValue wv = wronskian(scalar_problem(0.0, 1.0), lambda);
        REQUIRE(wv.w(0, 0).real() == Approx(-std::cos(2.0)).margin(1e-10));
    }
    SECTION("negative lambda stays in the rescaled gauge") {
        const WronskianValue wv = wronskian(scalar_problem(1.0, 1.0), -1.0);
        REQUIRE(wv.kappa == Approx(1.0));
        const Complex truth = wv.w(0, 0) * std::exp(wv.kappa);
        REQUIRE(truth.real() == Approx(-std::sinh(1.0)).margin(1e-10));
    }
    SECTION("Dirichlet values at the quarter and full period") {
        const double pi = std::numbers::pi;
        const WronskianValue quarter = wronskian(scalar_problem(1.0, 1.0), pi * pi / 4.0);
        REQUIRE(quarter.w(0, 0).real() == Approx(-2.0 / pi).margin(1e-10));
        const WronskianValue node = wronskian(scalar_problem(1.0, 1.0), pi * pi);
        REQUIRE(std::abs(node.w(0, 0)) <= 1e-9);
    }
}

TEST_CASE("determinant bookkeeping keeps the exponent separate") {
    const DetValue d = det_w(scalar_problem(1.0, 1.0), -1.0);
    REQUIRE(d.exponent == Approx(1.0));
    REQUIRE(d.value().real() == Approx(-std::sinh(1.0)).margin(1e-9));
    REQUIRE(std::abs(d.mantissa) < 1.0);

    const double root = 5.0 * std::numbers::pi / 6.0;
    const DetValue tw = det_w(twisted_problem(std::numbers::pi / 6), root * root);
    REQUIRE(std::abs(tw.mantissa) <= 1e-9);
}

TEST_CASE("free Wronskian closed values at the quarter period") {
    const double pi = std::numbers::pi;
    const double lambda = pi * pi / 4.0;
    const BoundaryGeometry dirichlet = decompose(ComplexMatrix::identity(2),
                                                 ComplexMatrix::identity(2));
    const ComplexMatrix wd = unperturbed(dirichlet, lambda);
    REQUIRE((wd - Complex(-2.0 / pi, 0.0) * ComplexMatrix::identity(2)).frobenius() <= 1e-12);
    const BoundaryGeometry neumann = decompose(ComplexMatrix(2, 2), ComplexMatrix(2, 2));
    const ComplexMatrix wn = unperturbed(neumann, lambda);
    REQUIRE((wn - Complex(-pi / 2.0, 0.0) * ComplexMatrix::identity(2)).frobenius() <= 1e-12);

    const ProblemDef tw = twisted_problem(pi / 6);
    const BoundaryGeometry g = decompose(tw.bc.t_minus, tw.bc.t_plus);
    const double gamma2 = (pi / 6) * (pi / 6);
    const auto sv = singular_values(unperturbed(g, gamma2));
    REQUIRE(sv.back() <= 1e-10);
}

TEST_CASE("the free Wronskian matches its geometric form") {
    const ProblemDef p = twisted_problem(std::numbers::pi / 6);
    const BoundaryGeometry g = decompose(p.bc.t_minus, p.bc.t_plus);
    for (Complex lambda : {Complex(2.3, 0.0), Complex(-1.5, 0.0), Complex(4.0, 3.0)}) {
        const WronskianValue wv = wronskian(p, lambda);
        const ScaledMatrix w0 = unperturbed_scaled(g, lambda);
        REQUIRE(wv.kappa == Approx(w0.kappa).margin(1e-14));
        REQUIRE((wv.w - w0.m).frobenius() <= 1e-8 * (1.0 + w0.m.frobenius()));
    }
}

TEST_CASE("both routes to the free Wronskian agree") {
    auto check = [](const ProblemDef& p) {
        const BoundaryGeometry g = decompose(p.bc.t_minus, p.bc.t_plus);
        for (Complex lambda : {Complex(1.7, 0.0), Complex(6.5, -2.0), Complex(-0.8, 0.4)}) {
            const ComplexMatrix via_geometry = unperturbed(g, lambda);
            const ComplexMatrix via_products = unperturbed_from_products(p, lambda);
            REQUIRE((via_geometry - via_products).frobenius() <=
                    1e-11 * (1.0 + via_products.frobenius()));
        }
    };
    check(twisted_problem(std::numbers::pi / 6));
    check(twisted_problem(0.9, 1));
    ProblemDef mixed;
    mixed.n = 2;
    mixed.potential = Potential::zero(2);
    mixed.bc.t_minus = ComplexMatrix{{1.0, 0.0}, {0.0, 0.0}};
    mixed.bc.t_plus = ComplexMatrix{{0.0, 0.0}, {0.0, 1.0}};
    mixed.bc.a = ComplexMatrix(2, 2);
    mixed.bc.b = ComplexMatrix(2, 2);
    check(mixed);
}

TEST_CASE("the closed-form inverse really inverts the free Wronskian") {
    std::mt19937_64 rng(kSeed);
    std::uniform_real_distribution<double> re(0.5, 45.0), im(-4.0, 4.0);
    auto check = [&](const ComplexMatrix& tm, const ComplexMatrix& tp) {
        const BoundaryGeometry g = decompose(tm, tp);
        const ComplexMatrix id = ComplexMatrix::identity(g.n);
        std::size_t done = 0;
        while (done < 12) {
            const Complex lambda(re(rng), im(rng));
            if (detail::exceptional_distance(std::sqrt(lambda), g) < 1e-2) continue;
            const ScaledMatrix w0 = unperturbed_scaled(g, lambda);
            const ScaledMatrix w0_inv = unperturbed_inverse_scaled(g, lambda);
            REQUIRE((w0.m * w0_inv.m - id).frobenius() <= 1e-8);
            REQUIRE((w0_inv.m * w0.m - id).frobenius() <= 1e-8);
            ++done;
        }
    };
    const double g6 = std::numbers::pi / 6;
    check(twisted_problem(g6).bc.t_minus, twisted_problem(g6).bc.t_plus);
    check(twisted_problem(0.9, 1).bc.t_minus, twisted_problem(0.9, 1).bc.t_plus);
    check(ComplexMatrix::identity(2), ComplexMatrix::identity(2));
    check(ComplexMatrix{{1.0, 0.0}, {0.0, 0.0}}, ComplexMatrix{{0.0, 0.0}, {0.0, 1.0}});
}

TEST_CASE("a pure Dirichlet inverse has its closed scalar value") {
    const BoundaryGeometry g = decompose(ComplexMatrix::identity(1), ComplexMatrix::identity(1));
    const double pi = std::numbers::pi;
    const ComplexMatrix inv = unperturbed_inverse(g, pi * pi / 4.0);
    REQUIRE(inv(0, 0).real() == Approx(-pi / 2.0).margin(1e-12));
}

TEST_CASE("the twisted inverse is exact away from its singular set") {
    const ProblemDef p = twisted_problem(std::numbers::pi / 6);
    const BoundaryGeometry g = decompose(p.bc.t_minus, p.bc.t_plus);
    const ComplexMatrix prod = unperturbed(g, 2.0) * unperturbed_inverse(g, 2.0);
    REQUIRE((prod - ComplexMatrix::identity(2)).frobenius() <= 1e-10);
}

TEST_CASE("the inverse refuses only the singular points of its own geometry") {
    const ProblemDef p = twisted_problem(std::numbers::pi / 6);
    const BoundaryGeometry g = decompose(p.bc.t_minus, p.bc.t_plus);
    const double gamma = std::numbers::pi / 6;
    const double pi = std::numbers::pi;
    REQUIRE_THROWS_AS(unperturbed_inverse_scaled(g, Complex(gamma * gamma, 0.0)),
                      NearExceptionalSet);
    REQUIRE_THROWS_AS(unperturbed_inverse_scaled(g, Complex(pi * pi, 0.0)), NearExceptionalSet);
    REQUIRE_NOTHROW(unperturbed_inverse_scaled(g, Complex(pi * pi / 4.0, 0.0)));
    REQUIRE_NOTHROW(unperturbed_inverse_scaled(g, Complex(2.0, 0.0)));

    const BoundaryGeometry mixed = decompose(ComplexMatrix{{1.0, 0.0}, {0.0, 0.0}},
                                             ComplexMatrix{{0.0, 0.0}, {0.0, 1.0}});
    REQUIRE_THROWS_AS(unperturbed_inverse_scaled(mixed, Complex(pi * pi / 4.0, 0.0)),
                      NearExceptionalSet);
    REQUIRE_NOTHROW(unperturbed_inverse_scaled(mixed, Complex(pi * pi, 0.0)));
}

TEST_CASE("det W0 factors over the series") {
    auto formula = [](const BoundaryGeometry& g, Complex lambda) {
        const Complex w = std::sqrt(lambda);
        Complex out = 1.0;
        for (std::size_t k = 0; k < g.dim_nn; ++k) out *= -w * std::sin(w);
        for (std::size_t k = 0; k < g.dim_nd; ++k) out *= -std::cos(w);
        for (std::size_t k = 0; k < g.dim_dn; ++k) out *= std::cos(w);
        for (std::size_t k = 0; k < g.dim_dd; ++k) out *= -std::sin(w) / w;
        for (const auto& blk : g.twisted)
            for (std::size_t k = 0; k < blk.dim; ++k)
                out *= std::sin(w - blk.gamma) * std::sin(w + blk.gamma);
        return out;
    };
    auto check = [&](const ComplexMatrix& tm, const ComplexMatrix& tp) {
        const BoundaryGeometry g = decompose(tm, tp);
        for (Complex lambda : {Complex(2.7, 0.0), Complex(5.0, -2.0), Complex(11.3, 1.1)}) {
            const Complex lhs = det_unperturbed(g, lambda).value();
            const Complex rhs = formula(g, lambda);
            REQUIRE(std::abs(lhs - rhs) <= 1e-10 * (1.0 + std::abs(rhs)));
        }
    };
    const ProblemDef tw = twisted_problem(std::numbers::pi / 6);
    check(tw.bc.t_minus, tw.bc.t_plus);
    const ProblemDef tw3 = twisted_problem(0.9, 1);
    check(tw3.bc.t_minus, tw3.bc.t_plus);
    check(ComplexMatrix{{1.0, 0.0}, {0.0, 0.0}}, ComplexMatrix{{0.0, 0.0}, {0.0, 1.0}});
    check(ComplexMatrix::identity(2), ComplexMatrix(2, 2));
}

TEST_CASE("propagated and closed-form determinants agree for free problems") {
    const ProblemDef p = twisted_problem(0.9, 1);
    const BoundaryGeometry g = decompose(p.bc.t_minus, p.bc.t_plus);
    for (Complex lambda : {Complex(3.3, 0.0), Complex(-2.0, 0.0), Complex(8.0, 2.5)}) {
        const DetValue lhs = det_w(p, lambda);
        const DetValue rhs = det_unperturbed(g, lambda);
        REQUIRE(lhs.exponent == Approx(rhs.exponent).margin(1e-12));
        REQUIRE(std::abs(lhs.mantissa - rhs.mantissa) <= 1e-9 * (1.0 + std::abs(rhs.mantissa)));
    }
}

TEST_CASE("the mixed Wronskian form is constant in x and equals W") {
    ProblemDef p;
    p.n = 2;
    p.potential = Potential{
        PotentialKind::Constant,
        {ComplexMatrix{{Complex(1.0, 0.0), Complex(0.0, 0.5)},
                       {Complex(0.0, -0.5), Complex(2.0, 0.0)}}},
        {}};
    p.bc = BoundaryConditions::dirichlet(2);
    const Complex lambda(7.0, 2.0);
    const PropagationResult fm = fundamental(p, Side::Minus, lambda);
    const PropagationResult fp_conj = fundamental(p, Side::Plus, std::conj(lambda));
    const WronskianValue wv = wronskian(p, lambda);
    REQUIRE(fm.kappa == Approx(fp_conj.kappa).margin(1e-14));
    for (std::size_t i : {std::size_t(0), fm.x.size() / 3, fm.x.size() - 1}) {
        const ComplexMatrix form = wronskian_form(fp_conj, fm, i);
        REQUIRE((form - wv.w).frobenius() <= 1e-9 * (1.0 + wv.w.frobenius()));
    }
}

TEST_CASE("the two boundary representations of W are adjoint to each other") {
    const ProblemDef p = twisted_problem(std::numbers::pi / 6);
    ProblemDef q = p;
    q.potential = Potential{
        PotentialKind::Constant,
        {ComplexMatrix{{Complex(0.3, 0.0), Complex(0.1, 0.2)},
                       {Complex(0.1, -0.2), Complex(-0.4, 0.0)}}},
        {}};
    for (Complex lambda : {Complex(3.1, 0.0), Complex(5.0, 1.5)}) {
        const WronskianValue wv = wronskian(q, lambda);
        const PropagationResult fp_conj = fundamental(q, Side::Plus, std::conj(lambda));
        const ComplexMatrix gm = boundary_map(q.bc, Side::Minus, BoundaryMapKind::Gamma,
                                              fp_conj.f.front(), fp_conj.fp.front());
        const ComplexMatrix dual = Complex(-1.0, 0.0) * gm.adjoint();
        REQUIRE((wv.w - dual).frobenius() <= 1e-9 * (1.0 + wv.w.frobenius()));
    }
}

TEST_CASE("contour winding counts Dirichlet eigenvalues") {
    const ProblemDef p = scalar_problem(1.0, 1.0);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    REQUIRE(count_zeros(p, {Complex(pi2, 0.0), 1.0, 64}) == 1);
    REQUIRE(count_zeros(p, {Complex(20.0, 0.0), 25.0, 64}) == 2);
    REQUIRE(count_zeros(p, {Complex(-5.0, 0.0), 4.0, 64}) == 0);
}

TEST_CASE("contour winding is additive and node-count stable") {
    const ProblemDef p = scalar_problem(1.0, 1.0);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const int first = count_zeros(p, {Complex(pi2, 0.0), 1.0, 64});
    const int second = count_zeros(p, {Complex(4.0 * pi2, 0.0), 1.0, 64});
    const int both = count_zeros(p, {Complex(20.0, 0.0), 25.0, 64});
    REQUIRE(first + second == both);
    REQUIRE(count_zeros(p, {Complex(20.0, 0.0), 25.0, 256}) == both);
}

TEST_CASE("contour winding isolates the first twisted root") {
    const ProblemDef p = twisted_problem(std::numbers::pi / 6);
    const double r = std::pow(3.0 * std::numbers::pi / 4.0, 2.0);
    REQUIRE(count_zeros(p, {Complex(0.0, 0.0), r, 64}) == 1);
}

TEST_CASE("contour winding sees multiplicity") {
    ProblemDef p;
    p.n = 2;
    p.potential = Potential::zero(2);
    p.bc = BoundaryConditions::dirichlet(2);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    REQUIRE(count_zeros(p, {Complex(pi2, 0.0), 1.0, 64}) == 2);
}

TEST_CASE("a contour through a zero is rejected") {
    const ProblemDef p = scalar_problem(1.0, 1.0);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    REQUIRE_THROWS_AS(count_zeros(p, {Complex(pi2 + 0.5, 0.0), 0.5, 64}), ContourTooClose);
}

TEST_CASE("the perturbation margin certifies counting circles") {
    const ProblemDef free = twisted_problem(std::numbers::pi / 6);
    const BoundaryGeometry g = decompose(free.bc.t_minus, free.bc.t_plus);
    const double w_radius = 2.25 * std::numbers::pi;
    const Contour circle{Complex(0.0, 0.0), w_radius * w_radius, 32};
    REQUIRE(rouche_margin(free, g, circle) <= 1e-5);

    std::mt19937_64 rng(kSeed);
    ComplexMatrix h = random_hermitian(2, rng);
    h = h * (0.2 / spectral_norm(h));
    ProblemDef perturbed = free;
    perturbed.potential = Potential{PotentialKind::Constant, {h}, {}};
    const double margin = rouche_margin(perturbed, g, circle);
    REQUIRE(margin > 0.0);
    REQUIRE(margin < 0.9);
}

TEST_CASE("the margin shrinks along growing quarter-offset circles") {
    ProblemDef p = scalar_problem(1.0, 1.0, 0.1);
    const BoundaryGeometry g = decompose(ComplexMatrix::identity(1), ComplexMatrix::identity(1));
    auto circle = [](double n) {
        const double w = (n + 0.25) * std::numbers::pi;
        return Contour{Complex(0.0, 0.0), w * w, 32};
    };
    const double near = rouche_margin(p, g, circle(3.0));
    const double far = rouche_margin(p, g, circle(10.0));
    REQUIRE(near < 1.0);
    REQUIRE(far < near);
}
