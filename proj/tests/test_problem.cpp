#include <catch2/catch_amalgamated.hpp>

#include <numbers>

#include "test_support.hpp"
#include "vsl/problem.hpp"

using namespace vsl;

namespace {
ComplexMatrix scalar(double re, double im = 0.0) { return ComplexMatrix{{Complex(re, im)}}; }
}

TEST_CASE("potential evaluation per kind") {
    SECTION("constant") {
        Potential p;
        p.kind = PotentialKind::Constant;
        p.data = {ComplexMatrix{{1.0, Complex(0.0, 0.5)}, {Complex(0.0, -0.5), 2.0}}};
        const ComplexMatrix v = p.eval(0.7);
        CHECK((v - p.data[0]).frobenius() == 0.0);
    }
    SECTION("polynomial") {
        Potential p;
        p.kind = PotentialKind::Polynomial;
        p.data = {scalar(1.0), scalar(-2.0), scalar(3.0)};  // 1 - 2x + 3x^2
        CHECK(p.eval(0.5)(0, 0).real() == Catch::Approx(1.0 - 1.0 + 0.75));
        CHECK(p.eval(0.0)(0, 0).real() == Catch::Approx(1.0));
        CHECK(p.eval(1.0)(0, 0).real() == Catch::Approx(2.0));
    }
    SECTION("fourier") {
        Potential p;
        p.kind = PotentialKind::Fourier;
        p.data = {scalar(0.5), scalar(2.0), scalar(-1.0)};  // 0.5 + 2 cos(2pi x) - sin(2pi x)
        const double x = 0.2;
        const double expect = 0.5 + 2.0 * std::cos(2 * std::numbers::pi * x) - std::sin(2 * std::numbers::pi * x);
        CHECK(p.eval(x)(0, 0).real() == Catch::Approx(expect));
    }
    SECTION("sampled grid interpolates linearly") {
        Potential p;
        p.kind = PotentialKind::SampledGrid;
        p.nodes = {0.0, 0.25, 1.0};
        p.data = {scalar(0.0), scalar(1.0), scalar(4.0)};
        CHECK(p.eval(0.125)(0, 0).real() == Catch::Approx(0.5));
        CHECK(p.eval(0.25)(0, 0).real() == Catch::Approx(1.0));
        CHECK(p.eval(0.625)(0, 0).real() == Catch::Approx(2.5));
    }
    SECTION("outside the interval") {
        Potential p = Potential::zero(1);
        CHECK_THROWS_AS(p.eval(-0.1), DomainError);
        CHECK_THROWS_AS(p.eval(1.1), DomainError);
        CHECK_NOTHROW(p.eval(1.0 + 1e-12));  // endpoint roundoff tolerated
    }
}

TEST_CASE("boundary maps reduce to the classical scalar conditions") {
    const ComplexMatrix one{{1.0}};
    const ComplexMatrix psi{{Complex(2.0, 1.0)}};
    const ComplexMatrix dpsi{{Complex(-3.0, 0.5)}};

    SECTION("Dirichlet end at 0") {
        BoundaryConditions bc = BoundaryConditions::dirichlet(1);
        const ComplexMatrix g = boundary_map(bc, Side::Minus, BoundaryMapKind::Gamma, psi, dpsi);
        CHECK(std::abs(g(0, 0) + psi(0, 0)) < 1e-15);  // -psi(0)
        const ComplexMatrix gd = boundary_map(bc, Side::Minus, BoundaryMapKind::GammaDual, psi, dpsi);
        CHECK(std::abs(gd(0, 0) - dpsi(0, 0)) < 1e-15);  // psi'(0)
    }
    SECTION("Robin end at 0") {
        BoundaryConditions bc = BoundaryConditions::neumann(1);
        bc.a = scalar(0.7);
        const ComplexMatrix g = boundary_map(bc, Side::Minus, BoundaryMapKind::Gamma, psi, dpsi);
        CHECK(std::abs(g(0, 0) - (dpsi(0, 0) - 0.7 * psi(0, 0))) < 1e-15);
        const ComplexMatrix gd = boundary_map(bc, Side::Minus, BoundaryMapKind::GammaDual, psi, dpsi);
        CHECK(std::abs(gd(0, 0) - psi(0, 0)) < 1e-15);
    }
    SECTION("Robin end at 1 flips the sign of b") {
        BoundaryConditions bc = BoundaryConditions::neumann(1);
        bc.b = scalar(0.7);
        const ComplexMatrix g = boundary_map(bc, Side::Plus, BoundaryMapKind::Gamma, psi, dpsi);
        CHECK(std::abs(g(0, 0) - (dpsi(0, 0) + 0.7 * psi(0, 0))) < 1e-15);
    }
    SECTION("mixed projector splits components") {
        BoundaryConditions bc = BoundaryConditions::neumann(2);
        bc.t_minus = ComplexMatrix{{1.0, 0.0}, {0.0, 0.0}};
        const ComplexMatrix p2{{1.0}, {2.0}};
        const ComplexMatrix dp2{{3.0}, {4.0}};
        const ComplexMatrix g = boundary_map(bc, Side::Minus, BoundaryMapKind::Gamma, p2, dp2);
        CHECK(std::abs(g(0, 0) - Complex{-1.0}) < 1e-15);  // Dirichlet row: -psi_1(0)
        CHECK(std::abs(g(1, 0) - Complex{4.0}) < 1e-15);   // Neumann row: psi_2'(0)
    }
}

TEST_CASE("L1 norm estimate") {
    SECTION("constant") {
        Potential p;
        p.kind = PotentialKind::Constant;
        p.data = {ComplexMatrix{{3.0, 0.0}, {0.0, -1.0}}};
        CHECK(v_norm_l1(p) == Catch::Approx(3.0).epsilon(1e-9));
    }
    SECTION("linear profile integrates to half the slope") {
        Potential p;
        p.kind = PotentialKind::Polynomial;
        p.data = {scalar(0.0), scalar(2.0)};  // V(x) = 2x
        CHECK(v_norm_l1(p) == Catch::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("problem validation") {
    ProblemDef p;
    p.n = 2;
    p.potential = Potential::zero(2);
    p.bc = BoundaryConditions::dirichlet(2);
    SECTION("well-formed problem passes") {
        const VerificationReport rep = validate(p);
        CHECK(rep.all_pass());
    }
    SECTION("a violating compression is reported") {
        p.bc.a = ComplexMatrix{{1.0, 0.0}, {0.0, 0.0}};  // nonzero against T- = I
        const VerificationReport rep = validate(p);
        CHECK_FALSE(rep.all_pass());
        bool hit = false;
        for (const auto& c : rep.checks)
            if (c.name == "a.compressed" && !c.pass) hit = true;
        CHECK(hit);
    }
    SECTION("non-Hermitian potential is reported") {
        p.potential.data[0] = ComplexMatrix{{0.0, 1.0}, {2.0, 0.0}};
        const VerificationReport rep = validate(p);
        CHECK_FALSE(rep.all_pass());
    }
    SECTION("non-projector boundary matrix is reported") {
        p.bc.t_plus = ComplexMatrix{{0.5, 0.0}, {0.0, 1.0}};
        const VerificationReport rep = validate(p);
        CHECK_FALSE(rep.all_pass());
    }
}
