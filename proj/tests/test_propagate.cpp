#include <catch2/catch_amalgamated.hpp>

#include <numbers>

#include "test_support.hpp"
#include "vsl/propagate.hpp"

using namespace vsl;

namespace {

ProblemDef scalar_problem(double v, bool dirichlet_minus, bool dirichlet_plus, double a = 0.0,
                          double b = 0.0) {
    ProblemDef p;
    p.n = 1;
    p.potential.kind = PotentialKind::Constant;
    p.potential.data = {ComplexMatrix{{v}}};
    p.bc.t_minus = ComplexMatrix{{dirichlet_minus ? 1.0 : 0.0}};
    p.bc.t_plus = ComplexMatrix{{dirichlet_plus ? 1.0 : 0.0}};
    p.bc.a = ComplexMatrix{{dirichlet_minus ? 0.0 : a}};
    p.bc.b = ComplexMatrix{{dirichlet_plus ? 0.0 : b}};
    return p;
}

} // namespace

TEST_CASE("entire trig functions") {
    SECTION("special points") {
        const TrigPair t0 = entire_trig(0.0);
        CHECK(std::abs(t0.c - 1.0) < 1e-15);
        CHECK(std::abs(t0.s - 1.0) < 1e-15);
        const TrigPair tp = entire_trig(std::numbers::pi * std::numbers::pi);
        CHECK(std::abs(tp.c + 1.0) < 1e-14);
        CHECK(std::abs(tp.s) < 1e-15);
        const TrigPair tm = entire_trig(-1.0);
        CHECK(tm.c.real() == Catch::Approx(std::cosh(1.0)).epsilon(1e-14));
        CHECK(tm.s.real() == Catch::Approx(std::sinh(1.0)).epsilon(1e-14));
    }
    SECTION("series and closed form agree across the switchover") {
        for (const Complex z : {Complex(9.9e-3, 0.0), Complex(1.01e-2, 0.0), Complex(0.0, 9.9e-3),
                                Complex(-9.9e-3, 1e-3)}) {
            const TrigPair t = entire_trig(z);
            const Complex w = std::sqrt(z + Complex(1e-30, 0.0));
            CHECK(std::abs(t.c - std::cos(w)) < 1e-14);
            CHECK(std::abs(t.s - std::sin(w) / w) < 1e-14);
        }
    }
    SECTION("scaled variant stays bounded far down the negative axis") {
        const ScaledTrig st = entire_trig_scaled(-1e6);
        CHECK(st.kappa == Catch::Approx(1000.0));
        CHECK(st.c.real() == Catch::Approx(0.5).epsilon(1e-14));
        CHECK(st.sin.imag() == Catch::Approx(0.5).epsilon(1e-14));
        CHECK(st.s.real() == Catch::Approx(5e-4).epsilon(1e-12));
        const ScaledTrig moderate = entire_trig_scaled(Complex(16.0, 30.0));
        const Complex w(5.0, 3.0);
        CHECK(std::abs(moderate.c - std::cos(w) * std::exp(-3.0)) < 1e-14);
        CHECK(std::abs(moderate.s - std::sin(w) / w * std::exp(-3.0)) < 1e-14);
    }
}

TEST_CASE("fundamental solution closed forms, scalar case") {
    PropagateOptions opt;
    opt.grid_size = 256;
    opt.tol = 1e-11;

    SECTION("Dirichlet launch: sin(sqrt(l) x)/sqrt(l)") {
        const ProblemDef p = scalar_problem(0.0, true, true);
        const double lam = 4.0;
        const PropagationResult r = fundamental(p, Side::Minus, lam, opt);
        CHECK(r.kappa == 0.0);
        CHECK(std::abs(r.f[128](0, 0) - std::sin(1.0) / 2.0) < 1e-10);  // x = 0.5
        CHECK(std::abs(r.f.back()(0, 0) - std::sin(2.0) / 2.0) < 1e-10);
        CHECK(std::abs(r.fp.back()(0, 0) - std::cos(2.0)) < 1e-10);
    }
    SECTION("lambda = 0 gives F(x) = x") {
        const ProblemDef p = scalar_problem(0.0, true, true);
        const PropagationResult r = fundamental(p, Side::Minus, 0.0, opt);
        CHECK(std::abs(r.f[64](0, 0) - 0.25) < 1e-12);
        CHECK(std::abs(r.f.back()(0, 0) - 1.0) < 1e-12);
    }
    SECTION("Neumann launch: cos(sqrt(l) x)") {
        const ProblemDef p = scalar_problem(0.0, false, false);
        const double lam = 9.0;
        const PropagationResult r = fundamental(p, Side::Minus, lam, opt);
        CHECK(std::abs(r.f.back()(0, 0) - std::cos(3.0)) < 1e-10);
        CHECK(std::abs(r.fp.back()(0, 0) + 3.0 * std::sin(3.0)) < 1e-9);
    }
    SECTION("Robin launch adds a sin/sqrt(l) multiple") {
        const ProblemDef p = scalar_problem(0.0, false, false, 0.8);
        const double lam = 9.0;
        const PropagationResult r = fundamental(p, Side::Minus, lam, opt);
        const double expect = std::cos(3.0) + 0.8 * std::sin(3.0) / 3.0;
        CHECK(std::abs(r.f.back()(0, 0) - expect) < 1e-10);
    }
    SECTION("plus-side Dirichlet launch: -sin(sqrt(l)(1-x))/sqrt(l)") {
        const ProblemDef p = scalar_problem(0.0, true, true);
        const double lam = 4.0;
        const PropagationResult r = fundamental(p, Side::Plus, lam, opt);
        CHECK(std::abs(r.f.front()(0, 0) + std::sin(2.0) / 2.0) < 1e-10);  // x = 0
        CHECK(std::abs(r.f.back()(0, 0)) < 1e-12);                         // x = 1
        CHECK(std::abs(r.fp.back()(0, 0) - 1.0) < 1e-12);
    }
    SECTION("constant potential shifts lambda") {
        const ProblemDef p = scalar_problem(2.0, true, true);
        const double lam = 10.0;
        const double u = std::sqrt(lam - 2.0);
        const PropagationResult r = fundamental(p, Side::Minus, lam, opt);
        CHECK(std::abs(r.f.back()(0, 0) - std::sin(u) / u) < 1e-10);
    }
}

TEST_CASE("rescaled gauge for complex and negative lambda") {
    PropagateOptions opt;
    opt.tol = 1e-11;
    const ProblemDef p = scalar_problem(0.0, true, true);

    SECTION("complex lambda") {
        const Complex lam(16.0, 30.0);  // sqrt = 5 + 3i
        const PropagationResult r = fundamental(p, Side::Minus, lam, opt);
        CHECK(r.kappa == Catch::Approx(3.0));
        const Complex w(5.0, 3.0);
        const Complex expect_scaled = std::sin(w) / w * std::exp(-3.0);
        CHECK(std::abs(r.f.back()(0, 0) - expect_scaled) < 1e-10);
        // boundedness along the way
        for (const auto& m : r.f) CHECK(m.frobenius() < 2.0);
    }
    SECTION("negative lambda") {
        const PropagationResult r = fundamental(p, Side::Minus, -4.0, opt);
        CHECK(r.kappa == Catch::Approx(2.0));
        const double expect_scaled = std::sinh(2.0) / 2.0 * std::exp(-2.0);
        CHECK(std::abs(r.f.back()(0, 0) - expect_scaled) < 1e-10);
        CHECK(r.far_unscale_log() == Catch::Approx(2.0));
    }
}

TEST_CASE("matrix potential decouples in the diagonal case") {
    ProblemDef p;
    p.n = 2;
    p.potential.kind = PotentialKind::Constant;
    p.potential.data = {ComplexMatrix{{1.0, 0.0}, {0.0, 3.0}}};
    p.bc = BoundaryConditions::dirichlet(2);
    PropagateOptions opt;
    opt.tol = 1e-11;
    const double lam = 12.0;
    const PropagationResult r = fundamental(p, Side::Minus, lam, opt);
    const double u1 = std::sqrt(lam - 1.0), u2 = std::sqrt(lam - 3.0);
    CHECK(std::abs(r.f.back()(0, 0) - std::sin(u1) / u1) < 1e-10);
    CHECK(std::abs(r.f.back()(1, 1) - std::sin(u2) / u2) < 1e-10);
    CHECK(std::abs(r.f.back()(0, 1)) < 1e-12);
    CHECK(std::abs(r.f.back()(1, 0)) < 1e-12);
}

TEST_CASE("lambda derivative from the variational system") {
    PropagateOptions opt;
    opt.tol = 1e-11;

    SECTION("scalar closed form") {
        const ProblemDef p = scalar_problem(0.0, true, true);
        const double lam = 7.3;
        const DerivativeResult dr = fundamental_dlambda(p, Side::Minus, lam, opt);
        const double u = std::sqrt(lam);
        const double expect = (u * std::cos(u) - std::sin(u)) / (2.0 * u * u * u);
        CHECK(std::abs(dr.deriv.f.back()(0, 0) - expect) < 1e-10);
        CHECK(std::abs(dr.base.f.back()(0, 0) - std::sin(u) / u) < 1e-11);
    }
    SECTION("finite-difference oracle, matrix case") {
        ProblemDef p;
        p.n = 2;
        p.potential.kind = PotentialKind::Constant;
        p.potential.data = {ComplexMatrix{{1.0, Complex(0.0, 0.5)}, {Complex(0.0, -0.5), 2.0}}};
        p.bc = BoundaryConditions::dirichlet(2);
        const double lam = 5.0;
        const double h = 1e-6 * std::max(1.0, lam);
        const DerivativeResult dr = fundamental_dlambda(p, Side::Minus, lam, opt);
        const PropagationResult rp = fundamental(p, Side::Minus, lam + h, opt);
        const PropagationResult rm = fundamental(p, Side::Minus, lam - h, opt);
        ComplexMatrix fd = (rp.f.back() - rm.f.back()) * (1.0 / (2.0 * h));
        const double rel = (fd - dr.deriv.f.back()).frobenius() / dr.deriv.f.back().frobenius();
        CHECK(rel < 1e-5);
        ComplexMatrix fd_p = (rp.fp.back() - rm.fp.back()) * (1.0 / (2.0 * h));
        CHECK((fd_p - dr.deriv.fp.back()).frobenius() / dr.deriv.fp.back().frobenius() < 1e-5);
    }
    SECTION("plus side, complex lambda, against finite differences") {
        const ProblemDef p = scalar_problem(0.5, false, true, 0.0);
        const Complex lam(6.0, 2.0);
        const DerivativeResult dr = fundamental_dlambda(p, Side::Plus, lam, opt);
        const double h = 1e-6 * std::abs(lam);
        const PropagationResult rp = fundamental(p, Side::Plus, lam + h, opt);
        const PropagationResult rm = fundamental(p, Side::Plus, lam - h, opt);
        // kappa varies with lambda, so the difference quotient must be taken on
        // unscaled values; x = 0 sits at distance 1 from the plus-side launch.
        ComplexMatrix fd = (rp.f.front() * std::exp(rp.kappa) - rm.f.front() * std::exp(rm.kappa)) *
                           (1.0 / (2.0 * h));
        ComplexMatrix dtrue = dr.deriv.f.front() * std::exp(dr.deriv.kappa);
        const double rel = (fd - dtrue).frobenius() / dtrue.frobenius();
        CHECK(rel < 1e-4);
    }
}

TEST_CASE("certification and preconditions") {
    const ProblemDef p = scalar_problem(0.0, true, true);
    SECTION("certified run reports the achieved estimate") {
        PropagateOptions opt;
        opt.tol = 1e-10;
        const PropagationResult r = fundamental(p, Side::Minus, 100.0, opt);
        CHECK(r.error_estimate <= 1e-10);
    }
    SECTION("unreachable tolerance raises StepFailure") {
        PropagateOptions opt;
        opt.grid_size = 64;
        opt.tol = 1e-16;
        opt.max_refine = 0;
        CHECK_THROWS_AS(fundamental(p, Side::Minus, 10000.0, opt), StepFailure);
    }
    SECTION("domain guards") {
        PropagateOptions opt;
        opt.grid_size = 32;
        CHECK_THROWS_AS(fundamental(p, Side::Minus, 1.0, opt), DomainError);
        CHECK_THROWS_AS(fundamental(p, Side::Minus, Complex(2e8, 0.0)), DomainError);
    }
}
