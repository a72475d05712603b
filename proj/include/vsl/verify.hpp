#pragma once

// Executable verification: an independent finite-difference oracle for the
// eigenvalues, decay-trend probes for the large-lambda behaviour, and the
// named suites that re-check every identity the library is built on.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "linalg.hpp"
#include "problem.hpp"
#include "propagate.hpp"
#include "report.hpp"
#include "spectrum.hpp"
#include "wronskian.hpp"

namespace vsl {

namespace detail {

// Hermitian band storage: band[d][c] holds entry (c + d, c) for d = 0..bw.
struct BandMatrix {
    std::size_t dim = 0;
    std::size_t bw = 0;
    std::vector<std::vector<Complex>> band;

    BandMatrix(std::size_t dim_, std::size_t bw_) : dim(dim_), bw(bw_) {
        band.assign(bw + 1, std::vector<Complex>(dim, Complex(0.0, 0.0)));
    }
    void add(std::size_t r, std::size_t c, Complex v) {
        if (r < c) return;  // upper triangle is implied
        band[r - c][c] += v;
    }
};

// Sturm count via banded LDL*: number of eigenvalues below sigma, or nothing
// when a pivot degenerates and the caller should nudge sigma.
inline std::optional<std::size_t> band_count_below(const BandMatrix& a, double sigma,
                                                   std::vector<std::vector<Complex>>& work) {
    const std::size_t dim = a.dim, bw = a.bw;
    work.assign(a.band.begin(), a.band.end());
    double scale = std::abs(sigma);
    for (const auto& row : a.band)
        for (const Complex& v : row) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < dim; ++i) work[0][i] -= sigma;

    std::size_t negatives = 0;
    for (std::size_t j = 0; j < dim; ++j) {
        const double d = work[0][j].real();
        if (std::abs(d) <= 1e-14 * scale) return std::nullopt;
        if (d < 0.0) ++negatives;
        const std::size_t reach = std::min(bw, dim - 1 - j);
        for (std::size_t r = 1; r <= reach; ++r) {
            const Complex lr = work[r][j] / d;
            for (std::size_t c = 1; c <= r; ++c)
                work[r - c][j + c] -= lr * std::conj(work[c][j]);
        }
    }
    return negatives;
}

inline std::vector<double> band_lowest_eigenvalues(const BandMatrix& a, std::size_t m) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < a.dim; ++i) {
        double radius = 0.0;
        for (std::size_t d = 1; d <= a.bw; ++d) {
            if (i + d < a.dim) radius += std::abs(a.band[d][i]);
            if (i >= d) radius += std::abs(a.band[d][i - d]);
        }
        const double center = a.band[0][i].real();
        lo = std::min(lo, center - radius);
        hi = std::max(hi, center + radius);
    }

    std::vector<std::vector<Complex>> work;
    auto count = [&](double sigma) {
        for (int nudge = 1;; ++nudge) {
            if (auto c = band_count_below(a, sigma, work)) return *c;
            sigma += static_cast<double>(nudge) * (1e-10 + 1e-12 * std::abs(sigma));
        }
    };

    std::vector<double> out;
    double below = lo - 1.0;
    for (std::size_t k = 1; k <= m; ++k) {
        double left = below, right = hi + 1.0;
        while (right - left > 1e-11 + 1e-10 * std::abs(right)) {
            const double mid = 0.5 * (left + right);
            if (count(mid) >= k)
                right = mid;
            else
                left = mid;
        }
        out.push_back(0.5 * (left + right));
        below = left;
    }
    return out;
}

} // namespace detail

// Lowest eigenvalues of the central-difference discretization on mesh width h.
// Ghost points are eliminated through the boundary condition; the discrete
// operator stays Hermitian by half-weighting the endpoint rows, and the
// endpoint unknowns live in Ran T^perp only.
inline std::vector<double> fd_reference_eigenvalues(const ProblemDef& p, double h,
                                                    std::size_t m) {
    if (!(h > 0.0) || h > 1.0 / 200.0 + 1e-15)
        throw DomainError("fd oracle needs 0 < h <= 1/200");
    const std::size_t k = static_cast<std::size_t>(std::llround(1.0 / h));
    const double hh = 1.0 / static_cast<double>(k);
    const double inv_h2 = 1.0 / (hh * hh);
    const std::size_t n = p.n;

    const ComplexMatrix q0 = kernel_basis(p.bc.t_minus);  // Ran T-^perp
    const ComplexMatrix q1 = kernel_basis(p.bc.t_plus);   // Ran T+^perp
    const std::size_t m0 = q0.cols(), m1 = q1.cols();
    const std::size_t dim = m0 + (k - 1) * n + m1;
    if (dim < m) throw DomainError("mesh too coarse for the requested count");

    std::size_t bw = n;
    if (m0 > 0) bw = std::max(bw, m0 + n - 1);
    if (m1 > 0) bw = std::max(bw, m1 + n - 1);
    if (n >= 2) bw = std::max(bw, 2 * n - 1);
    detail::BandMatrix a(dim, bw);

    auto put_block = [&](std::size_t row0, std::size_t col0, const ComplexMatrix& blk) {
        for (std::size_t i = 0; i < blk.rows(); ++i)
            for (std::size_t j = 0; j < blk.cols(); ++j) a.add(row0 + i, col0 + j, blk(i, j));
    };

    const ComplexMatrix id = ComplexMatrix::identity(n);
    const std::size_t interior0 = m0;  // global offset of node 1
    if (m0 > 0) {
        const ComplexMatrix core =
            inv_h2 * id + (1.0 / hh) * p.bc.a + 0.5 * p.potential.eval(0.0);
        put_block(0, 0, hermitize(2.0 * (q0.adjoint() * (core * q0))));
        put_block(interior0, 0, (-std::numbers::sqrt2 * inv_h2) * q0);
    }
    for (std::size_t i = 1; i + 1 <= k - 1; ++i) {
        const std::size_t off = interior0 + (i - 1) * n;
        put_block(off, off,
                  hermitize(2.0 * inv_h2 * id +
                            p.potential.eval(static_cast<double>(i) * hh)));
        put_block(off + n, off, (-inv_h2) * id);
    }
    {
        const std::size_t off = interior0 + (k - 2) * n;
        put_block(off, off,
                  hermitize(2.0 * inv_h2 * id +
                            p.potential.eval(static_cast<double>(k - 1) * hh)));
    }
    if (m1 > 0) {
        const std::size_t off = interior0 + (k - 1) * n;
        const ComplexMatrix core =
            inv_h2 * id + (1.0 / hh) * p.bc.b + 0.5 * p.potential.eval(1.0);
        put_block(off, off, hermitize(2.0 * (q1.adjoint() * (core * q1))));
        put_block(off, off - n, (-std::numbers::sqrt2 * inv_h2) * q1.adjoint());
    }

    // A plane wave sqrt(lambda) passes the three-point stencil as
    // (4/h^2) sin^2(sqrt(lambda) h/2), so mapping each eigenvalue through the
    // inverse symbol strips the stencil dispersion; what remains at h^2 is the
    // potential and boundary coupling.
    std::vector<double> eigs = detail::band_lowest_eigenvalues(a, m);
    for (double& mu : eigs) {
        if (mu >= 0.0) {
            const double s = 0.5 * hh * std::sqrt(mu);
            if (s < 1.0) mu = std::pow(2.0 / hh * std::asin(s), 2.0);
        } else {
            mu = -std::pow(2.0 / hh * std::asinh(0.5 * hh * std::sqrt(-mu)), 2.0);
        }
    }
    return eigs;
}

enum class TrendQuantity { FMinusLeading, WCorrection, JBound };

inline TrendQuantity trend_quantity_from(const std::string& name) {
    if (name == "F_minus_leading") return TrendQuantity::FMinusLeading;
    if (name == "W_correction") return TrendQuantity::WCorrection;
    if (name == "J_bound") return TrendQuantity::JBound;
    throw ConfigError("unknown trend quantity: " + name);
}

inline std::string to_string(TrendQuantity q) {
    switch (q) {
        case TrendQuantity::FMinusLeading: return "F_minus_leading";
        case TrendQuantity::WCorrection: return "W_correction";
        case TrendQuantity::JBound: return "J_bound";
    }
    return "?";
}

struct TrendPoint {
    std::size_t n = 0;
    double normalized = 0.0;
};

struct TrendResult {
    TrendQuantity quantity{};
    std::vector<TrendPoint> points;
    double median = 0.0;
    double max = 0.0;
    bool pass = false;
};

namespace detail {

inline double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

// The integrator bias in W scales like lambda^2 h^4; dividing a residual by
// lambda^r therefore needs h^4 ~ lambda^-(2+r), i.e. grid ~ lambda^((2+r)/4).
inline std::size_t trend_grid(double lambda, double exponent) {
    const double need = 17.0 * std::pow(std::abs(lambda) + 1.0, exponent);
    return static_cast<std::size_t>(std::clamp(std::ceil(need), 512.0, 32768.0));
}

} // namespace detail

// Normalized residuals of the claimed large-n decay; the sequence should hug
// a constant, so bounded-by-3x-median is the pass rule (with a small floor so
// integrator noise on an exactly-zero signal cannot fail it).
inline TrendResult asymptotics_trend(const ProblemDef& p, TrendQuantity q, std::size_t n_lo = 5,
                                     std::size_t n_hi = 40) {
    if (n_lo < 1 || n_hi < n_lo) throw DomainError("trend needs 1 <= n_lo <= n_hi");
    const double pi = std::numbers::pi;
    const BoundaryGeometry g = decompose(p.bc.t_minus, p.bc.t_plus);
    const ComplexMatrix id = ComplexMatrix::identity(p.n);
    const ComplexMatrix tm = p.bc.t_minus, tp = p.bc.t_plus;
    const ComplexMatrix tm_perp = id - tm, tp_perp = id - tp;

    TrendResult out;
    out.quantity = q;
    for (std::size_t n = n_lo; n <= n_hi; ++n) {
        double value = 0.0;
        switch (q) {
            case TrendQuantity::FMinusLeading: {
                const double root = pi * static_cast<double>(n);
                const double lambda = root * root;
                PropagateOptions popt;
                popt.grid_size = detail::trend_grid(lambda, 0.625);
                const PropagationResult r =
                    fundamental(p, Side::Minus, Complex(lambda, 0.0), popt);
                const ComplexMatrix model =
                    std::cos(root) * tm_perp + (std::sin(root) / root) * (tm + p.bc.a);
                const ComplexMatrix resid = r.f.back() - model;
                value = std::sqrt(lambda) * spectral_norm(resid * tm_perp) +
                        lambda * spectral_norm(resid * tm);
                break;
            }
            case TrendQuantity::WCorrection: {
                const double root = pi * static_cast<double>(n) + pi / 4.0;
                const double lambda = root * root;
                PropagateOptions popt;
                popt.grid_size = detail::trend_grid(lambda, 0.75);
                const ComplexMatrix w = wronskian(p, Complex(lambda, 0.0), popt).w;
                const ComplexMatrix resid = w - unperturbed_scaled(g, Complex(lambda, 0.0)).m;
                const double nn = spectral_norm(tp_perp * (resid * tm_perp));
                const double mixed = std::max(spectral_norm(tp_perp * (resid * tm)),
                                              spectral_norm(tp * (resid * tm_perp)));
                const double dd = spectral_norm(tp * (resid * tm));
                value = std::max({nn, std::sqrt(lambda) * mixed, lambda * dd});
                break;
            }
            case TrendQuantity::JBound: {
                if (g.dim_twisted_pairs == 0) break;
                const double root = pi * static_cast<double>(n) + pi / 4.0;
                for (const double theta : {0.0, pi / 8, pi / 4, 3 * pi / 8, pi / 2}) {
                    const Complex z = std::polar(root, theta);
                    value = std::max(value, spectral_norm(twisted_j22(g, z * z)));
                }
                break;
            }
        }
        out.points.push_back({n, value});
    }

    std::vector<double> values;
    for (const auto& pt : out.points) values.push_back(pt.normalized);
    out.median = detail::median_of(values);
    out.max = values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
    out.pass = out.max <= 3.0 * out.median + 1e-6;
    return out;
}

namespace detail {

struct ProbeRng {
    std::mt19937_64 gen;
    explicit ProbeRng(std::uint64_t seed) : gen(seed) {}
    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(gen);
    }
    Complex off_axis_lambda() {
        const double re = uniform(-4.0, 90.0);
        const double im = uniform(0.4, 6.0) * (uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0);
        return {re, im};
    }
    ComplexMatrix unit_vector(std::size_t n) {
        ComplexMatrix v(n, 1);
        double norm2 = 0.0;
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            v(i, 0) = Complex(gauss(gen), gauss(gen));
            norm2 += std::norm(v(i, 0));
        }
        const double inv = 1.0 / std::sqrt(std::max(norm2, 1e-300));
        for (std::size_t i = 0; i < n; ++i) v(i, 0) *= inv;
        return v;
    }
};

inline PropagateOptions resolved_popt(const SpectrumOptions& opt, double lambda,
                                      double steps_per_period = 50.0) {
    PropagateOptions popt;
    popt.grid_size = resolved_grid(opt, lambda, steps_per_period);
    return popt;
}

inline void suite_geometry(const ProblemDef& p, VerificationReport& rep) {
    const VerificationReport structural = validate(p);
    for (const auto& c : structural.checks) rep.checks.push_back(c);
    if (!structural.all_pass()) return;
    try {
        const BoundaryGeometry g = decompose(p.bc.t_minus, p.bc.t_plus);
        const VerificationReport geo = verify_geometry(g, p.bc.t_minus, p.bc.t_plus);
        for (const auto& c : geo.checks) rep.checks.push_back(c);
    } catch (const Error& e) {
        rep.add_flag("decompose", false, e.what());
    }
}

inline void suite_wronskian(const ProblemDef& p, const BoundaryGeometry& g, ProbeRng& rng,
                            const SpectrumOptions& opt, VerificationReport& rep) {
    // duality against the adjoint route, half the draws off the real axis;
    // draws grazing an eigenvalue are redrawn so the relative scale stays sane
    double duality = 0.0;
    for (int k = 0; k < 20; ++k) {
        for (int tries = 0; tries < 50; ++tries) {
            const Complex lam = k < 10 ? Complex(rng.uniform(-4.0, 120.0), 0.0)
                                       : rng.off_axis_lambda();
            const PropagateOptions popt = resolved_popt(opt, std::abs(lam));
            const WronskianValue wv = wronskian(p, lam, popt);
            if (spectral_norm(wv.w) < 1e-6 * (1.0 + std::sqrt(std::abs(lam)))) continue;
            const PropagationResult fp = fundamental(p, Side::Plus, std::conj(lam), popt);
            const ComplexMatrix gm = boundary_map(p.bc, Side::Minus, BoundaryMapKind::Gamma,
                                                  fp.f.front(), fp.fp.front());
            duality =
                std::max(duality, spectral_norm(wv.w + gm.adjoint()) / spectral_norm(wv.w));
            break;
        }
    }
    rep.add("duality.max_over_20", duality, 1e-8);

    // {F+,F-}(x) must not move along the interval
    double constancy = 0.0;
    for (int k = 0; k < 5; ++k) {
        const Complex lam = k < 3 ? Complex(rng.uniform(-4.0, 100.0), 0.0)
                                  : rng.off_axis_lambda();
        const PropagateOptions popt = resolved_popt(opt, std::abs(lam));
        const PropagationResult fm = fundamental(p, Side::Minus, lam, popt);
        const PropagationResult fp = fundamental(p, Side::Plus, std::conj(lam), popt);
        const ComplexMatrix base = wronskian_form(fp, fm, 0);
        const double scale = std::max(spectral_norm(base), 1e-12);
        for (std::size_t i = 1; i < fm.x.size(); ++i)
            constancy = std::max(
                constancy, spectral_norm(wronskian_form(fp, fm, i) - base) / scale);
    }
    rep.add("constancy.max_over_5", constancy, 1e-8);

    // {F-,F-} vanishes identically for real lambda
    double selfw = 0.0;
    for (int k = 0; k < 5; ++k) {
        const Complex lam(rng.uniform(-4.0, 100.0), 0.0);
        const PropagateOptions popt = resolved_popt(opt, std::abs(lam));
        const PropagationResult fm = fundamental(p, Side::Minus, lam, popt);
        double scale = 1e-12;
        for (std::size_t i = 0; i < fm.x.size(); ++i)
            scale = std::max(scale, spectral_norm(fm.f[i]) * spectral_norm(fm.fp[i]));
        for (std::size_t i = 0; i < fm.x.size(); ++i)
            selfw = std::max(selfw, spectral_norm(wronskian_form(fm, fm, i)) / scale);
    }
    rep.add("self_wronskian.max_over_5", selfw, 1e-8);

    // analytic dependence on lambda: a small imaginary shift moves F by
    // roughly eps * dF/dlambda
    constexpr double eps = 1e-6;
    double entire = 0.0;
    for (int k = 0; k < 3; ++k) {
        const Complex lam(rng.uniform(0.0, 60.0), 0.0);
        const PropagateOptions popt = resolved_popt(opt, std::abs(lam));
        const DerivativeResult dr = fundamental_dlambda(p, Side::Minus, lam, popt);
        const PropagationResult shifted = fundamental(p, Side::Minus, lam + Complex(0.0, eps), popt);
        const ComplexMatrix f0 = dr.base.f.back() * std::exp(dr.base.far_unscale_log());
        const ComplexMatrix f1 = shifted.f.back() * std::exp(shifted.far_unscale_log());
        const double slope = spectral_norm(dr.deriv.f.back() * std::exp(dr.base.far_unscale_log()));
        entire = std::max(entire, spectral_norm(f1 - f0) / (10.0 * eps * (1.0 + slope)));
    }
    rep.add("entirety.max_over_3", entire, 1.0);

    // closed-form inverse of W0, sampled off the singular set
    double w0inv = 0.0;
    const ComplexMatrix id = ComplexMatrix::identity(p.n);
    for (int k = 0; k < 50; ++k) {
        Complex lam;
        for (int tries = 0; tries < 200; ++tries) {
            lam = k % 2 == 0 ? Complex(rng.uniform(-6.0, 150.0), 0.0) : rng.off_axis_lambda();
            if (exceptional_distance(std::sqrt(lam), g) > 0.05) break;
        }
        const ComplexMatrix prod =
            unperturbed_scaled(g, lam).m * unperturbed_inverse_scaled(g, lam).m;
        w0inv = std::max(w0inv, spectral_norm(prod - id));
    }
    rep.add("w0_inverse.max_over_50", w0inv, 1e-8);

    // with no perturbation the numeric determinant must match the series product
    if (v_norm_l1(p.potential) < 1e-14 && spectral_norm(p.bc.a) < 1e-14 &&
        spectral_norm(p.bc.b) < 1e-14) {
        double detdev = 0.0;
        for (int k = 0; k < 8; ++k) {
            // Near the singular set the product dips and amplifies level noise;
            // the draw keeps a healthy margin so the relative error is clean.
            Complex lam;
            for (int tries = 0; tries < 200; ++tries) {
                lam = Complex(rng.uniform(-6.0, 130.0), 0.0);
                if (exceptional_distance(std::sqrt(lam), g) > 0.35) break;
            }
            const Complex z = std::sqrt(lam);
            Complex product(1.0, 0.0);
            const Complex s = std::sin(z), c = std::cos(z);
            for (std::size_t i = 0; i < g.dim_nn; ++i) product *= -z * s;
            for (std::size_t i = 0; i < g.dim_nd; ++i) product *= -c;
            for (std::size_t i = 0; i < g.dim_dn; ++i) product *= c;
            for (std::size_t i = 0; i < g.dim_dd; ++i) product *= -s / z;
            for (const auto& blk : g.twisted)
                for (std::size_t i = 0; i < blk.dim; ++i)
                    product *= std::sin(z - blk.gamma) * std::sin(z + blk.gamma);
            const PropagateOptions popt = resolved_popt(opt, std::abs(lam), 300.0);
            const Complex dw = det_w(p, lam, popt).value();
            detdev = std::max(detdev, std::abs(dw - product) / std::max(std::abs(product), 1e-12));
        }
        rep.add("det_factorization.max_over_8", detdev, 1e-9);
    }

    // zero counting is additive over disjoint contours and stable in the node count
    try {
        const double v_norm = problem_norm(p);
        const auto intervals = localization_intervals(g, v_norm, 6);
        if (intervals.size() >= 3) {
            const LocalizationInterval& i1 = intervals[0];
            const LocalizationInterval& i2 = intervals[1];
            const double right_gap = 0.5 * (i2.hi + intervals[2].lo);
            const double left = i1.lo - 1.0;
            const PropagateOptions copt =
                resolved_popt(opt, std::max(std::abs(left), right_gap));
            auto circle = [&](double lo, double hi, std::size_t nodes) {
                return count_zeros(
                    p, Contour{Complex(0.5 * (lo + hi), 0.0), 0.5 * (hi - lo), nodes}, copt);
            };
            const int c1 = circle(left, 0.5 * (i1.hi + i2.lo), 64);
            const int c2 = circle(0.5 * (i1.hi + i2.lo), right_gap, 64);
            const int whole = circle(left, right_gap, 64);
            const int whole_fine = circle(left, right_gap, 256);
            rep.add_flag("count_zeros.additive", whole == c1 + c2);
            rep.add_flag("count_zeros.node_invariance", whole == whole_fine);
        }
    } catch (const Error& e) {
        rep.add_flag("count_zeros.additive", false, e.what());
    }
}

inline void suite_spectral_data(const ProblemDef& p, ProbeRng& rng, const SpectrumOptions& opt,
                                VerificationReport& rep) {
    std::vector<EigenvalueRecord> records;
    try {
        records = first_eigenvalues(p, 6, opt);
    } catch (const Error& e) {
        rep.add_flag("catalogue", false, e.what());
        return;
    }
    rep.add_flag("catalogue", !records.empty());
    const ComplexMatrix id = ComplexMatrix::identity(p.n);

    for (std::size_t k = 0; k < records.size(); ++k) {
        const EigenvalueRecord& rec = records[k];
        const std::string tag = "[" + std::to_string(k) + "]";
        SpectralTriplet ti;
        try {
            ti = spectral_triplet(p, rec, opt);
            const SpectralTriplet td = triplet_via_derivative(p, rec, opt);
            rep.add("g_dual_route" + tag,
                    spectral_norm(ti.g - td.g) / std::max(spectral_norm(ti.g), 1e-300), 1e-7);
        } catch (const Error& e) {
            rep.add_flag("g_dual_route" + tag, false, e.what());
            continue;
        }
        const ComplexMatrix pm = ti.p.matrix();

        if (k < 3) {
            try {
                const ComplexMatrix g_inv = invert(ti.g);
                const ComplexMatrix res = residue(p, rec, opt);
                const ComplexMatrix target = ti.basis * (g_inv * ti.basis.adjoint());
                rep.add("residue" + tag, spectral_norm(res + target),
                        1e-6 * spectral_norm(g_inv));
            } catch (const Error& e) {
                rep.add_flag("residue" + tag, false, e.what());
            }

            const PropagateOptions popt = resolved_popt(opt, rec.lambda);
            const Complex lam(rec.lambda, 0.0);
            const PropagationResult fm = fundamental(p, Side::Minus, lam, popt);
            const PropagationResult fp = fundamental(p, Side::Plus, lam, popt);
            const ComplexMatrix gdm = boundary_map(p.bc, Side::Plus, BoundaryMapKind::GammaDual,
                                                   fm.f.back(), fm.fp.back());
            const ComplexMatrix gdp = boundary_map(p.bc, Side::Minus, BoundaryMapKind::GammaDual,
                                                   fp.f.front(), fp.fp.front());
            rep.add("mapping_inverse" + tag, spectral_norm(gdp * (gdm * pm) - pm), 1e-6);
        }

        if (k < 2) {
            // norming identity <g h, h> = int |F- P h|^2 on an independent grid
            PropagateOptions popt;
            popt.grid_size = 4 * resolved_grid(opt, rec.lambda);
            const PropagationResult fm =
                fundamental(p, Side::Minus, Complex(rec.lambda, 0.0), popt);
            const std::size_t grid = fm.x.size() - 1;
            const double hstep = 1.0 / static_cast<double>(grid);
            const ComplexMatrix g_full = ti.basis * (ti.g * ti.basis.adjoint());
            double norming = 0.0;
            for (int probe = 0; probe < 8; ++probe) {
                const ComplexMatrix h = rng.unit_vector(p.n);
                const ComplexMatrix ph = pm * h;
                double integral = 0.0;
                for (std::size_t i = 0; i <= grid; ++i) {
                    const double weight =
                        (i == 0 || i == grid) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
                    const ComplexMatrix fv = fm.f[i] * ph;
                    double norm2 = 0.0;
                    for (std::size_t r = 0; r < p.n; ++r) norm2 += std::norm(fv(r, 0));
                    integral += weight * hstep / 3.0 * norm2;
                }
                const double lhs = (h.adjoint() * (g_full * h))(0, 0).real();
                norming = std::max(norming,
                                   std::abs(integral - lhs) / std::max(std::abs(lhs), 1e-300));
            }
            rep.add("norming_identity" + tag, norming, 1e-7);

            // W^-1 near the pole follows [P/t + P^perp] Z^-1 with a bounded
            // remainder.  At t = 1e-4 the recorded root is not sharp enough to
            // serve as the pole position, so the root is re-centered on the
            // probe grid and every factor comes from that one discretization,
            // whose W is itself entire in lambda.
            if (rec.gap > 0.05) {
                try {
                    const PropagateOptions fine = resolved_popt(opt, rec.lambda, 400.0);
                    auto sig = [&](double lam) {
                        return singular_values(wronskian(p, Complex(lam, 0.0), fine).w).back();
                    };
                    const double span = 1e-5 * (1.0 + std::abs(rec.lambda));
                    const double lam0 = golden_min(sig, rec.lambda - span, rec.lambda + span,
                                                   1e-13 * (1.0 + std::abs(rec.lambda)));
                    const DerivativeResult dr =
                        fundamental_dlambda(p, Side::Minus, Complex(lam0, 0.0), fine);
                    const ComplexMatrix w0 = boundary_map(
                        p.bc, Side::Plus, BoundaryMapKind::Gamma, dr.base.f.back(),
                        dr.base.fp.back());
                    const ComplexMatrix w_dot = boundary_map(
                        p.bc, Side::Plus, BoundaryMapKind::Gamma, dr.deriv.f.back(),
                        dr.deriv.fp.back());
                    const ComplexMatrix kb = kernel_basis(w0, opt.rank_tol);
                    if (kb.cols() == 0)
                        throw RankMismatch("probe grid sees no kernel at the recorded root");
                    const ComplexMatrix pk = kb * kb.adjoint();
                    const ComplexMatrix zinv = invert(w_dot * pk + w0 * (id - pk));
                    auto remainder = [&](double t) {
                        const ComplexMatrix w = wronskian(p, Complex(lam0 + t, 0.0), fine).w;
                        const ComplexMatrix model = ((1.0 / t) * pk + (id - pk)) * zinv;
                        return spectral_norm(invert(w) - model);
                    };
                    const double r2 = remainder(1e-2);
                    const double r3 = remainder(1e-3);
                    const double r4 = remainder(1e-4);
                    rep.add("near_pole_bounded" + tag, std::max(r3, r4),
                            3.0 * r2 + 1e-2 * (1.0 + spectral_norm(zinv)));
                } catch (const Error& e) {
                    rep.add_flag("near_pole_bounded" + tag, false, e.what());
                }
            }
        }
    }

    double weyl = 0.0;
    for (int k = 0; k < 20; ++k) {
        for (int tries = 0; tries < 50; ++tries) {
            try {
                const Complex lam = rng.off_axis_lambda();
                const WeylSample a = m_function(p, lam, opt);
                const WeylSample b = m_function(p, std::conj(lam), opt);
                weyl = std::max(weyl, spectral_norm(b.m - a.m.adjoint()) /
                                          std::max(spectral_norm(a.m), 1e-12));
                break;
            } catch (const NearPole&) {
                continue;
            }
        }
    }
    rep.add("weyl_symmetry.max_over_20", weyl, 1e-8);
}

inline void suite_counting(const ProblemDef& p, const BoundaryGeometry& g,
                           const SpectrumOptions& opt, VerificationReport& rep,
                           std::size_t n_span = 8) {
    const double v_norm = problem_norm(p);
    const double width = counting_width(v_norm);
    const double pi = std::numbers::pi;

    std::vector<LocalizationInterval> intervals;
    try {
        intervals = localization_intervals(g, v_norm, 64);
    } catch (const Error& e) {
        rep.add_flag("localization", false, e.what());
        return;
    }
    if (intervals.empty()) {
        rep.add_flag("localization", false, "no intervals in range");
        return;
    }
    const std::size_t n_base = intervals.front().n;

    std::size_t n_cert = 0;
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t n = n_base; n < n_base + 10; ++n) {
        const double radius = pi * pi * static_cast<double>(n * n) + width;
        const PropagateOptions popt = resolved_popt(opt, radius);
        const double m = rouche_margin(p, g, Contour{Complex(0.0, 0.0), radius, 32}, popt);
        if (m < 0.9) {
            n_cert = n;
            margin = m;
            break;
        }
    }
    rep.add_flag("certified_range", n_cert > 0,
                 n_cert > 0 ? "n_lo = " + std::to_string(n_cert) : "no contour contracts");
    if (n_cert == 0) return;
    rep.add("rouche_margin", margin, 0.9);

    for (const auto& iv : intervals) {
        if (iv.n < n_cert || iv.n >= n_cert + n_span) continue;
        try {
            const PropagateOptions popt = resolved_popt(opt, iv.hi);
            const int found =
                count_zeros(p, Contour{Complex(iv.center, 0.0), width, 64}, popt);
            rep.add_flag("interval[n=" + std::to_string(iv.n) + "," + iv.tag + "]",
                         found == static_cast<int>(iv.expected_count),
                         "found " + std::to_string(found) + ", expected " +
                             std::to_string(iv.expected_count));
        } catch (const Error& e) {
            rep.add_flag("interval[n=" + std::to_string(iv.n) + "," + iv.tag + "]", false,
                         e.what());
        }
    }

    const double lambda_lo = -v_norm - 10.0;
    for (const std::size_t n : {n_cert + 2, n_cert + 5}) {
        const double threshold = pi * pi * static_cast<double>(n * n) + width;
        const std::size_t expected = n * p.n + g.dim_nn;
        bool done = false;
        std::string note;
        double radius = 0.5 * (threshold - lambda_lo);
        const PropagateOptions popt = resolved_popt(opt, threshold);
        for (int attempt = 0; attempt < 3 && !done; ++attempt) {
            try {
                const int found = count_zeros(
                    p, Contour{Complex(threshold - radius, 0.0), radius, 256}, popt);
                done = true;
                rep.add_flag("cumulative[n=" + std::to_string(n) + "]",
                             found == static_cast<int>(expected),
                             "found " + std::to_string(found) + ", expected " +
                                 std::to_string(expected));
            } catch (const ContourTooClose& e) {
                radius -= 0.1;
                note = e.what();
            }
        }
        if (!done) rep.add_flag("cumulative[n=" + std::to_string(n) + "]", false, note);
    }
}

inline void suite_asymptotics(const ProblemDef& p, VerificationReport& rep) {
    for (const TrendQuantity q :
         {TrendQuantity::FMinusLeading, TrendQuantity::WCorrection, TrendQuantity::JBound}) {
        const TrendResult tr = asymptotics_trend(p, q);
        rep.add("trend." + to_string(q), tr.max, 3.0 * tr.median + 1e-6);
    }
}

} // namespace detail

inline VerificationReport run_suite(const ProblemDef& p, const std::string& suite,
                                    std::uint64_t seed = 0x5EED,
                                    const SpectrumOptions& opt = {}) {
    const bool all = suite == "all";
    if (!all && suite != "geometry" && suite != "wronskian" && suite != "spectral_data" &&
        suite != "counting" && suite != "asymptotics")
        throw ConfigError("unknown suite: " + suite);

    VerificationReport rep;
    rep.suite = suite;
    const auto t0 = std::chrono::steady_clock::now();
    detail::ProbeRng rng(seed);

    const bool structural_ok = validate(p).all_pass();
    if (all || suite == "geometry") {
        detail::suite_geometry(p, rep);
    } else if (!structural_ok) {
        rep.add_flag("problem_valid", false, "structural validation failed");
    }

    if (structural_ok) {
        BoundaryGeometry g;
        bool have_g = true;
        try {
            g = decompose(p.bc.t_minus, p.bc.t_plus);
        } catch (const Error& e) {
            have_g = false;
            if (suite != "geometry") rep.add_flag("decompose", false, e.what());
        }
        if (have_g) {
            if (all || suite == "wronskian") detail::suite_wronskian(p, g, rng, opt, rep);
            if (all || suite == "spectral_data") detail::suite_spectral_data(p, rng, opt, rep);
            if (all || suite == "counting") detail::suite_counting(p, g, opt, rep);
            if (all || suite == "asymptotics") detail::suite_asymptotics(p, rep);
        }
    }

    rep.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

} // namespace vsl
