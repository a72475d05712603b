#pragma once

// Eigenvalue localization and refinement, multiplicity certification,
// spectral-data triplets (lambda, P, g), the regularized Z matrix, the
// Weyl-Titchmarsh function with its residues, and the fingerprint distance
// between two problems sharing boundary geometry.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "linalg.hpp"
#include "problem.hpp"
#include "propagate.hpp"
#include "wronskian.hpp"

namespace vsl {

struct LocalizationInterval {
    double lo = 0.0;
    double hi = 0.0;
    double center = 0.0;
    std::size_t expected_count = 0;
    std::string tag;
    std::size_t n = 0;
};

inline double counting_width(double v_norm) { return 2.0 * (v_norm + 1.0); }

namespace detail {

// Distinct sqrt-lambda offsets (mod pi) at which series of this geometry sit.
inline std::vector<double> series_offsets(const BoundaryGeometry& g) {
    std::vector<double> offsets;
    if (g.dim_nn + g.dim_dd > 0) offsets.push_back(0.0);
    if (g.dim_nd + g.dim_dn > 0) offsets.push_back(std::numbers::pi / 2);
    for (const auto& blk : g.twisted) {
        offsets.push_back(blk.gamma);
        offsets.push_back(std::numbers::pi - blk.gamma);
    }
    std::sort(offsets.begin(), offsets.end());
    return offsets;
}

inline double min_offset_gap(const std::vector<double>& offsets) {
    if (offsets.size() < 2) return std::numbers::pi;
    double best = offsets.front() + std::numbers::pi - offsets.back();
    for (std::size_t i = 0; i + 1 < offsets.size(); ++i)
        best = std::min(best, offsets[i + 1] - offsets[i]);
    return best;
}

} // namespace detail

inline std::vector<LocalizationInterval> localization_intervals(const BoundaryGeometry& g,
                                                                double v_norm,
                                                                std::size_t n_max) {
    if (n_max < 1) throw DomainError("localization needs n_max >= 1");
    const double pi = std::numbers::pi;
    const double width = counting_width(v_norm);
    const double gap = detail::min_offset_gap(detail::series_offsets(g));
    const auto n_lo =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(width / (pi * gap))));
    std::vector<LocalizationInterval> out;
    auto emit = [&](double root, std::size_t count, std::string tag, std::size_t n) {
        if (count == 0 || root < 0.0) return;
        const double center = root * root;
        out.push_back({center - width, center + width, center, count, std::move(tag), n});
    };
    for (std::size_t n = n_lo; n <= n_max; ++n) {
        const double base = pi * static_cast<double>(n);
        std::string corner_tag = g.dim_nn > 0 ? (g.dim_dd > 0 ? "NN+DD" : "NN")
                                              : "DD";
        emit(base, g.dim_nn + g.dim_dd, corner_tag, n);
        emit(base + pi / 2, g.dim_nd + g.dim_dn, "ND/DN", n);
        for (std::size_t i = 0; i < g.twisted.size(); ++i) {
            const auto& blk = g.twisted[i];
            emit(base - blk.gamma, blk.dim, "twisted(" + std::to_string(i) + ",-)", n);
            emit(base + blk.gamma, blk.dim, "twisted(" + std::to_string(i) + ",+)", n);
        }
    }
    std::sort(out.begin(), out.end(),
              [](const LocalizationInterval& a, const LocalizationInterval& b) {
                  return a.center < b.center;
              });
    return out;
}

struct EigenvalueRecord {
    double lambda = 0.0;
    std::size_t multiplicity = 0;
    std::string series_tag = "none";
    double interval_lo = 0.0;
    double interval_hi = 0.0;
    bool cluster = false;
    double gap = std::numeric_limits<double>::infinity();
    double sigma_min = 0.0;
};

struct SpectrumOptions {
    double rank_tol = 1e-8;
    double lambda_tol = 1e-10;  // absolute tolerance scales as lambda_tol * (1 + |lambda|)
    std::size_t scan_grid = 128;
    std::size_t refine_grid = 256;
    std::size_t max_grid = 16384;
};

namespace detail {

// Signed sqrt coordinate: lambda(t) = sign(t) t^2 walks the real axis smoothly
// through zero while keeping uniform resolution in sqrt(lambda) above it.
inline double lambda_of(double t) { return t < 0.0 ? -t * t : t * t; }

template <typename F>
double golden_min(F&& f, double lo, double hi, double tol) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

inline double sigma_min_at(const ProblemDef& p, double lambda, std::size_t grid) {
    PropagateOptions opt;
    opt.grid_size = grid;
    return singular_values(wronskian(p, lambda, opt).w).back();
}

// Propagation error in W grows like (h sqrt(lambda))^4, so rank and winding
// decisions stay trustworthy only when the step tracks the local frequency.
inline std::size_t resolved_grid(const SpectrumOptions& opt, double lambda,
                                 double steps_per_period = 50.0) {
    const double need = steps_per_period * std::sqrt(1.0 + std::abs(lambda));
    std::size_t grid = opt.refine_grid;
    while (static_cast<double>(grid) < need && grid * 2 <= opt.max_grid) grid *= 2;
    return grid;
}

// The discretized root drifts from the true one like lambda^3 h^4 / 60, one
// power of lambda beyond plain value accuracy, so rank decisions made at a
// recorded eigenvalue need a step that tracks the drift, not just the period.
inline std::size_t dip_resolved_grid(const SpectrumOptions& opt, double lambda) {
    const double steps = 50.0 * std::pow(1.0 + std::abs(lambda), 0.25);
    return resolved_grid(opt, lambda, steps);
}

struct RefinedRoot {
    double lambda;
    double sigma;
};

// Golden-section refinement of a sigma_min dip with grid-doubling acceptance.
inline RefinedRoot refine_root(const ProblemDef& p, double t_lo, double t_hi,
                               const SpectrumOptions& opt) {
    const double t_center = 0.5 * (t_lo + t_hi);
    const double lambda_tol = opt.lambda_tol * (1.0 + std::abs(lambda_of(t_center)));
    const double t_tol = lambda_tol / (2.0 * std::abs(t_center) + std::sqrt(lambda_tol));
    std::size_t grid = opt.refine_grid;
    auto objective = [&](std::size_t g) {
        return [&p, g](double t) { return sigma_min_at(p, lambda_of(t), g); };
    };
    double t_best = golden_min(objective(grid), t_lo, t_hi, t_tol);
    double lambda_prev = std::numeric_limits<double>::quiet_NaN();
    while (2 * grid <= opt.max_grid) {
        const double half = std::max(16.0 * t_tol, (t_hi - t_lo) / 16.0);
        const double t_next =
            golden_min(objective(2 * grid), t_best - half, t_best + half, t_tol);
        const bool settled = std::abs(lambda_of(t_next) - lambda_of(t_best)) <= lambda_tol;
        lambda_prev = lambda_of(t_best);
        t_best = t_next;
        grid *= 2;
        if (settled) break;
    }
    // The dip location carries a systematic h^4 shift from the integrator;
    // one Richardson step across the last grid doubling removes it.
    double lam = lambda_of(t_best);
    if (!std::isnan(lambda_prev)) lam += (lam - lambda_prev) / 15.0;
    return {lam, sigma_min_at(p, lam, grid)};
}

inline std::size_t kernel_dimension(const ProblemDef& p, double lambda,
                                    const SpectrumOptions& opt) {
    PropagateOptions popt;
    popt.grid_size = dip_resolved_grid(opt, lambda);
    return kernel_basis(wronskian(p, lambda, popt).w, opt.rank_tol).cols();
}

} // namespace detail

inline std::vector<EigenvalueRecord> find_eigenvalues(const ProblemDef& p, double lambda_max,
                                                      const SpectrumOptions& opt = {}) {
    if (lambda_max <= 0.0) throw DomainError("find_eigenvalues needs lambda_max > 0");
    const BoundaryGeometry geometry = decompose(p.bc.t_minus, p.bc.t_plus);
    const double v_norm = problem_norm(p);
    const double lambda_lo = -v_norm - 10.0;
    const double base_step = detail::min_offset_gap(detail::series_offsets(geometry)) / 8.0;
    const double t_lo = -std::sqrt(-lambda_lo);
    const double t_hi = std::sqrt(lambda_max) + base_step;

    struct Candidate {
        double lambda;
        double sigma;
        bool cluster;
    };
    auto merge_clusters = [](const std::vector<detail::RefinedRoot>& in) {
        std::vector<Candidate> out;
        for (const auto& r : in) {
            if (!out.empty() &&
                r.lambda - out.back().lambda <= 1e-6 * (1.0 + std::abs(r.lambda))) {
                out.back().lambda = 0.5 * (out.back().lambda + r.lambda);
                out.back().sigma = std::min(out.back().sigma, r.sigma);
                out.back().cluster = true;
            } else {
                out.push_back({r.lambda, r.sigma, false});
            }
        }
        return out;
    };
    auto neighbor_gap = [&](const std::vector<Candidate>& v, std::size_t i) {
        double gap = std::numeric_limits<double>::infinity();
        if (i > 0) gap = std::min(gap, v[i].lambda - v[i - 1].lambda);
        if (i + 1 < v.size()) gap = std::min(gap, v[i + 1].lambda - v[i].lambda);
        return gap;
    };
    // Counting on a circle that grazes a zero is meaningless; shrink away from
    // it and remember the graze, since it betrays a root near the radius.
    auto robust_count = [&](double center, double r0) -> std::pair<int, bool> {
        PropagateOptions copt;
        copt.grid_size = detail::resolved_grid(opt, center);
        bool grazed = false;
        double r = r0;
        for (int attempt = 0; attempt < 4; ++attempt) {
            try {
                return {count_zeros(p, {Complex(center, 0.0), r, 64}, copt), grazed};
            } catch (const ContourTooClose&) {
                grazed = true;
                r *= 0.61;
            }
        }
        throw UnresolvedCluster("zeros crowd every contour around a candidate");
    };

    auto sweep = [&](double step) {
        const auto count = static_cast<std::size_t>(std::ceil((t_hi - t_lo) / step)) + 1;
        std::vector<double> ts(count), sigmas(count);
        for (std::size_t k = 0; k < count; ++k) {
            ts[k] = t_lo + static_cast<double>(k) * step;
            sigmas[k] = detail::sigma_min_at(p, detail::lambda_of(ts[k]), opt.scan_grid);
        }

        std::vector<detail::RefinedRoot> roots;
        auto refine_bracket = [&](double lo, double hi) {
            const detail::RefinedRoot r = detail::refine_root(p, lo, hi, opt);
            if (r.lambda > lambda_lo && r.lambda < lambda_max) roots.push_back(r);
        };
        for (std::size_t k = 0; k < count; ++k) {
            const bool left_ok = k == 0 || sigmas[k] < sigmas[k - 1];
            const bool right_ok = k + 1 == count || sigmas[k] <= sigmas[k + 1];
            if (k > 0 && k + 1 < count && left_ok && right_ok)
                refine_bracket(ts[k - 1], ts[k + 1]);
            else if (k == 0 && right_ok && sigmas[0] < sigmas[1])
                refine_bracket(ts[0] - step, ts[1]);
            else if (k + 1 == count && left_ok)
                refine_bracket(ts[k - 1], ts[k] + step);
        }
        std::sort(roots.begin(), roots.end(),
                  [](const detail::RefinedRoot& a, const detail::RefinedRoot& b) {
                      return a.lambda < b.lambda;
                  });
        std::vector<Candidate> candidates = merge_clusters(roots);

        std::vector<EigenvalueRecord> records;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            const Candidate& cand = candidates[i];
            const double gap = neighbor_gap(candidates, i);
            const double radius = std::min(gap / 3.0, 0.5);
            const auto [enclosed, grazed] = robust_count(cand.lambda, radius);
            if (enclosed == 0) continue;  // a benign dip of sigma_min, not a zero
            const std::size_t kernel_dim = detail::kernel_dimension(p, cand.lambda, opt);
            if (kernel_dim > static_cast<std::size_t>(enclosed))
                throw UnresolvedCluster("kernel dimension exceeds the contour count");
            bool cluster = cand.cluster;
            if (grazed || kernel_dim < static_cast<std::size_t>(enclosed)) {
                // The circle holds or touches roots the coarse scan stepped
                // over.  Fine sub-scans on shrinking windows split them out; a
                // companion missed at one resolution lies within two scan steps
                // of the candidate, so a twelvefold zoom always keeps it in
                // frame.  Once the scan resolves below the merge tolerance the
                // roots coincide to that tolerance and the record is a cluster.
                // A companion can also sit exactly at the counting radius, so
                // the first window stretches past it and edge dips count.
                const double merge_tol = 1e-6 * (1.0 + std::abs(cand.lambda));
                bool emitted = false;
                double half = 1.5 * radius;
                for (int round = 0; round < 6; ++round, half /= 12.0) {
                    const double lo = cand.lambda - half;
                    const double hi = cand.lambda + half;
                    const double t_a = lo < 0.0 ? -std::sqrt(-lo) : std::sqrt(lo);
                    const double t_b = hi < 0.0 ? -std::sqrt(-hi) : std::sqrt(hi);
                    const double fine = (t_b - t_a) / 96.0;
                    std::vector<double> fts(99), fss(99);
                    for (std::size_t j = 0; j < fts.size(); ++j) {
                        fts[j] = t_a + (static_cast<double>(j) - 1.0) * fine;
                        fss[j] = detail::sigma_min_at(p, detail::lambda_of(fts[j]), opt.scan_grid);
                    }
                    std::vector<detail::RefinedRoot> merged{{cand.lambda, cand.sigma}};
                    for (std::size_t j = 1; j + 1 < fts.size(); ++j)
                        if (fss[j] < fss[j - 1] && fss[j] <= fss[j + 1]) {
                            const detail::RefinedRoot r =
                                detail::refine_root(p, fts[j - 1], fts[j + 1], opt);
                            if (std::abs(r.lambda - cand.lambda) > merge_tol)
                                merged.push_back(r);
                        }
                    std::sort(merged.begin(), merged.end(),
                              [](const detail::RefinedRoot& a, const detail::RefinedRoot& b) {
                                  return a.lambda < b.lambda;
                              });
                    std::vector<Candidate> split = merge_clusters(merged);
                    if (split.size() > 1) {
                        for (std::size_t j = 0; j < split.size(); ++j) {
                            const double g2 = std::min(neighbor_gap(split, j), gap);
                            const double r2 = std::min(g2 / 3.0, 0.5);
                            const auto [c2, sub_grazed] = robust_count(split[j].lambda, r2);
                            if (c2 == 0) continue;
                            EigenvalueRecord rec;
                            rec.lambda = split[j].lambda;
                            rec.multiplicity = static_cast<std::size_t>(c2);
                            rec.cluster = split[j].cluster ||
                                          detail::kernel_dimension(p, split[j].lambda, opt) !=
                                              static_cast<std::size_t>(c2);
                            rec.sigma_min = split[j].sigma;
                            records.push_back(rec);
                        }
                        emitted = true;
                        break;
                    }
                    if (kernel_dim == static_cast<std::size_t>(enclosed))
                        break;  // the graze was benign and nothing new turned up
                    const double t_out = std::max(std::abs(t_a), std::abs(t_b));
                    if (fine * 2.0 * t_out <= 0.5 * merge_tol) break;
                }
                if (emitted) continue;
                if (kernel_dim < static_cast<std::size_t>(enclosed))
                    cluster = true;  // several roots too close to separate numerically
            }
            EigenvalueRecord rec;
            rec.lambda = cand.lambda;
            rec.multiplicity = static_cast<std::size_t>(enclosed);
            rec.cluster = cluster;
            rec.sigma_min = cand.sigma;
            records.push_back(rec);
        }

        std::sort(records.begin(), records.end(),
                  [](const EigenvalueRecord& a, const EigenvalueRecord& b) {
                      return a.lambda < b.lambda;
                  });
        // Overlapping rescue windows can rediscover the same root twice.
        std::vector<EigenvalueRecord> unique;
        for (const auto& r : records) {
            if (!unique.empty() &&
                r.lambda - unique.back().lambda <= 1e-6 * (1.0 + std::abs(r.lambda))) {
                unique.back().multiplicity =
                    std::max(unique.back().multiplicity, r.multiplicity);
                unique.back().cluster = unique.back().cluster || r.cluster;
                unique.back().sigma_min = std::min(unique.back().sigma_min, r.sigma_min);
            } else {
                unique.push_back(r);
            }
        }
        return unique;
    };

    // One contour around the whole scanned window counts every zero inside it;
    // a sweep that resolves fewer roots has stepped over a dip and reruns at
    // half the step until the books balance.
    double big_center = 0.5 * (lambda_lo + lambda_max);
    double big_radius = 0.5 * (lambda_max - lambda_lo);
    PropagateOptions audit_opt;
    audit_opt.grid_size = detail::resolved_grid(opt, std::max(-lambda_lo, lambda_max));
    int expected = -1;
    for (int attempt = 0; attempt < 8 && expected < 0; ++attempt) {
        try {
            expected = count_zeros(p, {Complex(big_center, 0.0), big_radius, 256}, audit_opt);
        } catch (const ContourTooClose&) {
            big_radius *= 0.999;
        }
    }
    if (expected < 0)
        throw UnresolvedCluster("no eigenvalue-free contour brackets the scan window");
    const double audit_top = big_center + big_radius;

    std::vector<EigenvalueRecord> records;
    double step = base_step;
    for (int pass = 0;; ++pass, step *= 0.5) {
        records = sweep(step);
        std::size_t resolved = 0;
        for (const auto& r : records)
            if (r.lambda <= audit_top) resolved += r.multiplicity;
        if (resolved == static_cast<std::size_t>(expected)) break;
        if (pass >= 6)
            throw UnresolvedCluster("scan cannot account for every zero inside the window");
    }
    const auto n_max = static_cast<std::size_t>(
        std::ceil(std::sqrt(std::max(lambda_max, 1.0)) / std::numbers::pi)) + 1;
    const std::vector<LocalizationInterval> intervals =
        localization_intervals(geometry, v_norm, n_max);
    for (std::size_t i = 0; i < records.size(); ++i) {
        EigenvalueRecord& rec = records[i];
        rec.gap = std::numeric_limits<double>::infinity();
        if (i > 0) rec.gap = std::min(rec.gap, rec.lambda - records[i - 1].lambda);
        if (i + 1 < records.size())
            rec.gap = std::min(rec.gap, records[i + 1].lambda - rec.lambda);
        const LocalizationInterval* home = nullptr;
        for (const auto& iv : intervals)
            if (rec.lambda >= iv.lo && rec.lambda <= iv.hi)
                if (!home || std::abs(rec.lambda - iv.center) < std::abs(rec.lambda - home->center))
                    home = &iv;
        if (home) {
            rec.series_tag = home->tag;
            rec.interval_lo = home->lo;
            rec.interval_hi = home->hi;
        } else {
            const double r = std::min(rec.gap / 3.0, 0.5);
            rec.interval_lo = rec.lambda - r;
            rec.interval_hi = rec.lambda + r;
        }
    }
    return records;
}

struct SpectralTriplet {
    double lambda = 0.0;
    Projector p = Projector::zero(1);
    ComplexMatrix basis;  // orthonormal columns spanning Ran p
    ComplexMatrix g;      // restriction of P S P to Ran p in that basis

    ComplexMatrix g_full() const { return basis * g * basis.adjoint(); }
};

namespace detail {

struct KernelData {
    PropagationResult prop;
    ComplexMatrix w;
    ComplexMatrix basis;
};

inline KernelData eigen_kernel(const ProblemDef& p, const EigenvalueRecord& rec,
                               const SpectrumOptions& opt) {
    PropagateOptions popt;
    popt.grid_size = dip_resolved_grid(opt, rec.lambda);
    KernelData out{fundamental(p, Side::Minus, Complex(rec.lambda, 0.0), popt), {}, {}};
    out.w = boundary_map(p.bc, Side::Plus, BoundaryMapKind::Gamma, out.prop.f.back(),
                         out.prop.fp.back());
    out.basis = kernel_basis(out.w, opt.rank_tol);
    if (out.basis.cols() != rec.multiplicity)
        throw RankMismatch("kernel dimension disagrees with the recorded multiplicity");
    return out;
}

inline void require_positive(const ComplexMatrix& g) {
    const EigResult eig = herm_eig(hermitize(g));
    if (eig.values.empty() || eig.values.front() <= 0.0)
        throw RankMismatch("restricted norming matrix is not positive definite");
}

} // namespace detail

inline SpectralTriplet spectral_triplet(const ProblemDef& p, const EigenvalueRecord& rec,
                                        const SpectrumOptions& opt = {}) {
    const detail::KernelData kd = detail::eigen_kernel(p, rec, opt);
    const std::size_t grid = kd.prop.x.size() - 1;
    const double h = 1.0 / static_cast<double>(grid);
    ComplexMatrix s(p.n, p.n);
    for (std::size_t i = 0; i <= grid; ++i) {
        const double weight = (i == 0 || i == grid) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        const ComplexMatrix f_true = kd.prop.f[i] * std::exp(kd.prop.unscale_log(i));
        s += (weight * h / 3.0) * (f_true.adjoint() * f_true);
    }
    SpectralTriplet out;
    out.lambda = rec.lambda;
    out.basis = kd.basis;
    out.p = Projector(projector_from_columns(kd.basis));
    out.g = hermitize(kd.basis.adjoint() * (s * kd.basis));
    detail::require_positive(out.g);
    return out;
}

inline SpectralTriplet triplet_via_derivative(const ProblemDef& p, const EigenvalueRecord& rec,
                                              const SpectrumOptions& opt = {}) {
    PropagateOptions popt;
    popt.grid_size = detail::dip_resolved_grid(opt, rec.lambda);
    const DerivativeResult dr =
        fundamental_dlambda(p, Side::Minus, Complex(rec.lambda, 0.0), popt);
    const ComplexMatrix w = boundary_map(p.bc, Side::Plus, BoundaryMapKind::Gamma,
                                         dr.base.f.back(), dr.base.fp.back());
    const ComplexMatrix basis = kernel_basis(w, opt.rank_tol);
    if (basis.cols() != rec.multiplicity)
        throw RankMismatch("kernel dimension disagrees with the recorded multiplicity");
    const double unscale = std::exp(dr.base.far_unscale_log());
    const ComplexMatrix w_dot = boundary_map(p.bc, Side::Plus, BoundaryMapKind::Gamma,
                                             dr.deriv.f.back(), dr.deriv.fp.back()) *
                                unscale;
    const ComplexMatrix w_dual = boundary_map(p.bc, Side::Plus, BoundaryMapKind::GammaDual,
                                              dr.base.f.back(), dr.base.fp.back()) *
                                 unscale;
    SpectralTriplet out;
    out.lambda = rec.lambda;
    out.basis = basis;
    out.p = Projector(projector_from_columns(basis));
    out.g = hermitize(Complex(-1.0, 0.0) * (basis.adjoint() * (w_dot.adjoint() * (w_dual * basis))));
    detail::require_positive(out.g);
    return out;
}

inline ComplexMatrix z_matrix(const ProblemDef& p, const EigenvalueRecord& rec,
                              const SpectrumOptions& opt = {}) {
    PropagateOptions popt;
    popt.grid_size = detail::dip_resolved_grid(opt, rec.lambda);
    const DerivativeResult dr =
        fundamental_dlambda(p, Side::Minus, Complex(rec.lambda, 0.0), popt);
    const ComplexMatrix w = boundary_map(p.bc, Side::Plus, BoundaryMapKind::Gamma,
                                         dr.base.f.back(), dr.base.fp.back());
    const ComplexMatrix basis = kernel_basis(w, opt.rank_tol);
    if (basis.cols() != rec.multiplicity)
        throw RankMismatch("kernel dimension disagrees with the recorded multiplicity");
    const double unscale = std::exp(dr.base.far_unscale_log());
    const ComplexMatrix w_dot = boundary_map(p.bc, Side::Plus, BoundaryMapKind::Gamma,
                                             dr.deriv.f.back(), dr.deriv.fp.back()) *
                                unscale;
    const Projector proj(projector_from_columns(basis));
    const ComplexMatrix z = w_dot * proj.matrix() + (w * unscale) * proj.complement();
    const auto sv = singular_values(z);
    if (sv.back() <= 1e-8 * sv.front())
        throw DegenerateZ("Z matrix is numerically singular");
    return z;
}

struct WeylSample {
    Complex lambda;
    ComplexMatrix m;
};

inline WeylSample m_function(const ProblemDef& p, Complex lambda,
                             const SpectrumOptions& opt = {}) {
    PropagateOptions popt;
    popt.grid_size = detail::resolved_grid(opt, std::abs(lambda), 130.0);
    const PropagationResult r = fundamental(p, Side::Plus, lambda, popt);
    const ComplexMatrix gm = boundary_map(p.bc, Side::Minus, BoundaryMapKind::Gamma,
                                          r.f.front(), r.fp.front());
    const ComplexMatrix gd = boundary_map(p.bc, Side::Minus, BoundaryMapKind::GammaDual,
                                          r.f.front(), r.fp.front());
    // At a pole the whole trace map degenerates, not just its smallest
    // direction, so the dual trace supplies the scale sigma_min is held to.
    const auto sv = singular_values(gm);
    const double scale = std::max(sv.front(), spectral_norm(gd));
    if (sv.back() <= 1e-10 * std::max(scale, 1e-300))
        throw NearPole("lambda sits on or too close to a pole of the Weyl function");
    const ComplexMatrix m = Complex(-1.0, 0.0) * (gd * invert(gm));
    if (std::abs(lambda.imag()) <= 1e-14 * (1.0 + std::abs(lambda.real()))) {
        const double dev = (m - m.adjoint()).frobenius();
        if (dev > 1e-6 * std::max(1.0, m.frobenius()))
            throw NotHermitian("Weyl sample at real lambda is not self-adjoint");
    }
    return {lambda, m};
}

inline ComplexMatrix residue(const ProblemDef& p, const EigenvalueRecord& rec,
                             const SpectrumOptions& opt = {}) {
    const double radius = std::min(rec.gap / 3.0, 0.1);
    constexpr std::size_t kNodes = 256;
    ComplexMatrix sum(p.n, p.n);
    for (std::size_t k = 0; k < kNodes; ++k) {
        const double theta =
            2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(kNodes);
        const Complex dir = std::polar(1.0, theta);
        try {
            sum += dir * m_function(p, Complex(rec.lambda, 0.0) + radius * dir, opt).m;
        } catch (const NearPole&) {
            throw ContourTooClose("residue contour touches another pole");
        }
    }
    return sum * Complex(radius / static_cast<double>(kNodes), 0.0);
}

inline std::vector<EigenvalueRecord> first_eigenvalues(const ProblemDef& p, std::size_t m,
                                                       const SpectrumOptions& opt = {}) {
    const double pi = std::numbers::pi;
    double lambda_max =
        std::pow(pi * (static_cast<double>(m) / static_cast<double>(p.n) + 2.0), 2.0) +
        counting_width(problem_norm(p));
    for (int attempt = 0; attempt < 8; ++attempt) {
        std::vector<EigenvalueRecord> records = find_eigenvalues(p, lambda_max, opt);
        std::size_t total = 0;
        for (const auto& r : records) total += r.multiplicity;
        if (total >= m || records.size() >= m) {
            if (records.size() > m) records.resize(m);
            return records;
        }
        lambda_max = lambda_max * 1.7 + 10.0;
    }
    throw DomainError("could not collect the requested number of eigenvalues");
}

inline double fingerprint_distance(const ProblemDef& pa, const ProblemDef& pb, std::size_t m,
                                   bool* aligned_out = nullptr,
                                   const SpectrumOptions& opt = {}) {
    if (pa.n != pb.n) throw DimensionMismatch("fingerprints need a common dimension");
    if ((pa.bc.t_minus - pb.bc.t_minus).frobenius() > 1e-10 ||
        (pa.bc.t_plus - pb.bc.t_plus).frobenius() > 1e-10)
        throw ConfigError("fingerprints need identical boundary projections");
    const std::vector<EigenvalueRecord> ra = first_eigenvalues(pa, m, opt);
    const std::vector<EigenvalueRecord> rb = first_eigenvalues(pb, m, opt);
    const std::size_t shared = std::min({m, ra.size(), rb.size()});
    bool aligned = ra.size() >= m && rb.size() >= m;
    double dist = 0.0;
    for (std::size_t i = 0; i < shared; ++i) {
        if (ra[i].multiplicity != rb[i].multiplicity) aligned = false;
        const SpectralTriplet ta = spectral_triplet(pa, ra[i], opt);
        const SpectralTriplet tb = spectral_triplet(pb, rb[i], opt);
        dist += std::abs(ta.lambda - tb.lambda);
        dist += spectral_norm(ta.p.matrix() - tb.p.matrix());
        dist += spectral_norm(ta.g_full() - tb.g_full());
    }
    if (aligned_out) *aligned_out = aligned;
    return dist;
}

} // namespace vsl
