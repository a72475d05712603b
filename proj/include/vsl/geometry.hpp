#pragma once

// Orthogonal decomposition of C^N induced by the two boundary projectors:
// four "corner" subspaces (Dirichlet/Neumann at each end) plus twisted
// planes where the projector ranges meet at a principal angle in (0, pi/2).

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "report.hpp"

namespace vsl {

struct TwistedBlock {
    double gamma = 0.0;        // principal angle
    std::size_t dim = 0;       // number of pairs
    ComplexMatrix basis_minus; // N x dim, spans E_- (inside Ran T-)
    ComplexMatrix basis_plus;  // N x dim, spans E_+ (inside Ran T+)
    ComplexMatrix p_minus, p_plus, p_block;
};

struct BoundaryGeometry {
    std::size_t n = 0;
    ComplexMatrix p_dd, p_nd, p_dn, p_nn;
    std::vector<TwistedBlock> twisted;

    // aggregates over all twisted blocks
    ComplexMatrix p_minus, p_plus, p_total;       // E_-, E_+, E^T
    ComplexMatrix p_minus_perp, p_plus_perp;      // complements within E^T
    ComplexMatrix i11, i12, i21, i22;             // P+^perp P-^perp, P+^perp P-, P+ P-^perp, P+ P-

    // stacked pair bases; column k belongs to the twist with angle pair_angles[k]
    ComplexMatrix basis_minus, basis_plus;            // e_k, h_k
    ComplexMatrix basis_minus_perp, basis_plus_perp;  // (h-cos e)/sin, (e-cos h)/sin
    std::vector<double> pair_angles;

    std::size_t dim_dd = 0, dim_nd = 0, dim_dn = 0, dim_nn = 0, dim_twisted_pairs = 0;
};

namespace detail {

struct Cluster {
    double mean = 0.0;
    std::vector<std::size_t> members;  // indices into the descending eigenvalue order
};

// Groups descending values whose consecutive gap is <= tol; adjacent clusters
// closer than 2*tol are declared ambiguous.
inline std::vector<Cluster> cluster_descending(const std::vector<double>& desc, double tol) {
    std::vector<Cluster> out;
    for (std::size_t k = 0; k < desc.size(); ++k) {
        if (!out.empty() && desc[out.back().members.back()] - desc[k] <= tol) {
            out.back().members.push_back(k);
        } else {
            out.push_back({0.0, {k}});
        }
    }
    for (auto& c : out) {
        double s = 0.0;
        for (std::size_t idx : c.members) s += desc[idx];
        c.mean = s / static_cast<double>(c.members.size());
    }
    for (std::size_t k = 0; k + 1 < out.size(); ++k) {
        const double gap = desc[out[k].members.back()] - desc[out[k + 1].members.front()];
        if (gap <= 2.0 * tol)
            throw ClusterAmbiguity("principal-angle clusters separated by less than twice the tolerance");
    }
    return out;
}

struct SortedEig {
    std::vector<double> values;  // descending
    ComplexMatrix vectors;       // columns aligned with values
};

inline SortedEig eig_descending(const ComplexMatrix& m) {
    const EigResult e = herm_eig(m);
    const std::size_t n = e.values.size();
    SortedEig s;
    s.values.resize(n);
    s.vectors = ComplexMatrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        s.values[k] = e.values[n - 1 - k];
        for (std::size_t i = 0; i < n; ++i) s.vectors(i, k) = e.vectors(i, n - 1 - k);
    }
    return s;
}

// Orthonormal basis of the eigenvalue-1 cluster of a PSD contraction.
inline ComplexMatrix top_cluster_basis(const ComplexMatrix& m, double tol) {
    const SortedEig e = eig_descending(m);
    auto clusters = cluster_descending(e.values, tol);
    if (clusters.empty() || std::abs(clusters.front().mean - 1.0) > tol) return ComplexMatrix(m.rows(), 0);
    ComplexMatrix basis(m.rows(), clusters.front().members.size());
    for (std::size_t j = 0; j < clusters.front().members.size(); ++j)
        for (std::size_t i = 0; i < m.rows(); ++i)
            basis(i, j) = e.vectors(i, clusters.front().members[j]);
    return basis;
}

inline ComplexMatrix hcat(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols() == 0) return b;
    if (b.cols() == 0) return a;
    if (a.rows() != b.rows()) throw DimensionMismatch("hcat rows");
    ComplexMatrix c(a.rows(), a.cols() + b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j);
        for (std::size_t j = 0; j < b.cols(); ++j) c(i, a.cols() + j) = b(i, j);
    }
    return c;
}

} // namespace detail

inline BoundaryGeometry decompose(const ComplexMatrix& t_minus, const ComplexMatrix& t_plus,
                                  double angle_tol = 1e-6) {
    const Projector tm(t_minus);
    const Projector tp(t_plus);
    const std::size_t n = tm.order();
    if (tp.order() != n) throw DimensionMismatch("boundary projectors differ in order");

    BoundaryGeometry g;
    g.n = n;
    const ComplexMatrix Tm = tm.matrix(), Tp = tp.matrix();
    const ComplexMatrix Tm_perp = tm.complement(), Tp_perp = tp.complement();

    // Corner subspaces, each the eigenvalue-1 cluster of a PSD contraction.
    const ComplexMatrix b_dd = detail::top_cluster_basis(Tp * Tm * Tp, angle_tol);
    const ComplexMatrix b_nd = detail::top_cluster_basis(Tp * Tm_perp * Tp, angle_tol);
    const ComplexMatrix b_dn = detail::top_cluster_basis(Tm * Tp_perp * Tm, angle_tol);
    const ComplexMatrix b_nn = detail::top_cluster_basis(Tp_perp * Tm_perp * Tp_perp, angle_tol);
    g.p_dd = projector_from_columns(b_dd);
    g.p_nd = projector_from_columns(b_nd);
    g.p_dn = projector_from_columns(b_dn);
    g.p_nn = projector_from_columns(b_nn);
    g.dim_dd = b_dd.cols();
    g.dim_nd = b_nd.cols();
    g.dim_dn = b_dn.cols();
    g.dim_nn = b_nn.cols();

    // Twisted planes: interior eigenvalue clusters of T+ T- T+, eigenvalue cos^2(gamma).
    const detail::SortedEig eig = detail::eig_descending(Tp * Tm * Tp);
    const auto clusters = detail::cluster_descending(eig.values, angle_tol);

    g.p_minus = ComplexMatrix(n, n);
    g.p_plus = ComplexMatrix(n, n);
    g.p_total = ComplexMatrix(n, n);

    for (const auto& cl : clusters) {
        if (cl.mean >= 1.0 - angle_tol || cl.mean <= angle_tol) continue;
        TwistedBlock blk;
        blk.gamma = std::acos(std::sqrt(cl.mean));
        blk.dim = cl.members.size();
        const double cg = std::sqrt(cl.mean), sg = std::sqrt(1.0 - cl.mean);

        ComplexMatrix h(n, blk.dim), e_raw(n, blk.dim);
        for (std::size_t j = 0; j < blk.dim; ++j)
            for (std::size_t i = 0; i < n; ++i) h(i, j) = eig.vectors(i, cl.members[j]);
        e_raw = Tm * h * (1.0 / cg);
        const ComplexMatrix e = orthonormal_columns(e_raw, 0.5);
        if (e.cols() != blk.dim)
            throw ClusterAmbiguity("twisted block basis collapsed during orthonormalization");

        blk.basis_plus = h;
        blk.basis_minus = e;
        blk.p_minus = projector_from_columns(e);
        blk.p_plus = projector_from_columns(h);

        ComplexMatrix e_perp = (h - e * cg) * (1.0 / sg);   // within-block complement of e
        ComplexMatrix h_perp = (e - h * cg) * (1.0 / sg);   // within-block complement of h
        blk.p_block = blk.p_minus + projector_from_columns(e_perp);

        g.p_minus += blk.p_minus;
        g.p_plus += blk.p_plus;
        g.p_total += blk.p_block;
        g.basis_minus = detail::hcat(g.basis_minus, e);
        g.basis_plus = detail::hcat(g.basis_plus, h);
        g.basis_minus_perp = detail::hcat(g.basis_minus_perp, e_perp);
        g.basis_plus_perp = detail::hcat(g.basis_plus_perp, h_perp);
        for (std::size_t j = 0; j < blk.dim; ++j) g.pair_angles.push_back(blk.gamma);
        g.dim_twisted_pairs += blk.dim;
        g.twisted.push_back(std::move(blk));
    }
    if (g.basis_minus.cols() == 0) {
        g.basis_minus = g.basis_plus = g.basis_minus_perp = g.basis_plus_perp = ComplexMatrix(n, 0);
    }

    if (g.dim_dd + g.dim_nd + g.dim_dn + g.dim_nn + 2 * g.dim_twisted_pairs != n)
        throw ClusterAmbiguity("decomposition dimensions do not add up to the order");

    g.p_minus_perp = g.p_total - g.p_minus;
    g.p_plus_perp = g.p_total - g.p_plus;
    g.i11 = g.p_plus_perp * g.p_minus_perp;
    g.i12 = g.p_plus_perp * g.p_minus;
    g.i21 = g.p_plus * g.p_minus_perp;
    g.i22 = g.p_plus * g.p_minus;
    return g;
}

inline VerificationReport verify_geometry(const BoundaryGeometry& g, const ComplexMatrix& t_minus,
                                          const ComplexMatrix& t_plus) {
    VerificationReport rep;
    rep.suite = "geometry";
    const std::size_t n = g.n;
    const ComplexMatrix id = ComplexMatrix::identity(n);
    const double tol = 1e-10 * std::max<double>(1.0, static_cast<double>(n));

    ComplexMatrix sum = g.p_dd + g.p_nd + g.p_dn + g.p_nn + g.p_total;
    rep.add("completeness", (sum - id).frobenius(), tol);

    std::vector<std::pair<std::string, const ComplexMatrix*>> parts = {
        {"dd", &g.p_dd}, {"nd", &g.p_nd}, {"dn", &g.p_dn}, {"nn", &g.p_nn}, {"tw", &g.p_total}};
    double ortho = 0.0;
    for (std::size_t i = 0; i < parts.size(); ++i)
        for (std::size_t j = i + 1; j < parts.size(); ++j)
            ortho = std::max(ortho, (*parts[i].second * *parts[j].second).frobenius());
    rep.add("pairwise_orthogonality", ortho, tol);

    ComplexMatrix tm_rebuilt = g.p_dd + g.p_dn + g.p_minus;
    ComplexMatrix tp_rebuilt = g.p_dd + g.p_nd + g.p_plus;
    rep.add("t_minus_reconstruction", (tm_rebuilt - t_minus).frobenius(), tol);
    rep.add("t_plus_reconstruction", (tp_rebuilt - t_plus).frobenius(), tol);

    ComplexMatrix spectral = g.p_dd;
    for (const auto& blk : g.twisted) {
        const double c2 = std::cos(blk.gamma) * std::cos(blk.gamma);
        spectral += c2 * blk.p_minus;
    }
    rep.add("spectral_product", (t_minus * t_plus * t_minus - spectral).frobenius(), tol);

    double angle_ok = 0.0;
    for (const auto& blk : g.twisted)
        if (blk.gamma <= 0.0 || blk.gamma >= std::numbers::pi / 2) angle_ok = 1.0;
    rep.add("angles_strictly_interior", angle_ok, 0.5);

    const std::size_t r = g.dim_twisted_pairs;
    if (r > 0) {
        double basis_dev = 0.0;
        for (const ComplexMatrix* b :
             {&g.basis_minus, &g.basis_plus, &g.basis_minus_perp, &g.basis_plus_perp})
            basis_dev = std::max(basis_dev,
                                 (b->adjoint() * *b - ComplexMatrix::identity(r)).frobenius());
        rep.add("pair_bases_orthonormal", basis_dev, tol);

        // Rank chain: all four block maps have full rank r between the twisted subspaces.
        bool ranks = numerical_rank(g.i11) == r && numerical_rank(g.i12) == r &&
                     numerical_rank(g.i21) == r && numerical_rank(g.i22) == r;
        rep.add_flag("block_maps_full_rank", ranks);

        // Matrix elements in the pair bases: I22 e = cos(g) h, I12 e = sin(g) h~,
        // I21 e~ = sin(g) h, I11 e~ = -cos(g) h~.
        ComplexMatrix cos_d(r, r), sin_d(r, r);
        for (std::size_t k = 0; k < r; ++k) {
            cos_d(k, k) = std::cos(g.pair_angles[k]);
            sin_d(k, k) = std::sin(g.pair_angles[k]);
        }
        double elem = 0.0;
        elem = std::max(elem, (g.i22 * g.basis_minus - g.basis_plus * cos_d).frobenius());
        elem = std::max(elem, (g.i12 * g.basis_minus - g.basis_plus_perp * sin_d).frobenius());
        elem = std::max(elem, (g.i21 * g.basis_minus_perp - g.basis_plus * sin_d).frobenius());
        elem = std::max(elem, (g.i11 * g.basis_minus_perp + g.basis_plus_perp * cos_d).frobenius());
        rep.add("block_map_matrix_elements", elem, tol);
    } else {
        rep.add("block_maps_full_rank", 0.0, 0.5, "no twisted blocks");
    }
    return rep;
}

} // namespace vsl
