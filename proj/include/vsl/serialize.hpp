#pragma once

// JSON encoding for problems, geometry, spectral data, and reports. Complex
// entries serialize as [re, im]; matrices as arrays of rows. Doubles pass
// through the shortest round-trip form, so load(save(x)) is bit-identical.

#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "errors.hpp"
#include "geometry.hpp"
#include "linalg.hpp"
#include "problem.hpp"
#include "report.hpp"
#include "spectrum.hpp"
#include "verify.hpp"

namespace vsl {

using Json = nlohmann::json;

inline Json to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Json to_json(const ComplexMatrix& m) {
    Json rows = Json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(to_json(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Complex complex_from(const Json& j) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    throw ConfigError("complex entries must be numbers or [re, im] pairs");
}

inline ComplexMatrix matrix_from(const Json& j) {
    if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty())
        throw ConfigError("matrix must be a non-empty array of non-empty rows");
    const std::size_t rows = j.size();
    const std::size_t cols = j[0].size();
    ComplexMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (!j[i].is_array() || j[i].size() != cols)
            throw ConfigError("matrix rows must all have the same length");
        for (std::size_t c = 0; c < cols; ++c) m(i, c) = complex_from(j[i][c]);
    }
    return m;
}

inline PotentialKind potential_kind_from(const std::string& s) {
    if (s == "constant") return PotentialKind::Constant;
    if (s == "polynomial") return PotentialKind::Polynomial;
    if (s == "fourier") return PotentialKind::Fourier;
    if (s == "sampled-grid") return PotentialKind::SampledGrid;
    throw ConfigError("unknown potential kind: " + s);
}

inline Json to_json(const Potential& v) {
    Json out;
    out["kind"] = to_string(v.kind);
    Json data = Json::array();
    for (const auto& c : v.data) data.push_back(to_json(c));
    out["data"] = std::move(data);
    if (v.kind == PotentialKind::SampledGrid) out["nodes"] = v.nodes;
    return out;
}

inline Json to_json(const ProblemDef& p) {
    Json out;
    out["n"] = p.n;
    out["potential"] = to_json(p.potential);
    out["t_minus"] = to_json(p.bc.t_minus);
    out["t_plus"] = to_json(p.bc.t_plus);
    out["a"] = to_json(p.bc.a);
    out["b"] = to_json(p.bc.b);
    return out;
}

inline ProblemDef problem_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("problem file must hold a JSON object");
    for (const char* key : {"n", "potential", "t_minus", "t_plus", "a", "b"})
        if (!j.contains(key)) throw ConfigError(std::string("problem is missing \"") + key + "\"");
    ProblemDef p;
    if (!j["n"].is_number_unsigned() || j["n"].get<std::size_t>() == 0)
        throw ConfigError("\"n\" must be a positive integer");
    p.n = j["n"].get<std::size_t>();

    const Json& pot = j["potential"];
    if (!pot.is_object() || !pot.contains("kind") || !pot.contains("data"))
        throw ConfigError("\"potential\" needs \"kind\" and \"data\"");
    p.potential.kind = potential_kind_from(pot["kind"].get<std::string>());
    if (!pot["data"].is_array() || pot["data"].empty())
        throw ConfigError("potential \"data\" must be a non-empty array of matrices");
    for (const auto& c : pot["data"]) p.potential.data.push_back(matrix_from(c));
    if (p.potential.kind == PotentialKind::SampledGrid) {
        if (!pot.contains("nodes") || !pot["nodes"].is_array() ||
            pot["nodes"].size() != p.potential.data.size())
            throw ConfigError("sampled-grid potential needs one node per sample");
        for (const auto& x : pot["nodes"]) p.potential.nodes.push_back(x.get<double>());
    }

    p.bc.t_minus = matrix_from(j["t_minus"]);
    p.bc.t_plus = matrix_from(j["t_plus"]);
    p.bc.a = matrix_from(j["a"]);
    p.bc.b = matrix_from(j["b"]);

    auto square = [&](const ComplexMatrix& m) { return m.rows() == p.n && m.cols() == p.n; };
    bool shapes = square(p.bc.t_minus) && square(p.bc.t_plus) && square(p.bc.a) && square(p.bc.b);
    for (const auto& c : p.potential.data) shapes = shapes && square(c);
    if (!shapes) throw ConfigError("every matrix must be n x n");
    return p;
}

inline ProblemDef load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return problem_from_json(j);
}

inline void save_json(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << j.dump(2) << '\n';
}

inline Json to_json(const BoundaryGeometry& g) {
    Json out;
    out["n"] = g.n;
    out["dims"] = {{"dd", g.dim_dd},
                   {"nd", g.dim_nd},
                   {"dn", g.dim_dn},
                   {"nn", g.dim_nn},
                   {"twisted_pairs", g.dim_twisted_pairs}};
    Json gammas = Json::array();
    Json blocks = Json::array();
    for (const auto& blk : g.twisted) {
        gammas.push_back(blk.gamma);
        blocks.push_back({{"gamma", blk.gamma},
                          {"dim", blk.dim},
                          {"p_minus", to_json(blk.p_minus)},
                          {"p_plus", to_json(blk.p_plus)}});
    }
    out["gamma"] = std::move(gammas);
    out["twisted"] = std::move(blocks);
    out["p_dd"] = to_json(g.p_dd);
    out["p_nd"] = to_json(g.p_nd);
    out["p_dn"] = to_json(g.p_dn);
    out["p_nn"] = to_json(g.p_nn);
    return out;
}

inline Json to_json(const EigenvalueRecord& r) {
    return {{"lambda", r.lambda},
            {"multiplicity", r.multiplicity},
            {"series_tag", r.series_tag},
            {"interval", Json::array({r.interval_lo, r.interval_hi})},
            {"cluster", r.cluster},
            {"gap", r.gap},
            {"sigma_min", r.sigma_min}};
}

inline Json to_json(const SpectralTriplet& t) {
    return {{"lambda", t.lambda},
            {"multiplicity", t.basis.cols()},
            {"P", to_json(t.p.matrix())},
            {"G", to_json(t.g_full())},
            {"g", to_json(t.g)},
            {"basis", to_json(t.basis)}};
}

inline Json to_json(const WeylSample& w) {
    return {{"lambda", to_json(w.lambda)}, {"m", to_json(w.m)}};
}

inline Json to_json(const VerificationReport& rep) {
    Json checks = Json::array();
    for (const auto& c : rep.checks)
        checks.push_back({{"name", c.name},
                          {"residual", c.residual},
                          {"threshold", c.threshold},
                          {"pass", c.pass},
                          {"note", c.note}});
    return {{"suite", rep.suite},
            {"wall_time_s", rep.wall_time_s},
            {"all_pass", rep.all_pass()},
            {"checks", std::move(checks)}};
}

inline Json to_json(const TrendResult& tr) {
    Json pts = Json::array();
    for (const auto& pt : tr.points) pts.push_back({{"n", pt.n}, {"normalized", pt.normalized}});
    return {{"quantity", to_string(tr.quantity)},
            {"points", std::move(pts)},
            {"median", tr.median},
            {"max", tr.max},
            {"pass", tr.pass}};
}

} // namespace vsl
