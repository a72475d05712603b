#include "CLI11.hpp"
#include "vsl/serialize.hpp"
#include "vsl/verify.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace vsl;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.14e", v);
    return buf;
}

std::string fmt(Complex z) { return "[" + fmt(z.real()) + ", " + fmt(z.imag()) + "]"; }

std::string matrix_lines(const ComplexMatrix& m, const std::string& indent) {
    std::string out;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        out += indent;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out += "  ";
            out += fmt(m(i, j));
        }
        out += "\n";
    }
    return out;
}

void emit(const std::string& out_path, const std::string& payload) {
    if (out_path.empty()) {
        std::cout << payload;
        return;
    }
    std::ofstream f(out_path);
    if (!f) throw ConfigError("cannot open output file: " + out_path);
    f << payload;
}

struct CommonArgs {
    std::string config;
    std::string format = "text";
    std::string out;
    std::string seed_hex;
    double rank_tol = -1.0;

    void attach(CLI::App* cmd, bool with_config = true) {
        if (with_config)
            cmd->add_option("--config", config, "problem definition JSON")->required();
        cmd->add_option("--format", format, "output format")
            ->check(CLI::IsMember({"json", "csv", "text"}));
        cmd->add_option("--out", out, "write output to this file instead of stdout");
        cmd->add_option("--seed", seed_hex, "probe seed as hex digits");
        cmd->add_option("--rank-tol", rank_tol, "kernel rank tolerance")
            ->check(CLI::PositiveNumber);
    }

    SpectrumOptions options() const {
        SpectrumOptions opt;
        if (rank_tol > 0.0) opt.rank_tol = rank_tol;
        return opt;
    }

    std::uint64_t seed() const {
        if (seed_hex.empty()) return 0x5EED;
        std::size_t used = 0;
        std::uint64_t v = 0;
        try {
            v = std::stoull(seed_hex, &used, 16);
        } catch (const std::exception&) {
            throw ConfigError("seed is not a hex integer: " + seed_hex);
        }
        if (used != seed_hex.size())
            throw ConfigError("seed is not a hex integer: " + seed_hex);
        return v;
    }
};

int cmd_decompose(const CommonArgs& args) {
    const ProblemDef p = load_problem(args.config);
    const BoundaryGeometry g = decompose(p.bc.t_minus, p.bc.t_plus);
    std::string payload;
    if (args.format == "json") {
        payload = to_json(g).dump(2) + "\n";
    } else if (args.format == "csv") {
        payload = "block,gamma,dim\n";
        for (std::size_t i = 0; i < g.twisted.size(); ++i)
            payload += std::to_string(i) + "," + fmt(g.twisted[i].gamma) + "," +
                       std::to_string(g.twisted[i].dim) + "\n";
    } else {
        std::ostringstream os;
        os << "boundary geometry  n=" << g.n << "\n"
           << "corner dimensions  dd=" << g.dim_dd << "  nd=" << g.dim_nd
           << "  dn=" << g.dim_dn << "  nn=" << g.dim_nn
           << "  twisted_pairs=" << g.dim_twisted_pairs << "\n";
        if (!g.twisted.empty()) {
            os << "block  gamma                   dim\n";
            for (std::size_t i = 0; i < g.twisted.size(); ++i)
                os << i << "      " << fmt(g.twisted[i].gamma) << "  " << g.twisted[i].dim
                   << "\n";
        }
        payload = os.str();
    }
    emit(args.out, payload);
    return 0;
}

int cmd_spectrum(const CommonArgs& args, double lambda_max) {
    const ProblemDef p = load_problem(args.config);
    const SpectrumOptions opt = args.options();
    std::vector<EigenvalueRecord> records;
    bool certified = true;
    double certified_below = lambda_max;
    // When clusters or contours defeat the full window, back off until a
    // shorter prefix resolves and report that prefix with the flag set.
    for (int attempt = 0;; ++attempt) {
        try {
            records = find_eigenvalues(p, certified_below, opt);
            break;
        } catch (const UnresolvedCluster&) {
        } catch (const ContourTooClose&) {
        } catch (const WindingUnstable&) {
        } catch (const StepFailure&) {
        }
        certified = false;
        if (attempt >= 6 || certified_below <= 1.0) break;
        certified_below *= 0.6;
    }
    std::string payload;
    if (args.format == "json") {
        Json rows = Json::array();
        for (const auto& r : records) rows.push_back(to_json(r));
        Json out = {{"lambda_max", lambda_max},
                    {"certified", certified},
                    {"eigenvalues", std::move(rows)}};
        if (!certified) out["certified_below"] = certified_below;
        payload = out.dump(2) + "\n";
    } else if (args.format == "csv") {
        payload = "lambda,multiplicity,series_tag,interval_lo,interval_hi\n";
        for (const auto& r : records)
            payload += fmt(r.lambda) + "," + std::to_string(r.multiplicity) + "," +
                       r.series_tag + "," + fmt(r.interval_lo) + "," + fmt(r.interval_hi) +
                       "\n";
    } else {
        std::ostringstream os;
        os << "lambda                  mult  series  interval\n";
        for (const auto& r : records)
            os << fmt(r.lambda) << "  " << r.multiplicity << "     "
               << (r.series_tag.empty() ? "-" : r.series_tag) << "  [" << fmt(r.interval_lo)
               << ", " << fmt(r.interval_hi) << "]\n";
        if (!certified)
            os << "uncertified above lambda=" << fmt(certified_below)
               << "; rows below that point only\n";
        payload = os.str();
    }
    emit(args.out, payload);
    if (!certified) std::cerr << "spectrum: range not fully certified\n";
    return certified ? 0 : 4;
}

int cmd_spectral_data(const CommonArgs& args, std::size_t count) {
    const ProblemDef p = load_problem(args.config);
    const SpectrumOptions opt = args.options();
    const std::vector<EigenvalueRecord> records = first_eigenvalues(p, count, opt);
    struct Row {
        EigenvalueRecord rec;
        SpectralTriplet triplet;
        double dual_residual;
    };
    std::vector<Row> rows;
    for (const auto& rec : records) {
        const SpectralTriplet ti = spectral_triplet(p, rec, opt);
        const SpectralTriplet td = triplet_via_derivative(p, rec, opt);
        const double res =
            spectral_norm(ti.g - td.g) / std::max(spectral_norm(ti.g), 1e-300);
        rows.push_back({rec, ti, res});
    }
    std::string payload;
    if (args.format == "json") {
        Json triplets = Json::array();
        for (const auto& row : rows) {
            Json t = to_json(row.triplet);
            t["series_tag"] = row.rec.series_tag;
            t["dual_residual"] = row.dual_residual;
            triplets.push_back(std::move(t));
        }
        payload = Json{{"count", count}, {"triplets", std::move(triplets)}}.dump(2) + "\n";
    } else if (args.format == "csv") {
        payload = "index,lambda,multiplicity,series_tag,dual_residual\n";
        for (std::size_t i = 0; i < rows.size(); ++i)
            payload += std::to_string(i) + "," + fmt(rows[i].rec.lambda) + "," +
                       std::to_string(rows[i].rec.multiplicity) + "," +
                       rows[i].rec.series_tag + "," + fmt(rows[i].dual_residual) + "\n";
    } else {
        std::ostringstream os;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const Row& row = rows[i];
            os << "[" << i << "] lambda=" << fmt(row.rec.lambda)
               << "  mult=" << row.rec.multiplicity
               << "  series=" << (row.rec.series_tag.empty() ? "-" : row.rec.series_tag)
               << "  dual_residual=" << fmt(row.dual_residual) << "\n";
            os << "  P:\n" << matrix_lines(row.triplet.p.matrix(), "    ");
            os << "  g (restricted):\n" << matrix_lines(row.triplet.g, "    ");
        }
        payload = os.str();
    }
    emit(args.out, payload);
    return 0;
}

int cmd_mfunction(const CommonArgs& args, const std::string& lambda_text) {
    const ProblemDef p = load_problem(args.config);
    const char* s = lambda_text.c_str();
    char* end = nullptr;
    const double re = std::strtod(s, &end);
    if (end == s) throw ConfigError("lambda is not a number: " + lambda_text);
    double im = 0.0;
    if (*end == ',') {
        const char* s2 = end + 1;
        im = std::strtod(s2, &end);
        if (end == s2) throw ConfigError("lambda has a malformed imaginary part");
    }
    while (*end == ' ') ++end;
    if (*end != '\0') throw ConfigError("trailing characters after lambda: " + lambda_text);
    const WeylSample sample = m_function(p, Complex(re, im), args.options());
    std::string payload;
    if (args.format == "json") {
        payload = to_json(sample).dump(2) + "\n";
    } else if (args.format == "csv") {
        payload = "row,col,re,im\n";
        for (std::size_t i = 0; i < sample.m.rows(); ++i)
            for (std::size_t j = 0; j < sample.m.cols(); ++j)
                payload += std::to_string(i) + "," + std::to_string(j) + "," +
                           fmt(sample.m(i, j).real()) + "," + fmt(sample.m(i, j).imag()) +
                           "\n";
    } else {
        payload = "lambda=" + fmt(sample.lambda) + "\nm:\n" + matrix_lines(sample.m, "  ");
    }
    emit(args.out, payload);
    return 0;
}

int cmd_verify(const CommonArgs& args, const std::string& suite) {
    const ProblemDef p = load_problem(args.config);
    const VerificationReport rep = run_suite(p, suite, args.seed(), args.options());
    std::string payload;
    if (args.format == "json") {
        payload = to_json(rep).dump(2) + "\n";
    } else if (args.format == "csv") {
        payload = "name,residual,threshold,pass,note\n";
        for (const auto& c : rep.checks)
            payload += c.name + "," + fmt(c.residual) + "," + fmt(c.threshold) + "," +
                       (c.pass ? "1" : "0") + "," + c.note + "\n";
    } else {
        std::ostringstream os;
        for (const auto& c : rep.checks) {
            os << (c.pass ? "PASS" : "FAIL") << "  " << c.name
               << "  residual=" << fmt(c.residual) << "  threshold=" << fmt(c.threshold);
            if (!c.note.empty()) os << "  (" << c.note << ")";
            os << "\n";
        }
        os << "suite=" << rep.suite << "  checks=" << rep.checks.size()
           << "  wall_time_s=" << fmt(rep.wall_time_s) << "  all_pass="
           << (rep.all_pass() ? "yes" : "no") << "\n";
        payload = os.str();
    }
    emit(args.out, payload);
    return rep.all_pass() ? 0 : 1;
}

int cmd_distinguish(const CommonArgs& args, const std::string& config_b, std::size_t count) {
    const ProblemDef pa = load_problem(args.config);
    const ProblemDef pb = load_problem(config_b);
    if (pa.n != pb.n) throw ConfigError("problems have different dimensions");
    if ((pa.bc.t_minus - pb.bc.t_minus).frobenius() > 1e-10 ||
        (pa.bc.t_plus - pb.bc.t_plus).frobenius() > 1e-10)
        throw ConfigError("problems have different boundary projections");
    const SpectrumOptions opt = args.options();
    const std::vector<EigenvalueRecord> ra = first_eigenvalues(pa, count, opt);
    const std::vector<EigenvalueRecord> rb = first_eigenvalues(pb, count, opt);
    const std::size_t shared = std::min({count, ra.size(), rb.size()});
    bool aligned = ra.size() >= count && rb.size() >= count;
    struct Part {
        double lambda_a, lambda_b, d_lambda, d_p, d_g;
    };
    std::vector<Part> parts;
    double dist = 0.0;
    for (std::size_t i = 0; i < shared; ++i) {
        if (ra[i].multiplicity != rb[i].multiplicity) aligned = false;
        const SpectralTriplet ta = spectral_triplet(pa, ra[i], opt);
        const SpectralTriplet tb = spectral_triplet(pb, rb[i], opt);
        Part part;
        part.lambda_a = ta.lambda;
        part.lambda_b = tb.lambda;
        part.d_lambda = std::abs(ta.lambda - tb.lambda);
        part.d_p = spectral_norm(ta.p.matrix() - tb.p.matrix());
        part.d_g = spectral_norm(ta.g_full() - tb.g_full());
        dist += part.d_lambda + part.d_p + part.d_g;
        parts.push_back(part);
    }
    std::string payload;
    if (args.format == "json") {
        Json breakdown = Json::array();
        for (std::size_t i = 0; i < parts.size(); ++i)
            breakdown.push_back({{"index", i},
                                 {"lambda_a", parts[i].lambda_a},
                                 {"lambda_b", parts[i].lambda_b},
                                 {"d_lambda", parts[i].d_lambda},
                                 {"d_p", parts[i].d_p},
                                 {"d_g", parts[i].d_g}});
        payload = Json{{"count", count},
                       {"distance", dist},
                       {"aligned", aligned},
                       {"per_alpha", std::move(breakdown)}}
                      .dump(2) +
                  "\n";
    } else if (args.format == "csv") {
        payload = "index,lambda_a,lambda_b,d_lambda,d_p,d_g\n";
        for (std::size_t i = 0; i < parts.size(); ++i)
            payload += std::to_string(i) + "," + fmt(parts[i].lambda_a) + "," +
                       fmt(parts[i].lambda_b) + "," + fmt(parts[i].d_lambda) + "," +
                       fmt(parts[i].d_p) + "," + fmt(parts[i].d_g) + "\n";
        payload += "total,,,,," + fmt(dist) + "\n";
    } else {
        std::ostringstream os;
        os << "fingerprint distance over first " << count
           << " triplets: " << fmt(dist) << "  aligned=" << (aligned ? "yes" : "no") << "\n";
        os << "alpha  d_lambda                 d_P                      d_g\n";
        for (std::size_t i = 0; i < parts.size(); ++i)
            os << i << "      " << fmt(parts[i].d_lambda) << "  " << fmt(parts[i].d_p)
               << "  " << fmt(parts[i].d_g) << "\n";
        payload = os.str();
    }
    emit(args.out, payload);
    return 0;
}

void check_thread_env() {
    const char* tv = std::getenv("VSL_THREADS");
    if (!tv) return;
    char* end = nullptr;
    const long v = std::strtol(tv, &end, 10);
    if (end == tv || *end != '\0' || v <= 0)
        throw ConfigError(std::string("VSL_THREADS must be a positive integer, got: ") + tv);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral toolkit for vector-valued Sturm-Liouville problems"};
    app.require_subcommand(1);

    CommonArgs dec_args;
    CLI::App* dec = app.add_subcommand("decompose", "boundary-pair geometry of a problem");
    dec_args.attach(dec);

    CommonArgs spec_args;
    double lambda_max = 0.0;
    CLI::App* spec = app.add_subcommand("spectrum", "eigenvalues up to a threshold");
    spec_args.attach(spec);
    spec->add_option("--lambda-max", lambda_max, "upper edge of the search window")
        ->required()
        ->check(CLI::PositiveNumber);

    CommonArgs data_args;
    std::size_t count = 0;
    CLI::App* data = app.add_subcommand("spectral-data", "first M spectral triplets");
    data_args.attach(data);
    data->add_option("--count", count, "number of triplets")->required()->check(CLI::PositiveNumber);

    CommonArgs mf_args;
    std::string lambda_text;
    CLI::App* mf = app.add_subcommand("mfunction", "Weyl function at one point");
    mf_args.attach(mf);
    mf->add_option("--lambda", lambda_text, "evaluation point as RE or RE,IM")->required();

    CommonArgs ver_args;
    std::string suite = "all";
    CLI::App* ver = app.add_subcommand("verify", "identity and asymptotics checks");
    ver_args.attach(ver);
    ver->add_option("--suite", suite, "suite name or all");

    CommonArgs dis_args;
    std::string config_b;
    std::size_t dis_count = 0;
    CLI::App* dis = app.add_subcommand("distinguish", "fingerprint distance of two problems");
    dis_args.attach(dis);
    dis->add_option("--config-b", config_b, "second problem definition JSON")->required();
    dis->add_option("--count", dis_count, "number of triplets")->required()->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        check_thread_env();
        if (dec->parsed()) return cmd_decompose(dec_args);
        if (spec->parsed()) return cmd_spectrum(spec_args, lambda_max);
        if (data->parsed()) return cmd_spectral_data(data_args, count);
        if (mf->parsed()) return cmd_mfunction(mf_args, lambda_text);
        if (ver->parsed()) return cmd_verify(ver_args, suite);
        if (dis->parsed()) return cmd_distinguish(dis_args, config_b, dis_count);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ClusterAmbiguity& e) {
        std::cerr << "geometry ambiguity: " << e.what() << "\n";
        return 3;
    } catch (const UnresolvedCluster& e) {
        std::cerr << "uncertified range: " << e.what() << "\n";
        return 4;
    } catch (const ContourTooClose& e) {
        std::cerr << "uncertified range: " << e.what() << "\n";
        return 4;
    } catch (const WindingUnstable& e) {
        std::cerr << "uncertified range: " << e.what() << "\n";
        return 4;
    } catch (const StepFailure& e) {
        std::cerr << "uncertified range: " << e.what() << "\n";
        return 4;
    } catch (const RankMismatch& e) {
        std::cerr << "spectral-data inconsistency: " << e.what() << "\n";
        return 5;
    } catch (const DegenerateZ& e) {
        std::cerr << "spectral-data inconsistency: " << e.what() << "\n";
        return 5;
    } catch (const NearPole& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
