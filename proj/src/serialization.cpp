#include "quantshape/serialization.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace quantshape {

namespace {

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

template <class V>
json vector_json(const V& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

double number(const json& j, const char* what) {
    if (!j.is_number()) throw std::invalid_argument(std::string("expected a number for ") + what);
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw std::invalid_argument(std::string("non-finite value for ") + what);
    return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

// Reads a CSV, checks the header and returns the data rows as split fields.
std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path, const std::string& header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != header) {
        throw std::runtime_error(path.string() + ": expected header '" + header + "'");
    }
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream        ss(line);
        std::string              f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        rows.push_back(std::move(fields));
    }
    return rows;
}

double parse_double(const std::string& s) {
    if (s == "inf") return kInf;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw std::runtime_error("bad number in CSV: '" + s + "'");
    return v;
}

void expect_fields(const std::vector<std::string>& row, std::size_t n) {
    if (row.size() != n) throw std::runtime_error("CSV row has " + std::to_string(row.size()) + " fields, expected " +
                                                  std::to_string(n));
}

}  // namespace

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

json to_json(const StateSpace& s) {
    return json{{"A", matrix_json(s.A())}, {"B", vector_json(s.B())}, {"C", vector_json(s.C())}, {"D", s.D()}};
}

StateSpace statespace_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("state-space model must be an object with A, B, C, D");
    for (const auto& [key, _] : j.items()) {
        if (key != "A" && key != "B" && key != "C" && key != "D") {
            throw std::invalid_argument("unknown state-space key '" + key + "'");
        }
    }
    if (!j.contains("A") || !j.contains("B") || !j.contains("C") || !j.contains("D")) {
        throw std::invalid_argument("state-space model needs A, B, C and D");
    }
    const json& ja = j.at("A");
    const json& jb = j.at("B");
    const json& jc = j.at("C");
    if (!ja.is_array() || !jb.is_array() || !jc.is_array()) throw std::invalid_argument("A, B, C must be arrays");
    const auto n = static_cast<Eigen::Index>(ja.size());
    Matrix     a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const json& row = ja.at(static_cast<std::size_t>(i));
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
            throw std::invalid_argument("A must be square");
        }
        for (Eigen::Index k = 0; k < n; ++k) a(i, k) = number(row.at(static_cast<std::size_t>(k)), "A");
    }
    if (static_cast<Eigen::Index>(jb.size()) != n || static_cast<Eigen::Index>(jc.size()) != n) {
        throw std::invalid_argument("B and C must have one entry per state");
    }
    Vector    b(n);
    RowVector c(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        b(i) = number(jb.at(static_cast<std::size_t>(i)), "B");
        c(i) = number(jc.at(static_cast<std::size_t>(i)), "C");
    }
    return StateSpace(a, b, c, number(j.at("D"), "D"));
}

json to_json(const SolveStatus& s) {
    return json{{"outcome", to_string(s.outcome)},
                {"objective", s.objective},
                {"residual", s.residual},
                {"iterations", s.iterations}};
}

json to_json(const DesignReport& r) {
    return json{{"taps", r.filter.taps()},
                {"hr_norm", r.hr_norm},
                {"r_minus_one_norm", r.r1_norm},
                {"objective", r.objective},
                {"interval", r.interval},
                {"min_bits", r.min_bits},
                {"truncation", r.truncation},
                {"lp", to_json(r.lp_status)}};
}

json to_json(const LmiVariables& v) {
    return json{{"P_f", matrix_json(v.P_f)}, {"P_g", matrix_json(v.P_g)}, {"W_f", vector_json(v.W_f)},
                {"W_g", vector_json(v.W_g)}, {"L_mat", matrix_json(v.L_mat)}, {"mu_eps", v.mu_eps},
                {"mu_eta", v.mu_eta}};
}

json to_json(const IirDesignReport& r) {
    json j{{"realization", to_json(r.realization)},
           {"alpha_star", r.alpha_star},
           {"mu_eps", r.mu_eps},
           {"mu_eta", r.mu_eta},
           {"mu_eta_cap", r.mu_eta_cap ? json(*r.mu_eta_cap) : json(nullptr)},
           {"true_hr_norm", r.true_hr_norm},
           {"true_r_minus_one_norm", r.true_r1_norm},
           {"objective", r.objective},
           {"bound_objective", r.bound_objective},
           {"certificate",
            {{"invariance", r.certificate.size() > 0 ? r.certificate[0] : 0.0},
             {"eps", r.certificate.size() > 1 ? r.certificate[1] : 0.0},
             {"eta", r.certificate.size() > 2 ? r.certificate[2] : 0.0}}},
           {"variables", to_json(r.vars)},
           {"sdp", to_json(r.sdp_status)}};
    return j;
}

json to_json(const TradeoffCurve& c) {
    json pts = json::array();
    for (const auto& p : c.points) {
        pts.push_back(json{{"cap", p.cap},
                           {"ok", p.ok},
                           {"hr_norm", p.hr_norm},
                           {"r_minus_one_norm", p.r1_norm},
                           {"objective", p.objective},
                           {"taps", p.filter.taps()}});
    }
    json bits = json::array();
    for (const auto& b : c.per_bit) {
        bits.push_back(json{{"bits", b.bits},
                            {"eps_bound", std::isfinite(b.eps_bound) ? json(b.eps_bound) : json(nullptr)},
                            {"point", b.point}});
    }
    return json{{"points", pts}, {"per_bit", bits}};
}

void write_taps_csv(const std::filesystem::path& path, const std::vector<double>& taps) {
    auto out = open_out(path);
    out << "k,r\n";
    for (std::size_t k = 0; k < taps.size(); ++k) out << k + 1 << ',' << format_double(taps[k]) << '\n';
}

std::vector<double> read_taps_csv(const std::filesystem::path& path) {
    std::vector<double> taps;
    for (const auto& row : read_rows(path, "k,r")) {
        expect_fields(row, 2);
        taps.push_back(parse_double(row[1]));
    }
    return taps;
}

void write_trace_csv(const std::filesystem::path& path, const SimTrace& trace) {
    auto out = open_out(path);
    out << "t,y,xi,v,w,eta,eps,overload\n";
    for (const auto& r : trace.records) {
        out << format_double(r.t) << ',' << format_double(r.y) << ',' << format_double(r.xi) << ','
            << format_double(r.v) << ',' << format_double(r.w) << ',' << format_double(r.eta) << ','
            << format_double(r.eps) << ',' << (r.overload ? 1 : 0) << '\n';
    }
}

SimTrace read_trace_csv(const std::filesystem::path& path) {
    SimTrace trace;
    for (const auto& row : read_rows(path, "t,y,xi,v,w,eta,eps,overload")) {
        expect_fields(row, 8);
        SimRecord r;
        r.t = parse_double(row[0]);
        r.y = parse_double(row[1]);
        r.xi = parse_double(row[2]);
        r.v = parse_double(row[3]);
        r.w = parse_double(row[4]);
        r.eta = parse_double(row[5]);
        r.eps = parse_double(row[6]);
        r.overload = row[7] == "1";
        if (r.overload) ++trace.overload_count;
        trace.max_abs_eps = std::max(trace.max_abs_eps, std::abs(r.eps));
        trace.max_abs_xi = std::max(trace.max_abs_xi, std::abs(r.xi));
        trace.records.push_back(r);
    }
    return trace;
}

void write_curve_csv(const std::filesystem::path& path, const std::vector<TradeoffPoint>& points) {
    auto out = open_out(path);
    out << "cap,hr_norm,r_norm,objective\n";
    for (const auto& p : points) {
        if (!p.ok) continue;
        out << format_double(p.cap) << ',' << format_double(p.hr_norm) << ',' << format_double(p.r1_norm) << ','
            << format_double(p.objective) << '\n';
    }
}

std::vector<TradeoffPoint> read_curve_csv(const std::filesystem::path& path) {
    std::vector<TradeoffPoint> pts;
    for (const auto& row : read_rows(path, "cap,hr_norm,r_norm,objective")) {
        expect_fields(row, 4);
        TradeoffPoint p;
        p.cap = parse_double(row[0]);
        p.hr_norm = parse_double(row[1]);
        p.r1_norm = parse_double(row[2]);
        p.objective = parse_double(row[3]);
        p.ok = true;
        pts.push_back(std::move(p));
    }
    return pts;
}

void write_bits_csv(const std::filesystem::path& path, const std::vector<BitBound>& bounds) {
    auto out = open_out(path);
    out << "bits,eps_bound\n";
    for (const auto& b : bounds) out << b.bits << ',' << format_double(b.eps_bound) << '\n';
}

std::vector<BitBound> read_bits_csv(const std::filesystem::path& path) {
    std::vector<BitBound> out;
    for (const auto& row : read_rows(path, "bits,eps_bound")) {
        expect_fields(row, 2);
        BitBound b;
        b.bits = std::stoi(row[0]);
        b.eps_bound = parse_double(row[1]);
        out.push_back(b);
    }
    return out;
}

void write_json(const std::filesystem::path& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
}

void dump_problem(const LpProblem& problem, const std::filesystem::path& path) {
    json rows = json::array();
    for (const auto& c : problem.constraints) {
        const char* rel = c.relation == Relation::LessEqual ? "<=" : c.relation == Relation::Equal ? "==" : ">=";
        rows.push_back(json{{"coeffs", vector_json(c.coeffs)}, {"relation", rel}, {"rhs", c.rhs}});
    }
    auto bounds = [](const Vector& v) {
        json out = json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            out.push_back(std::isfinite(v(i)) ? json(v(i)) : json(v(i) > 0 ? "inf" : "-inf"));
        }
        return out;
    };
    write_json(path, json{{"kind", "lp"},
                          {"objective", vector_json(problem.objective)},
                          {"lower", bounds(problem.lower)},
                          {"upper", bounds(problem.upper)},
                          {"constraints", rows}});
}

void dump_problem(const SdpProblem& problem, const std::filesystem::path& path) {
    json blocks = json::array();
    for (const auto& b : problem.blocks) {
        json coeffs = json::array();
        for (const auto& m : b.coeffs) coeffs.push_back(matrix_json(m));
        blocks.push_back(json{{"constant", matrix_json(b.constant)}, {"coeffs", coeffs}});
    }
    write_json(path, json{{"kind", "sdp"}, {"objective", vector_json(problem.objective)}, {"blocks", blocks}});
}

}  // namespace quantshape
