#include "fracback/scenario.hpp"

#include "fracback/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

namespace fracback {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ScenarioError("scenario key '" + key + "': not a number: " + v);
    }
}

long long to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ScenarioError("scenario key '" + key + "': not an integer: " + v);
    }
}

template <class T, class F>
std::vector<T> parse_list(const std::string& key, const std::string& v, F conv) {
    std::vector<T> out;
    for (const auto& item : split_list(v)) out.push_back(static_cast<T>(conv(key, item)));
    if (out.empty()) throw ScenarioError("scenario key '" + key + "': empty list");
    return out;
}

/// Seeds accept single values, comma lists and inclusive ranges a-b.
std::vector<std::uint64_t> parse_seeds(const std::string& key, const std::string& v) {
    std::vector<std::uint64_t> out;
    for (const auto& item : split_list(v)) {
        const auto dash = item.find('-', 1);
        if (dash == std::string::npos) {
            out.push_back(static_cast<std::uint64_t>(to_int(key, item)));
            continue;
        }
        const auto a = to_int(key, trim(item.substr(0, dash)));
        const auto b = to_int(key, trim(item.substr(dash + 1)));
        if (a < 0 || b < a) throw ScenarioError("scenario key '" + key + "': bad range " + item);
        for (auto s = a; s <= b; ++s) out.push_back(static_cast<std::uint64_t>(s));
    }
    return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    return os.str();
}

std::string num(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

Method parse_method(const std::string& v) {
    if (v == "truncation") return Method::Truncation;
    if (v == "qbv" || v == "quasi_boundary") return Method::QuasiBoundary;
    if (v == "filter" || v == "tikhonov") return Method::Filter;
    throw ScenarioError("unknown method: " + v);
}

double reaction_value(const std::string& kind, double u) {
    if (kind == "linear") return u;
    if (kind == "sine") return std::sin(u);
    return 0.0;
}

}  // namespace

std::string to_string(Method m) {
    switch (m) {
        case Method::Truncation: return "truncation";
        case Method::QuasiBoundary: return "qbv";
        case Method::Filter: return "filter";
    }
    return "unknown";
}

void Scenario::validate() const {
    if (dim < 1 || dim > kMaxDim) throw ScenarioError("dim must be in 1.." + std::to_string(kMaxDim));
    if (!(alpha > 0.0 && alpha < 1.0)) throw ScenarioError("alpha must lie in (0,1)");
    if (!(T > 0.0)) throw ScenarioError("T must be positive");
    if (exact != "tsin") throw ScenarioError("unknown exact solution: " + exact);
    if (reaction != "none" && reaction != "linear" && reaction != "sine") {
        throw ScenarioError("unknown reaction: " + reaction);
    }
    if (lipschitz_K < 0.0) throw ScenarioError("K must be nonnegative");
    if (reaction == "none" && lipschitz_K != 0.0) throw ScenarioError("K > 0 needs a reaction");
    if (static_cast<int>(n.size()) != dim) throw ScenarioError("n needs one entry per axis");
    for (int v : n) {
        if (v < 2) throw ScenarioError("grid sizes must be at least 2");
    }
    if (!(eps >= 0.0)) throw ScenarioError("eps must be nonnegative");
    if (!N.empty() && static_cast<int>(N.size()) != dim) throw ScenarioError("N needs one entry per axis");
    if (!mu.empty() && static_cast<int>(mu.size()) != dim) throw ScenarioError("mu needs one entry per axis");
    if (gamma < 0.0 || theta < 0.0) throw ScenarioError("gamma and theta must be nonnegative");
    if (nt < 3 || nt % 2 == 0) throw ScenarioError("nt must be odd and at least 3");
    if (times.empty()) throw ScenarioError("at least one reported time is needed");
    for (double t : times) {
        if (!(t >= 0.0 && t <= T)) throw ScenarioError("reported times must lie in [0, T]");
    }
    if (replications < 1) throw ScenarioError("replications must be at least 1");
    if (seeds.empty() && seed_count < 1) throw ScenarioError("seed_count must be at least 1");
    if (tol <= 0.0 || max_iter < 1) throw ScenarioError("bad solver tolerance or iteration cap");
}

std::vector<std::uint64_t> Scenario::seed_list() const {
    if (!seeds.empty()) return seeds;
    std::vector<std::uint64_t> out;
    for (int i = 0; i < seed_count; ++i) out.push_back(seed + static_cast<std::uint64_t>(i));
    return out;
}

std::vector<int> Scenario::cutoffs() const { return N.empty() ? log_schedule(n) : N; }

std::vector<double> Scenario::mu_or_default() const {
    return mu.empty() ? std::vector<double>(static_cast<std::size_t>(dim), 0.75) : mu;
}

double Scenario::mu_circ_or_default() const {
    if (mu_circ > 0.0) return mu_circ;
    const auto m = mu_or_default();
    return dim * *std::max_element(m.begin(), m.end());
}

double Scenario::gamma_or_default() const {
    if (gamma > 0.0) return gamma;
    double p = 1.0;
    for (int v : n) p *= v;
    return std::max<double>(dim, std::pow(p, 1.0 / (mu_circ_or_default() + dim)));
}

double Scenario::theta_or_default() const {
    if (theta > 0.0) return theta;
    return std::pow(gamma_or_default(), -mu_circ_or_default() / 3.0);
}

std::map<std::string, std::string> Scenario::to_map() const {
    std::map<std::string, std::string> m;
    m["name"] = name;
    m["dim"] = std::to_string(dim);
    m["alpha"] = num(alpha);
    m["T"] = num(T);
    m["exact"] = exact;
    m["reaction"] = reaction;
    m["K"] = num(lipschitz_K);
    m["n"] = join(n);
    m["eps"] = num(eps);
    m["method"] = to_string(method);
    if (!N.empty()) m["N"] = join(N);
    if (gamma > 0.0) m["gamma"] = num(gamma);
    if (theta > 0.0) m["theta"] = num(theta);
    if (!mu.empty()) m["mu"] = join(mu);
    if (mu_circ > 0.0) m["mu_circ"] = num(mu_circ);
    m["sigma"] = num(sigma);
    m["smoothness"] = num(smoothness);
    m["nt"] = std::to_string(nt);
    m["times"] = join(times);
    if (seeds.empty()) {
        m["seed"] = std::to_string(seed);
        m["seed_count"] = std::to_string(seed_count);
    } else {
        m["seeds"] = join(seeds);
    }
    m["replications"] = std::to_string(replications);
    m["quad_nodes"] = std::to_string(quad_nodes);
    m["tol"] = num(tol);
    m["max_iter"] = std::to_string(max_iter);
    return m;
}

Scenario parse_scenario(std::istream& is) {
    Scenario s;
    std::string line;
    int lineno = 0;
    bool n_broadcast = false;
    bool dim_seen = false;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ScenarioError("scenario line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string v = trim(line.substr(eq + 1));
        if (v.empty()) throw ScenarioError("scenario key '" + key + "' has no value");

        if (key == "name") s.name = v;
        else if (key == "dim") { s.dim = static_cast<int>(to_int(key, v)); dim_seen = true; }
        else if (key == "alpha") s.alpha = to_double(key, v);
        else if (key == "T") s.T = to_double(key, v);
        else if (key == "exact") s.exact = v;
        else if (key == "reaction") s.reaction = v;
        else if (key == "K") s.lipschitz_K = to_double(key, v);
        else if (key == "n") {
            s.n = parse_list<int>(key, v, to_int);
            n_broadcast = s.n.size() == 1;
        }
        else if (key == "eps") s.eps = to_double(key, v);
        else if (key == "method") s.method = parse_method(v);
        else if (key == "N") s.N = parse_list<int>(key, v, to_int);
        else if (key == "gamma") s.gamma = to_double(key, v);
        else if (key == "theta") s.theta = to_double(key, v);
        else if (key == "mu") s.mu = parse_list<double>(key, v, to_double);
        else if (key == "mu_circ") s.mu_circ = to_double(key, v);
        else if (key == "sigma") s.sigma = to_double(key, v);
        else if (key == "smoothness") s.smoothness = to_double(key, v);
        else if (key == "nt") s.nt = static_cast<int>(to_int(key, v));
        else if (key == "times") s.times = parse_list<double>(key, v, to_double);
        else if (key == "seed") s.seed = static_cast<std::uint64_t>(to_int(key, v));
        else if (key == "seed_count") s.seed_count = static_cast<int>(to_int(key, v));
        else if (key == "seeds") s.seeds = parse_seeds(key, v);
        else if (key == "replications") s.replications = static_cast<int>(to_int(key, v));
        else if (key == "quad_nodes") s.quad_nodes = static_cast<int>(to_int(key, v));
        else if (key == "tol") s.tol = to_double(key, v);
        else if (key == "max_iter") s.max_iter = static_cast<int>(to_int(key, v));
        else throw ScenarioError("unknown scenario key: " + key);
    }
    if (!dim_seen) s.dim = static_cast<int>(s.n.size());
    if (n_broadcast && s.dim > 1) s.n.assign(static_cast<std::size_t>(s.dim), s.n[0]);
    if (!s.N.empty() && s.N.size() == 1 && s.dim > 1) s.N.assign(static_cast<std::size_t>(s.dim), s.N[0]);
    if (!s.mu.empty() && s.mu.size() == 1 && s.dim > 1) s.mu.assign(static_cast<std::size_t>(s.dim), s.mu[0]);
    s.validate();
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        if (is_builtin(path)) return builtin_scenario(path);
        throw IoError("cannot open scenario file: " + path);
    }
    return parse_scenario(in);
}

void write_scenario(std::ostream& os, const Scenario& s) {
    for (const auto& [k, v] : s.to_map()) os << k << " = " << v << '\n';
}

bool is_builtin(const std::string& name) { return name == "case1" || name == "case2"; }

Scenario builtin_scenario(const std::string& name) {
    Scenario s;
    if (name == "case1") {
        s.name = "case1";
        s.dim = 1;
        s.alpha = 0.3;
        s.n = {50};
        s.eps = 0.01;
    } else if (name == "case2") {
        s.name = "case2";
        s.dim = 2;
        s.alpha = 0.5;
        s.n = {50, 50};
        s.eps = 0.015;
    } else {
        throw ScenarioError("unknown built-in scenario: " + name);
    }
    s.validate();
    return s;
}

ManufacturedProblem::ManufacturedProblem(const Scenario& s)
    : dim_(s.dim), alpha_(s.alpha), K_(s.lipschitz_K), reaction_(s.reaction),
      base_(make_rectangle(std::vector<int>(static_cast<std::size_t>(s.dim), 1))) {}

double ManufacturedProblem::exact(double t, std::span<const double> x) const {
    double p = t;
    for (int i = 0; i < dim_; ++i) p *= std::sin(x[static_cast<std::size_t>(i)]);
    return p;
}

SpectralField ManufacturedProblem::exact_field(double t) const {
    SpectralField f(base_);
    f[0] = t * std::pow(std::numbers::pi / 2.0, dim_ / 2.0);
    return f;
}

double ManufacturedProblem::norm(double t, double s) const {
    return std::abs(t) * std::pow(std::numbers::pi / 2.0, dim_ / 2.0) * std::pow(static_cast<double>(dim_), s / 2.0);
}

SourceTerm ManufacturedProblem::source() const {
    SourceTerm st;
    const int d = dim_;
    const double a = alpha_;
    const double K = K_;
    const std::string kind = reaction_;
    const double g = 1.0 / std::tgamma(1.0 + a);
    st.f = [d, a, K, kind, g](double t, std::span<const double> x, double u) {
        double s = 1.0;
        for (int i = 0; i < d; ++i) s *= std::sin(x[static_cast<std::size_t>(i)]);
        double f = s * (1.0 + d * std::pow(t, a) * g);
        if (K != 0.0) f += K * (reaction_value(kind, u) - reaction_value(kind, t * s));
        return f;
    };
    st.depends_on_u = K != 0.0;
    return st;
}

}  // namespace fracback
