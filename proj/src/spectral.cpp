#include "fracback/spectral.hpp"

#include "fracback/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace fracback {

namespace {

const double kNorm1d = std::sqrt(2.0 / std::numbers::pi);

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

}  // namespace

ModeIndex::ModeIndex(std::initializer_list<int> components)
    : ModeIndex(std::span<const int>(components.begin(), components.size())) {}

ModeIndex::ModeIndex(std::span<const int> components) {
    if (components.empty() || components.size() > static_cast<std::size_t>(kMaxDim)) {
        throw ShapeError("mode index dimension must be between 1 and 4");
    }
    dim_ = static_cast<int>(components.size());
    for (std::size_t i = 0; i < components.size(); ++i) {
        if (components[i] < 1 || components[i] > 65535) throw ShapeError("mode index components must be in [1, 65535]");
        c_[i] = components[i];
    }
}

double ModeIndex::eigenvalue() const {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) s += static_cast<double>(c_[i]) * c_[i];
    return s;
}

std::uint64_t ModeIndex::key() const {
    std::uint64_t k = 0;
    for (int i = 0; i < dim_; ++i) k = (k << 16) | static_cast<std::uint64_t>(c_[i]);
    return k;
}

std::string ModeIndex::to_string() const {
    std::string s = "(";
    for (int i = 0; i < dim_; ++i) {
        if (i) s += ",";
        s += std::to_string(c_[i]);
    }
    return s + ")";
}

double eigenfunction(const ModeIndex& j, std::span<const double> x) {
    if (static_cast<int>(x.size()) != j.dim()) throw ShapeError("point dimension does not match mode");
    double v = 1.0;
    for (int i = 0; i < j.dim(); ++i) v *= kNorm1d * std::sin(j[i] * x[i]);
    return v;
}

ModeSet::ModeSet(int dim, Shape shape, std::vector<ModeIndex> modes)
    : dim_(dim), shape_(shape), modes_(std::move(modes)) {
    index_.reserve(modes_.size());
    for (std::size_t i = 0; i < modes_.size(); ++i) {
        if (modes_[i].dim() != dim_) throw ShapeError("mode dimension differs from set dimension");
        if (!index_.emplace(modes_[i].key(), i).second) throw ShapeError("duplicate mode " + modes_[i].to_string());
    }
}

ModeSet ModeSet::rectangle(std::vector<int> N) {
    const int d = static_cast<int>(N.size());
    if (d < 1 || d > kMaxDim) throw ShapeError("rectangle dimension must be between 1 and 4");
    for (int n : N) {
        if (n < 1) throw ShapeError("rectangle extents must be positive");
    }
    std::vector<ModeIndex> modes;
    std::vector<int> j(N.size(), 1);
    while (true) {
        modes.emplace_back(std::span<const int>(j));
        int axis = d - 1;
        while (axis >= 0 && j[axis] == N[axis]) {
            j[axis] = 1;
            --axis;
        }
        if (axis < 0) break;
        ++j[axis];
    }
    return ModeSet(d, Shape::Rectangle, std::move(modes));
}

ModeSet ModeSet::ball(int dim, double gamma) {
    if (dim < 1 || dim > kMaxDim) throw ShapeError("ball dimension must be between 1 and 4");
    std::vector<ModeIndex> modes;
    if (gamma >= dim) {
        const int jmax = static_cast<int>(std::floor(std::sqrt(gamma - (dim - 1))));
        std::vector<int> j(static_cast<std::size_t>(dim), 1);
        while (true) {
            double lam = 0.0;
            for (int c : j) lam += static_cast<double>(c) * c;
            if (lam <= gamma) modes.emplace_back(std::span<const int>(j));
            int axis = dim - 1;
            while (axis >= 0 && j[axis] == jmax) {
                j[axis] = 1;
                --axis;
            }
            if (axis < 0) break;
            ++j[axis];
        }
    }
    return ModeSet(dim, Shape::Ball, std::move(modes));
}

ModeSet ModeSet::from_list(int dim, std::vector<ModeIndex> modes) {
    if (dim < 1 || dim > kMaxDim) throw ShapeError("mode set dimension must be between 1 and 4");
    return ModeSet(dim, Shape::Explicit, std::move(modes));
}

std::optional<std::size_t> ModeSet::find(const ModeIndex& j) const {
    if (j.dim() != dim_) return std::nullopt;
    auto it = index_.find(j.key());
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::vector<int> ModeSet::max_per_axis() const {
    std::vector<int> m(static_cast<std::size_t>(dim_), 0);
    for (const auto& j : modes_) {
        for (int i = 0; i < dim_; ++i) m[i] = std::max(m[i], j[i]);
    }
    return m;
}

int ModeSet::max_frequency() const {
    const auto m = max_per_axis();
    return m.empty() ? 0 : *std::max_element(m.begin(), m.end());
}

double ModeSet::max_eigenvalue() const {
    double m = 0.0;
    for (const auto& j : modes_) m = std::max(m, j.eigenvalue());
    return m;
}

ModeSetPtr make_rectangle(std::vector<int> N) { return std::make_shared<const ModeSet>(ModeSet::rectangle(std::move(N))); }

ModeSetPtr make_ball(int dim, double gamma) { return std::make_shared<const ModeSet>(ModeSet::ball(dim, gamma)); }

SpectralField::SpectralField(ModeSetPtr modes) : modes_(std::move(modes)) {
    if (!modes_) throw ShapeError("spectral field needs a mode set");
    coeffs_.assign(modes_->size(), 0.0);
}

SpectralField::SpectralField(ModeSetPtr modes, std::vector<double> coeffs)
    : modes_(std::move(modes)), coeffs_(std::move(coeffs)) {
    if (!modes_) throw ShapeError("spectral field needs a mode set");
    if (coeffs_.size() != modes_->size()) throw ShapeError("coefficient count differs from mode count");
}

double SpectralField::coeff(const ModeIndex& j) const {
    auto i = modes_->find(j);
    return i ? coeffs_[*i] : 0.0;
}

double SpectralField::l2_norm() const { return sobolev_norm(0.0); }

double SpectralField::sobolev_norm(double sigma) const {
    double s = 0.0;
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
        const double w = sigma == 0.0 ? 1.0 : std::pow((*modes_)[i].eigenvalue(), sigma);
        s += w * coeffs_[i] * coeffs_[i];
    }
    return std::sqrt(s);
}

double SpectralField::evaluate(std::span<const double> x) const {
    double v = 0.0;
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
        if (coeffs_[i] != 0.0) v += coeffs_[i] * eigenfunction((*modes_)[i], x);
    }
    return v;
}

SpectralField SpectralField::restricted_to(ModeSetPtr target) const {
    SpectralField out(std::move(target));
    for (std::size_t i = 0; i < out.size(); ++i) out.coeffs_[i] = coeff(out.modes()[i]);
    return out;
}

void SpectralField::check_same(const SpectralField& other) const {
    if (modes_ == other.modes_) return;
    if (!modes_ || !other.modes_ || modes_->modes() != other.modes_->modes()) {
        throw ShapeError("spectral fields live on different mode sets");
    }
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
    check_same(other);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
    return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
    check_same(other);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
    return *this;
}

SpectralField& SpectralField::operator*=(double s) {
    for (double& c : coeffs_) c *= s;
    return *this;
}

SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }

double distance(const SpectralField& a, const SpectralField& b, double sigma) {
    if (a.dim() != b.dim()) throw ShapeError("fields of different dimension");
    double s = 0.0;
    auto weight = [sigma](const ModeIndex& j) { return sigma == 0.0 ? 1.0 : std::pow(j.eigenvalue(), sigma); };
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& j = a.modes()[i];
        const double d = a[i] - b.coeff(j);
        s += weight(j) * d * d;
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
        const auto& j = b.modes()[i];
        if (!a.modes().contains(j)) s += weight(j) * b[i] * b[i];
    }
    return std::sqrt(s);
}

void write_csv(std::ostream& os, const SpectralField& f) {
    const int d = f.dim();
    for (int i = 0; i < d; ++i) os << "j_" << (i + 1) << ",";
    os << "coeff\n";
    os << std::setprecision(17);
    for (std::size_t m = 0; m < f.size(); ++m) {
        for (int i = 0; i < d; ++i) os << f.modes()[m][i] << ",";
        os << f[m] << "\n";
    }
}

SpectralField read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw IoError("empty spectral field file");
    const auto header = split(line, ',');
    const int d = static_cast<int>(header.size()) - 1;
    if (d < 1 || d > kMaxDim || header.back() != "coeff") throw IoError("malformed spectral field header");
    std::vector<ModeIndex> modes;
    std::vector<double> coeffs;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto cells = split(line, ',');
        if (static_cast<int>(cells.size()) != d + 1) throw IoError("malformed spectral field row: " + line);
        std::vector<int> j(static_cast<std::size_t>(d));
        try {
            for (int i = 0; i < d; ++i) j[i] = std::stoi(cells[i]);
            coeffs.push_back(std::stod(cells[d]));
        } catch (const std::exception&) {
            throw IoError("unparsable spectral field row: " + line);
        }
        modes.emplace_back(std::span<const int>(j));
    }
    auto set = std::make_shared<const ModeSet>(ModeSet::from_list(d, std::move(modes)));
    return SpectralField(set, std::move(coeffs));
}

QuadratureRule QuadratureRule::simpson(int dim, int nodes_per_axis) {
    if (dim < 1 || dim > kMaxDim) throw ShapeError("quadrature dimension must be between 1 and 4");
    if (nodes_per_axis < 3 || nodes_per_axis % 2 == 0) {
        throw DomainError("composite Simpson needs an odd node count of at least 3");
    }
    QuadratureRule r;
    r.dim_ = dim;
    const int n = nodes_per_axis;
    const double h = std::numbers::pi / (n - 1);
    r.nodes_.resize(static_cast<std::size_t>(n));
    r.weights_.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        r.nodes_[k] = k * h;
        const double c = (k == 0 || k == n - 1) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        r.weights_[k] = c * h / 3.0;
    }
    r.nodes_.back() = std::numbers::pi;
    return r;
}

int QuadratureRule::default_nodes(int dim) {
    if (dim <= 2) return 401;
    if (dim == 3) return 101;
    return 41;
}

std::size_t QuadratureRule::total_points() const {
    std::size_t n = 1;
    for (int i = 0; i < dim_; ++i) n *= nodes_.size();
    return n;
}

void QuadratureRule::point(std::size_t flat, std::span<double> x) const {
    const std::size_t n = nodes_.size();
    for (int i = dim_ - 1; i >= 0; --i) {
        x[i] = nodes_[flat % n];
        flat /= n;
    }
}

namespace detail {

Tensor contract_axis(const Tensor& t, int axis, std::span<const double> m, std::size_t rows) {
    const std::size_t cols = t.shape[axis];
    if (m.size() != rows * cols) throw ShapeError("contraction matrix has the wrong size");
    std::size_t outer = 1;
    std::size_t inner = 1;
    for (int i = 0; i < axis; ++i) outer *= t.shape[i];
    for (std::size_t i = axis + 1; i < t.shape.size(); ++i) inner *= t.shape[i];
    Tensor out;
    out.shape = t.shape;
    out.shape[axis] = rows;
    out.data.assign(outer * rows * inner, 0.0);
    for (std::size_t o = 0; o < outer; ++o) {
        const double* src = t.data.data() + o * cols * inner;
        double* dst = out.data.data() + o * rows * inner;
        for (std::size_t r = 0; r < rows; ++r) {
            double* drow = dst + r * inner;
            const double* mrow = m.data() + r * cols;
            for (std::size_t c = 0; c < cols; ++c) {
                const double f = mrow[c];
                if (f == 0.0) continue;
                const double* srow = src + c * inner;
                for (std::size_t i = 0; i < inner; ++i) drow[i] += f * srow[i];
            }
        }
    }
    return out;
}

std::vector<double> sine_matrix(int max_j, std::span<const double> x, std::span<const double> w) {
    const std::size_t n = x.size();
    std::vector<double> m(static_cast<std::size_t>(max_j) * n);
    for (int j = 1; j <= max_j; ++j) {
        for (std::size_t k = 0; k < n; ++k) {
            const double wk = w.empty() ? 1.0 : w[k];
            m[(j - 1) * n + k] = wk * kNorm1d * std::sin(j * x[k]);
        }
    }
    return m;
}

}  // namespace detail

namespace {

void check_resolution(const ModeSet& modes, const QuadratureRule& rule) {
    if (modes.dim() != rule.dim()) throw ShapeError("quadrature and mode set dimensions differ");
    if (modes.max_frequency() > rule.max_resolved_frequency()) {
        throw ResolutionError("quadrature with " + std::to_string(rule.nodes_per_axis()) +
                              " nodes per axis cannot resolve frequency " + std::to_string(modes.max_frequency()));
    }
}

std::size_t rect_offset(const ModeIndex& j, const std::vector<int>& extent) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < extent.size(); ++i) off = off * extent[i] + (j[static_cast<int>(i)] - 1);
    return off;
}

}  // namespace

SpectralField project_values(std::span<const double> values, ModeSetPtr modes, const QuadratureRule& rule) {
    check_resolution(*modes, rule);
    if (values.size() != rule.total_points()) throw ShapeError("sample count differs from quadrature size");
    SpectralField out(modes);
    if (modes->empty()) return out;
    const int d = rule.dim();
    const auto extent = modes->max_per_axis();
    detail::Tensor t;
    t.shape.assign(static_cast<std::size_t>(d), static_cast<std::size_t>(rule.nodes_per_axis()));
    t.data.assign(values.begin(), values.end());
    for (int axis = 0; axis < d; ++axis) {
        const auto m = detail::sine_matrix(extent[axis], rule.nodes(), rule.weights());
        t = detail::contract_axis(t, axis, m, static_cast<std::size_t>(extent[axis]));
    }
    for (std::size_t i = 0; i < modes->size(); ++i) out[i] = t.data[rect_offset((*modes)[i], extent)];
    return out;
}

SpectralField project(const std::function<double(std::span<const double>)>& f, ModeSetPtr modes,
                      const QuadratureRule& rule) {
    check_resolution(*modes, rule);
    std::vector<double> values(rule.total_points());
    std::vector<double> x(static_cast<std::size_t>(rule.dim()));
    for (std::size_t p = 0; p < values.size(); ++p) {
        rule.point(p, x);
        values[p] = f(x);
    }
    return project_values(values, std::move(modes), rule);
}

std::vector<double> synthesize(const SpectralField& f, const QuadratureRule& rule) {
    if (f.dim() != rule.dim()) throw ShapeError("quadrature and field dimensions differ");
    const int d = rule.dim();
    const std::size_t n = static_cast<std::size_t>(rule.nodes_per_axis());
    if (f.size() == 0) return std::vector<double>(rule.total_points(), 0.0);
    const auto extent = f.modes().max_per_axis();
    detail::Tensor t;
    std::size_t total = 1;
    for (int e : extent) {
        t.shape.push_back(static_cast<std::size_t>(e));
        total *= static_cast<std::size_t>(e);
    }
    t.data.assign(total, 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) t.data[rect_offset(f.modes()[i], extent)] = f[i];
    for (int axis = 0; axis < d; ++axis) {
        const auto s = detail::sine_matrix(extent[axis], rule.nodes(), {});
        // Transpose to nodes x modes.
        std::vector<double> st(s.size());
        for (int j = 0; j < extent[axis]; ++j) {
            for (std::size_t k = 0; k < n; ++k) st[k * extent[axis] + j] = s[j * n + k];
        }
        t = detail::contract_axis(t, axis, st, n);
    }
    return t.data;
}

}  // namespace fracback
