#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace fracback {

inline constexpr int kMaxDim = 4;

/// Multi-index of a sine eigenmode on (0,pi)^d.
class ModeIndex {
public:
    ModeIndex() = default;
    ModeIndex(std::initializer_list<int> components);
    explicit ModeIndex(std::span<const int> components);

    int dim() const { return dim_; }
    int operator[](int axis) const { return c_[static_cast<std::size_t>(axis)]; }
    /// |j|^2, the Dirichlet Laplacian eigenvalue.
    double eigenvalue() const;
    std::uint64_t key() const;
    std::string to_string() const;

    friend bool operator==(const ModeIndex&, const ModeIndex&) = default;
    friend auto operator<=>(const ModeIndex&, const ModeIndex&) = default;

private:
    int dim_ = 0;
    std::array<int, kMaxDim> c_{};
};

/// sqrt(2/pi)^d prod sin(j_i x_i).
double eigenfunction(const ModeIndex& j, std::span<const double> x);

class ModeSet {
public:
    enum class Shape { Rectangle, Ball, Explicit };

    /// Modes 1 <= j_i <= N_i.
    static ModeSet rectangle(std::vector<int> N);
    /// Modes with |j|^2 <= gamma; empty when gamma < dim.
    static ModeSet ball(int dim, double gamma);
    static ModeSet from_list(int dim, std::vector<ModeIndex> modes);

    int dim() const { return dim_; }
    std::size_t size() const { return modes_.size(); }
    bool empty() const { return modes_.empty(); }
    const ModeIndex& operator[](std::size_t i) const { return modes_[i]; }
    const std::vector<ModeIndex>& modes() const { return modes_; }
    Shape shape() const { return shape_; }
    std::optional<std::size_t> find(const ModeIndex& j) const;
    bool contains(const ModeIndex& j) const { return find(j).has_value(); }
    /// Largest component per axis (zero for an empty set).
    std::vector<int> max_per_axis() const;
    int max_frequency() const;
    double max_eigenvalue() const;

    auto begin() const { return modes_.begin(); }
    auto end() const { return modes_.end(); }

private:
    ModeSet(int dim, Shape shape, std::vector<ModeIndex> modes);

    int dim_ = 0;
    Shape shape_ = Shape::Explicit;
    std::vector<ModeIndex> modes_;
    std::unordered_map<std::uint64_t, std::size_t> index_;
};

using ModeSetPtr = std::shared_ptr<const ModeSet>;

ModeSetPtr make_rectangle(std::vector<int> N);
ModeSetPtr make_ball(int dim, double gamma);

/// Finite sine expansion: coefficients indexed like the shared mode set.
class SpectralField {
public:
    SpectralField() = default;
    explicit SpectralField(ModeSetPtr modes);
    SpectralField(ModeSetPtr modes, std::vector<double> coeffs);

    int dim() const { return modes_ ? modes_->dim() : 0; }
    std::size_t size() const { return coeffs_.size(); }
    const ModeSet& modes() const { return *modes_; }
    const ModeSetPtr& modes_ptr() const { return modes_; }
    std::span<const double> coeffs() const { return coeffs_; }
    std::span<double> coeffs() { return coeffs_; }
    double& operator[](std::size_t i) { return coeffs_[i]; }
    double operator[](std::size_t i) const { return coeffs_[i]; }

    /// Coefficient of mode j, zero when j is not in the set.
    double coeff(const ModeIndex& j) const;
    double l2_norm() const;
    double sobolev_norm(double sigma) const;
    /// Point value of the expansion.
    double evaluate(std::span<const double> x) const;
    /// Same function expressed on another mode set (missing modes are dropped or zero).
    SpectralField restricted_to(ModeSetPtr target) const;

    SpectralField& operator+=(const SpectralField& other);
    SpectralField& operator-=(const SpectralField& other);
    SpectralField& operator*=(double s);

private:
    void check_same(const SpectralField& other) const;

    ModeSetPtr modes_;
    std::vector<double> coeffs_;
};

SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator+(SpectralField a, const SpectralField& b);

/// ||a - b|| in H^sigma over the union of both mode sets.
double distance(const SpectralField& a, const SpectralField& b, double sigma = 0.0);

void write_csv(std::ostream& os, const SpectralField& f);
SpectralField read_csv(std::istream& is);

/// Tensor product composite Simpson rule on [0,pi]^d.
class QuadratureRule {
public:
    static QuadratureRule simpson(int dim, int nodes_per_axis);
    /// 401 nodes per axis for d <= 2, 101 for d = 3, 41 for d = 4.
    static int default_nodes(int dim);

    int dim() const { return dim_; }
    int nodes_per_axis() const { return static_cast<int>(nodes_.size()); }
    std::size_t total_points() const;
    std::span<const double> nodes() const { return nodes_; }
    std::span<const double> weights() const { return weights_; }
    /// Coordinates of flat (row-major, axis 0 slowest) point index.
    void point(std::size_t flat, std::span<double> x) const;
    /// Highest frequency the rule resolves on a single axis.
    int max_resolved_frequency() const { return (nodes_per_axis() - 1) / 2; }

private:
    int dim_ = 0;
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

/// Projects f onto the mode set: c_j = integral of f xi_j.
SpectralField project(const std::function<double(std::span<const double>)>& f, ModeSetPtr modes,
                      const QuadratureRule& rule);
/// Same from values already sampled at the rule points.
SpectralField project_values(std::span<const double> values, ModeSetPtr modes, const QuadratureRule& rule);
/// Values of the expansion at every rule point.
std::vector<double> synthesize(const SpectralField& f, const QuadratureRule& rule);

namespace detail {

/// Dense row-major tensor contracted one axis at a time with a matrix.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;
};

/// new[o, r, i] = sum_c M[r, c] old[o, c, i] along the given axis; M is rows x cols row-major.
Tensor contract_axis(const Tensor& t, int axis, std::span<const double> m, std::size_t rows);

/// Row j-1 holds the per-axis sine factor sqrt(2/pi) sin(j x_k) scaled by w_k.
std::vector<double> sine_matrix(int max_j, std::span<const double> x, std::span<const double> w);

}  // namespace detail

}  // namespace fracback
