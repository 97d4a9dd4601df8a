#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace fbsde {

// A discretely sampled path on a uniform time grid. Point k holds the value
// at time k*grid_step; between grid points the path is read as
// piecewise-constant and right-continuous, so endpoint bumps are exact.
class Path {
public:
    Path(int dim, double grid_step, std::vector<double> data);
    static Path constant(int dim, double grid_step, const Eigen::VectorXd& value,
                         std::size_t npoints);
    static Path single_point(double grid_step, const Eigen::VectorXd& value);

    int dim() const { return dim_; }
    double grid_step() const { return dt_; }
    std::size_t points() const { return data_.size() / static_cast<std::size_t>(dim_); }
    std::size_t steps() const { return points() - 1; }
    double end_time() const { return static_cast<double>(steps()) * dt_; }

    Eigen::Map<const Eigen::VectorXd> value(std::size_t k) const {
        return {data_.data() + k * static_cast<std::size_t>(dim_), dim_};
    }
    Eigen::Map<Eigen::VectorXd> value(std::size_t k) {
        return {data_.data() + k * static_cast<std::size_t>(dim_), dim_};
    }
    Eigen::Map<const Eigen::VectorXd> last() const { return value(points() - 1); }

    void append(const Eigen::Ref<const Eigen::VectorXd>& v);
    void pop_back();
    void reserve_points(std::size_t npoints);

    const std::vector<double>& data() const { return data_; }

private:
    int dim_;
    double dt_;
    std::vector<double> data_;  // point-major, dim_ doubles per grid point
};

// Non-owning prefix/component view of a path. `stride` is the number of
// doubles between consecutive grid points in the underlying buffer, so a
// component block of a wider path is still a contiguous per-point vector.
struct PathView {
    const double* data = nullptr;
    std::size_t npoints = 0;
    int dim = 0;
    int stride = 0;
    double dt = 0.0;

    PathView() = default;
    PathView(const Path& p)
        : data(p.data().data()), npoints(p.points()), dim(p.dim()), stride(p.dim()),
          dt(p.grid_step()) {}
    PathView(const double* d, std::size_t n, int dim_, int stride_, double dt_)
        : data(d), npoints(n), dim(dim_), stride(stride_), dt(dt_) {}

    std::size_t steps() const { return npoints - 1; }
    double end_time() const { return static_cast<double>(npoints - 1) * dt; }
    Eigen::Map<const Eigen::VectorXd> value(std::size_t k) const {
        return {data + k * static_cast<std::size_t>(stride), dim};
    }
    Eigen::Map<const Eigen::VectorXd> last() const { return value(npoints - 1); }

    // First k+1 grid points.
    PathView prefix(std::size_t k) const { return {data, k + 1, dim, stride, dt}; }
    // Components [offset, offset+subdim) of each grid point.
    PathView components(int offset, int subdim) const {
        return {data + offset, npoints, subdim, stride, dt};
    }
};

Path materialize(const PathView& v);

struct PathPair {
    Path first;
    Path second;
    PathPair(Path a, Path b);
};

// max_k |p(t_k)|
double sup_norm(const PathView& p);

// sup_s |a(s ^ t) - b(s ^ tbar)| + |t - tbar| on the union grid, with a path
// frozen at its last value beyond its own end time.
double d_infty(const PathView& a, const PathView& b);

// Same path with the last value shifted by x.
Path vertical_bump(const PathView& p, const Eigen::Ref<const Eigen::VectorXd>& x);

// Flat extension to end time s (s on the grid, s >= end_time).
Path horizontal_extend(const PathView& p, double s);

// Prefix up to grid time t.
Path restrict(const PathView& p, double t);

// Left-endpoint Riemann sums A_k = sum_{j<k} p(t_j) * dt as a path.
Path running_integral(const PathView& p);

// Final entry of running_integral without materializing the path
// (the left sum over all points except the last).
Eigen::VectorXd path_integral(const PathView& p);

// Grid index of time t; throws if t is off-grid or out of range.
std::size_t grid_index(const PathView& p, double t);

// CSV with header t,v1,...,vn; one row per grid point, 17 significant digits.
void write_path_csv(const PathView& p, std::ostream& os);
void write_path_csv(const PathView& p, const std::string& filename);
Path read_path_csv(std::istream& is);
Path read_path_csv(const std::string& filename);

}  // namespace fbsde
