#include "fbsde/path.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fbsde {

namespace {

void check_finite(const std::vector<double>& data) {
    for (double v : data)
        if (!std::isfinite(v)) throw std::invalid_argument("path: non-finite entry");
}

double grid_tol(double t) { return 1e-9 * std::max(1.0, std::abs(t)); }

}  // namespace

Path::Path(int dim, double grid_step, std::vector<double> data)
    : dim_(dim), dt_(grid_step), data_(std::move(data)) {
    if (dim_ <= 0) throw std::invalid_argument("path: dim must be positive");
    if (!(dt_ > 0.0)) throw std::invalid_argument("path: grid_step must be positive");
    if (data_.empty() || data_.size() % static_cast<std::size_t>(dim_) != 0)
        throw std::invalid_argument("path: data size must be a positive multiple of dim");
    check_finite(data_);
}

Path Path::constant(int dim, double grid_step, const Eigen::VectorXd& value,
                    std::size_t npoints) {
    if (value.size() != dim) throw std::invalid_argument("path: value/dim mismatch");
    if (npoints == 0) throw std::invalid_argument("path: need at least one point");
    std::vector<double> data(npoints * static_cast<std::size_t>(dim));
    for (std::size_t k = 0; k < npoints; ++k)
        for (int i = 0; i < dim; ++i) data[k * dim + i] = value[i];
    return {dim, grid_step, std::move(data)};
}

Path Path::single_point(double grid_step, const Eigen::VectorXd& value) {
    return constant(static_cast<int>(value.size()), grid_step, value, 1);
}

void Path::append(const Eigen::Ref<const Eigen::VectorXd>& v) {
    if (v.size() != dim_) throw std::invalid_argument("path: append dim mismatch");
    data_.insert(data_.end(), v.data(), v.data() + v.size());
}

void Path::pop_back() {
    if (points() <= 1) throw std::logic_error("path: cannot drop the only point");
    data_.resize(data_.size() - static_cast<std::size_t>(dim_));
}

void Path::reserve_points(std::size_t npoints) {
    data_.reserve(npoints * static_cast<std::size_t>(dim_));
}

Path materialize(const PathView& v) {
    std::vector<double> data;
    data.reserve(v.npoints * static_cast<std::size_t>(v.dim));
    for (std::size_t k = 0; k < v.npoints; ++k) {
        const double* p = v.data + k * static_cast<std::size_t>(v.stride);
        data.insert(data.end(), p, p + v.dim);
    }
    return {v.dim, v.dt, std::move(data)};
}

PathPair::PathPair(Path a, Path b) : first(std::move(a)), second(std::move(b)) {
    if (first.grid_step() != second.grid_step())
        throw std::invalid_argument("path pair: grid steps differ");
    if (first.dim() != second.dim())
        throw std::invalid_argument("path pair: dimensions differ");
}

double sup_norm(const PathView& p) {
    double m = 0.0;
    for (std::size_t k = 0; k < p.npoints; ++k) m = std::max(m, p.value(k).norm());
    return m;
}

double d_infty(const PathView& a, const PathView& b) {
    if (a.dim != b.dim) throw std::invalid_argument("d_infty: dimension mismatch");
    if (std::abs(a.dt - b.dt) > grid_tol(a.dt))
        throw std::invalid_argument("d_infty: grid step mismatch");
    const std::size_t n = std::max(a.npoints, b.npoints);
    double sup = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto va = a.value(std::min(k, a.npoints - 1));
        const auto vb = b.value(std::min(k, b.npoints - 1));
        sup = std::max(sup, (va - vb).norm());
    }
    return sup + std::abs(a.end_time() - b.end_time());
}

Path vertical_bump(const PathView& p, const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (x.size() != p.dim) throw std::invalid_argument("vertical_bump: dim mismatch");
    Path out = materialize(p);
    out.value(out.points() - 1) += x;
    return out;
}

Path horizontal_extend(const PathView& p, double s) {
    const double t = p.end_time();
    if (s < t - grid_tol(s)) throw std::invalid_argument("horizontal_extend: s < end_time");
    const double raw = (s - t) / p.dt;
    const auto extra = static_cast<std::size_t>(std::llround(raw));
    if (std::abs(raw - static_cast<double>(extra)) > 1e-6)
        throw std::invalid_argument("horizontal_extend: s - end_time not a grid multiple");
    Path out = materialize(p);
    out.reserve_points(p.npoints + extra);
    const Eigen::VectorXd lastv = p.last();
    for (std::size_t j = 0; j < extra; ++j) out.append(lastv);
    return out;
}

std::size_t grid_index(const PathView& p, double t) {
    const double raw = t / p.dt;
    const auto k = static_cast<long long>(std::llround(raw));
    if (k < 0 || std::abs(t - static_cast<double>(k) * p.dt) > grid_tol(t))
        throw std::invalid_argument("time is off the grid");
    if (static_cast<std::size_t>(k) >= p.npoints)
        throw std::invalid_argument("time beyond end of path");
    return static_cast<std::size_t>(k);
}

Path restrict(const PathView& p, double t) {
    const std::size_t k = grid_index(p, t);
    return materialize(p.prefix(k));
}

Path running_integral(const PathView& p) {
    std::vector<double> data(p.npoints * static_cast<std::size_t>(p.dim), 0.0);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(p.dim);
    for (std::size_t k = 1; k < p.npoints; ++k) {
        acc += p.value(k - 1) * p.dt;
        for (int i = 0; i < p.dim; ++i) data[k * p.dim + i] = acc[i];
    }
    return {p.dim, p.dt, std::move(data)};
}

Eigen::VectorXd path_integral(const PathView& p) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(p.dim);
    for (std::size_t k = 1; k < p.npoints; ++k) acc += p.value(k - 1) * p.dt;
    return acc;
}

void write_path_csv(const PathView& p, std::ostream& os) {
    os << "t";
    for (int i = 1; i <= p.dim; ++i) os << ",v" << i;
    os << "\n";
    char buf[32];
    for (std::size_t k = 0; k < p.npoints; ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(k) * p.dt);
        os << buf;
        for (int i = 0; i < p.dim; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", p.value(k)[i]);
            os << ',' << buf;
        }
        os << "\n";
    }
}

void write_path_csv(const PathView& p, const std::string& filename) {
    std::ofstream os(filename);
    if (!os) throw std::runtime_error("cannot open " + filename);
    write_path_csv(p, os);
}

Path read_path_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("path csv: empty input");
    int dim = 0;
    {
        std::stringstream header(line);
        std::string cell;
        if (!std::getline(header, cell, ',') || cell != "t")
            throw std::runtime_error("path csv: header must start with t");
        while (std::getline(header, cell, ',')) ++dim;
        if (dim == 0) throw std::runtime_error("path csv: no value columns");
    }
    std::vector<double> times;
    std::vector<double> data;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        if (!std::getline(row, cell, ',')) throw std::runtime_error("path csv: bad row");
        times.push_back(std::stod(cell));
        int got = 0;
        while (std::getline(row, cell, ',')) {
            data.push_back(std::stod(cell));
            ++got;
        }
        if (got != dim) throw std::runtime_error("path csv: ragged row");
    }
    if (times.empty()) throw std::runtime_error("path csv: no rows");
    double dt = times.size() > 1 ? times[1] - times[0] : 1.0;
    if (times.size() > 1 && !(dt > 0)) throw std::runtime_error("path csv: times not increasing");
    for (std::size_t k = 0; k < times.size(); ++k)
        if (std::abs(times[k] - (times[0] + static_cast<double>(k) * dt)) > grid_tol(times[k]))
            throw std::runtime_error("path csv: non-uniform time step");
    if (std::abs(times[0]) > grid_tol(times[0]))
        throw std::runtime_error("path csv: first time must be 0");
    return {dim, dt, std::move(data)};
}

Path read_path_csv(const std::string& filename) {
    std::ifstream is(filename);
    if (!is) throw std::runtime_error("cannot open " + filename);
    return read_path_csv(is);
}

}  // namespace fbsde
