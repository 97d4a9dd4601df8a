#include "fbsde/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fbsde {

std::string format_full(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

struct Moments {
    Eigen::VectorXd mean;
    Eigen::VectorXd se;
};

Moments column_moments(const std::vector<Path>& field, std::size_t k) {
    const auto M = field.size();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(field[0].dim());
    for (const Path& p : field) mean += p.value(k);
    mean /= static_cast<double>(M);
    Eigen::VectorXd var = Eigen::VectorXd::Zero(field[0].dim());
    for (const Path& p : field) var += (p.value(k) - mean).cwiseAbs2();
    var /= static_cast<double>(M > 1 ? M - 1 : 1);
    return {mean, (var / static_cast<double>(M)).cwiseSqrt()};
}

}  // namespace

void write_solution_csv(const SolutionEstimate& est, std::ostream& os) {
    const int n = est.X[0].dim();
    const int m = est.Y[0].dim();
    const int md = est.Z[0].dim();
    const std::size_t K = est.X[0].steps();
    const double dt = est.X[0].grid_step();

    os << "t";
    for (int i = 1; i <= n; ++i) os << ",mean_X" << i;
    for (int i = 1; i <= m; ++i) os << ",mean_Y" << i;
    for (int i = 1; i <= md; ++i) os << ",mean_Z" << i;
    for (int i = 1; i <= n; ++i) os << ",stderr_X" << i;
    for (int i = 1; i <= m; ++i) os << ",stderr_Y" << i;
    for (int i = 1; i <= md; ++i) os << ",stderr_Z" << i;
    os << "\n";

    for (std::size_t k = 0; k <= K; ++k) {
        const Moments mx = column_moments(est.X, k);
        const Moments my = column_moments(est.Y, k);
        const bool has_z = k < K;
        Moments mz;
        if (has_z) mz = column_moments(est.Z, k);
        os << format_full(static_cast<double>(k) * dt);
        for (int i = 0; i < n; ++i) os << ',' << format_full(mx.mean[i]);
        for (int i = 0; i < m; ++i) os << ',' << format_full(my.mean[i]);
        for (int i = 0; i < md; ++i) {
            os << ',';
            if (has_z) os << format_full(mz.mean[i]);
        }
        for (int i = 0; i < n; ++i) os << ',' << format_full(mx.se[i]);
        for (int i = 0; i < m; ++i) os << ',' << format_full(my.se[i]);
        for (int i = 0; i < md; ++i) {
            os << ',';
            if (has_z) os << format_full(mz.se[i]);
        }
        os << "\n";
    }
}

void write_solution_csv(const SolutionEstimate& est, const std::string& filename) {
    std::ofstream os(filename);
    if (!os) throw std::runtime_error("cannot open " + filename);
    write_solution_csv(est, os);
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a64_file(const std::string& filename) {
    std::ifstream is(filename, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + filename);
    std::ostringstream ss;
    ss << is.rdbuf();
    return fnv1a64(ss.str());
}

void write_text_atomic(const std::string& filename, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(filename);
    const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
    {
        std::ofstream os(tmp);
        if (!os) throw std::runtime_error("cannot open " + tmp.string());
        os << content;
    }
    fs::rename(tmp, target);
}

}  // namespace fbsde
