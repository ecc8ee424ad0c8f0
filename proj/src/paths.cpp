#include "oblique/paths.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "oblique/errors.hpp"
#include "oblique/format.hpp"

namespace oblique {

namespace {

constexpr double kGridSlack = 1e-9;

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
    }
    return out;
}

}  // namespace

std::size_t grid_steps(double duration, double dt, const char* what) {
    if (!(dt > 0.0)) throw InvalidArgument("grid step must be > 0");
    if (!(duration >= 0.0) || !std::isfinite(duration)) throw InvalidArgument(std::string(what) + " must be finite and >= 0");
    const double r = duration / dt;
    const double n = std::round(r);
    if (std::abs(r - n) > kGridSlack * std::max(1.0, r))
        throw GridMismatch(std::string(what) + " = " + format_double(duration) + " is not a multiple of dt = " +
                           format_double(dt));
    return static_cast<std::size_t>(n);
}

std::size_t grid_steps_ceil(double duration, double dt) {
    if (!(dt > 0.0)) throw InvalidArgument("grid step must be > 0");
    const double r = duration / dt;
    const double n = std::round(r);
    if (std::abs(r - n) <= kGridSlack * std::max(1.0, r)) return static_cast<std::size_t>(n);
    return static_cast<std::size_t>(std::ceil(r));
}

// ---------------------------------------------------------------------------

SampledPath::SampledPath(double t0, double dt, Mat values) : t0_(t0), dt_(dt), values_(std::move(values)) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("SampledPath: dt must be finite and > 0");
    if (!std::isfinite(t0)) throw InvalidArgument("SampledPath: t0 must be finite");
    if (values_.rows() < 1 || values_.cols() < 2) throw InvalidArgument("SampledPath: need d >= 1 and at least two nodes");
    if (!values_.allFinite()) throw InvalidArgument("SampledPath: non-finite values");
}

SampledPath SampledPath::sample(double t0, double dt, std::size_t steps, const std::function<Vec(double)>& fn) {
    if (steps < 1) throw InvalidArgument("SampledPath::sample: need at least one step");
    const Vec first = fn(t0);
    Mat values(first.size(), static_cast<Eigen::Index>(steps + 1));
    values.col(0) = first;
    for (std::size_t i = 1; i <= steps; ++i)
        values.col(static_cast<Eigen::Index>(i)) = fn(t0 + static_cast<double>(i) * dt);
    return SampledPath(t0, dt, std::move(values));
}

Vec SampledPath::at(double t, Extension ext) const {
    const double u = (t - t0_) / dt_;
    if (u < -kGridSlack) {
        if (ext == Extension::frozen) return values_.col(0);
        return Vec::Zero(values_.rows());
    }
    const auto n = static_cast<double>(steps());
    if (u >= n) {
        if (u <= n + kGridSlack * std::max(1.0, n)) return values_.col(values_.cols() - 1);
        throw InvalidArgument("SampledPath::at: time " + format_double(t) + " beyond path end " + format_double(end()));
    }
    if (u <= 0.0) return values_.col(0);
    const double fl = std::floor(u);
    const auto i = static_cast<Eigen::Index>(fl);
    const double frac = u - fl;
    if (frac == 0.0) return values_.col(i);
    return (1.0 - frac) * values_.col(i) + frac * values_.col(i + 1);
}

double SampledPath::sup_norm() const { return values_.colwise().norm().maxCoeff(); }

// ---------------------------------------------------------------------------

double total_variation(const SampledPath& p, double from, double to) {
    const double slack = kGridSlack * p.dt();
    if (!(from <= to)) throw InvalidArgument("total_variation: reversed interval");
    if (from < p.t0() - slack || to > p.end() + slack) throw InvalidArgument("total_variation: interval outside the path");
    if (from == to) return 0.0;

    const double ua = (from - p.t0()) / p.dt();
    const double ub = (to - p.t0()) / p.dt();
    auto first = static_cast<long long>(std::ceil(ua - kGridSlack));
    auto last = static_cast<long long>(std::floor(ub + kGridSlack));
    first = std::max(first, 0LL);
    last = std::min(last, static_cast<long long>(p.steps()));

    const Vec start = p.at(from);
    const Vec stop = p.at(to);
    if (first > last) return (stop - start).norm();

    double tv = (Vec(p.node(static_cast<std::size_t>(first))) - start).norm();
    for (long long i = first; i < last; ++i)
        tv += (p.node(static_cast<std::size_t>(i + 1)) - p.node(static_cast<std::size_t>(i))).norm();
    tv += (stop - Vec(p.node(static_cast<std::size_t>(last)))).norm();
    return tv;
}

double modulus_of_continuity(const SampledPath& p, double delta) {
    if (!(delta > 0.0)) throw InvalidArgument("modulus_of_continuity: delta must be > 0");
    const auto n = p.steps();
    const auto w = std::min<std::size_t>(n, static_cast<std::size_t>(std::floor(delta / p.dt() + kGridSlack)));
    const Mat& v = p.values();
    double best = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const std::size_t top = std::min(n, i + w);
        for (std::size_t j = i + 1; j <= top; ++j)
            best = std::max(best, (v.col(static_cast<Eigen::Index>(j)) - v.col(static_cast<Eigen::Index>(i))).norm());
    }
    return best;
}

double mu_of(const SampledPath& p, double delta) { return delta + modulus_of_continuity(p, delta); }

Mollified mollify(const SampledPath& m, double eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("mollify: eps must be finite and > 0");
    if (eps < m.dt() * (1.0 - kGridSlack)) throw InvalidArgument("mollify: eps is smaller than the grid step");
    const std::size_t w = grid_steps_ceil(eps, m.dt());
    const double used = static_cast<double>(w) * m.dt();

    const auto n = m.steps();
    const Mat& v = m.values();
    // Running trapezoidal integral from t0.
    Mat cumulative(v.rows(), v.cols());
    cumulative.col(0).setZero();
    for (std::size_t i = 0; i < n; ++i) {
        const auto a = static_cast<Eigen::Index>(i);
        cumulative.col(a + 1) = cumulative.col(a) + 0.5 * m.dt() * (v.col(a) + v.col(a + 1));
    }
    Mat out(v.rows(), v.cols());
    for (std::size_t i = 0; i <= n; ++i) {
        const auto a = static_cast<Eigen::Index>(i);
        if (i > w)
            out.col(a) = (cumulative.col(a) - cumulative.col(static_cast<Eigen::Index>(i - w))) / used;
        else
            out.col(a) = cumulative.col(a) / used;
    }
    Mollified res;
    res.path = SampledPath(m.t0(), m.dt(), std::move(out));
    res.eps = used;
    res.snapped = std::abs(used - eps) > kGridSlack * used;
    return res;
}

SampledPath derivative(const SampledPath& p) {
    const Mat& v = p.values();
    const auto n = v.cols() - 1;
    Mat out(v.rows(), v.cols());
    for (Eigen::Index i = 0; i < n; ++i) out.col(i) = (v.col(i + 1) - v.col(i)) / p.dt();
    out.col(n) = out.col(n - 1);
    return SampledPath(p.t0(), p.dt(), std::move(out));
}

SampledPath difference(const SampledPath& a, const SampledPath& b) {
    if (a.nodes() != b.nodes() || a.dim() != b.dim() || a.dt() != b.dt() || a.t0() != b.t0())
        throw GridMismatch("difference: paths are on different grids");
    return SampledPath(a.t0(), a.dt(), a.values() - b.values());
}

SampledPath read_path_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument("path csv: empty input");
    const auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "t") throw InvalidArgument("path csv: header must be t,v1,...,vd");
    const auto d = static_cast<Eigen::Index>(header.size() - 1);

    std::vector<double> times;
    std::vector<double> flat;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) throw InvalidArgument("path csv: row has wrong number of columns");
        try {
            times.push_back(std::stod(cells[0]));
            for (std::size_t c = 1; c < cells.size(); ++c) flat.push_back(std::stod(cells[c]));
        } catch (const std::exception&) {
            throw InvalidArgument("path csv: unparsable number in row '" + line + "'");
        }
    }
    if (times.size() < 2) throw InvalidArgument("path csv: need at least two rows");
    const double dt = times[1] - times[0];
    if (!(dt > 0.0)) throw InvalidArgument("path csv: time column must be strictly increasing");
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double expect = times[0] + static_cast<double>(i) * dt;
        if (!(times[i] > times[i - 1]) || std::abs(times[i] - expect) > 1e-9 * std::max(1.0, std::abs(expect)))
            throw InvalidArgument("path csv: time column is not a uniform grid");
    }
    Mat values(d, static_cast<Eigen::Index>(times.size()));
    for (std::size_t i = 0; i < times.size(); ++i)
        for (Eigen::Index c = 0; c < d; ++c) values(c, static_cast<Eigen::Index>(i)) = flat[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)];
    return SampledPath(times[0], dt, std::move(values));
}

SampledPath load_path_csv(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw InvalidArgument("path csv: cannot open " + file);
    std::stringstream ss;
    ss << in.rdbuf();
    return read_path_csv(ss.str());
}

}  // namespace oblique
