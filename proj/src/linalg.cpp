#include "oblique/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "oblique/errors.hpp"

namespace oblique {

namespace {

double off_diagonal_norm(const Mat& a) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = i + 1; j < a.cols(); ++j) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
}

}  // namespace

EigenDecomposition jacobi_eigen(const Mat& input, double tol, int max_sweeps) {
    if (input.rows() != input.cols()) throw InvalidArgument("jacobi_eigen: matrix is not square");
    const Eigen::Index n = input.rows();
    Mat a = input.selfadjointView<Eigen::Upper>();
    Mat v = Mat::Identity(n, n);
    const double scale = std::max(a.norm(), 1e-300);

    int sweep = 0;
    for (; sweep < max_sweeps && off_diagonal_norm(a) > tol * scale; ++sweep) {
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    if (off_diagonal_norm(a) > tol * scale) throw InternalError("jacobi_eigen: sweep budget exhausted");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) < a(j, j); });

    EigenDecomposition out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values(i) = a(order[i], order[i]);
        out.vectors.col(i) = v.col(order[i]);
    }
    out.sweeps = sweep;
    return out;
}

double symmetric_norm(const Mat& a) {
    if (a.size() == 0) return 0.0;
    const auto e = jacobi_eigen(a);
    return std::max(std::abs(e.values(0)), std::abs(e.values(e.values.size() - 1)));
}

double spectral_norm(const Mat& a) {
    if (a.size() == 0) return 0.0;
    const Mat ata = a.transpose() * a;
    const auto e = jacobi_eigen(ata);
    return std::sqrt(std::max(0.0, e.values(e.values.size() - 1)));
}

}  // namespace oblique
