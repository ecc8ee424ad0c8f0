#include "oblique/oblique_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oblique/errors.hpp"
#include "oblique/format.hpp"

namespace oblique {

namespace {

bool exactly_symmetric(const Mat& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = i + 1; j < m.cols(); ++j)
            if (m(i, j) != m(j, i)) return false;
    return true;
}

void require_spd_within(const Mat& m, double c, const char* what, bool check_bounds) {
    if (m.rows() != m.cols() || m.rows() < 1) throw InvalidArgument(std::string(what) + ": matrix must be square");
    if (!m.allFinite()) throw InvalidArgument(std::string(what) + ": non-finite entries");
    if (!exactly_symmetric(m)) throw InvalidArgument(std::string(what) + ": matrix is not symmetric");
    if (!check_bounds) return;
    const auto e = jacobi_eigen(m);
    const double lo = e.values(0), hi = e.values(e.values.size() - 1);
    if (lo < 1.0 / c - 1e-12 || hi > c + 1e-12)
        throw InvalidArgument(std::string(what) + ": spectrum [" + format_double(lo) + ", " + format_double(hi) +
                              "] not inside [1/c, c]");
}

std::string describe_mat(const Mat& m) {
    std::string s = "[";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        s += i ? ",[" : "[";
        for (Eigen::Index j = 0; j < m.cols(); ++j) s += (j ? "," : "") + format_double(m(i, j));
        s += "]";
    }
    return s + "]";
}

void check_constants(double c, double b) {
    if (!(c >= 1.0) || !std::isfinite(c)) throw InvalidArgument("oblique field: c must be finite and >= 1");
    if (!(b >= 0.0) || !std::isfinite(b)) throw InvalidArgument("oblique field: b must be finite and >= 0");
}

}  // namespace

ObliqueField ObliqueField::constant(Mat matrix, double c, double b, Construction mode) {
    check_constants(c, b);
    require_spd_within(matrix, c, "constant field", mode == Construction::checked);
    ObliqueField h(Kind::constant, static_cast<int>(matrix.rows()), c, b);
    h.m0_ = std::move(matrix);
    return h;
}

ObliqueField ObliqueField::diagonal_affine(Vec base, Mat slopes, double c, double b) {
    check_constants(c, b);
    const auto d = base.size();
    if (d < 1 || slopes.rows() != d || slopes.cols() != d)
        throw InvalidArgument("diagonal_affine: slopes must be d x d (row i is the gradient of d_i)");
    if (!base.allFinite() || !slopes.allFinite()) throw InvalidArgument("diagonal_affine: non-finite entries");
    ObliqueField h(Kind::diagonal_affine, static_cast<int>(d), c, b);
    h.v_ = std::move(base);
    h.m0_ = std::move(slopes);
    return h;
}

ObliqueField ObliqueField::rotation_blend(Mat a0, Mat a1, Vec direction, double offset, double c, double b,
                                          Construction mode) {
    check_constants(c, b);
    require_spd_within(a0, c, "rotation_blend A0", mode == Construction::checked);
    require_spd_within(a1, c, "rotation_blend A1", mode == Construction::checked);
    if (a0.rows() != a1.rows() || direction.size() != a0.rows())
        throw InvalidArgument("rotation_blend: dimension mismatch");
    if (!direction.allFinite() || !std::isfinite(offset)) throw InvalidArgument("rotation_blend: non-finite entries");
    ObliqueField h(Kind::rotation_blend, static_cast<int>(a0.rows()), c, b);
    h.m0_ = std::move(a0);
    h.m1_ = std::move(a1);
    h.v_ = std::move(direction);
    h.offset_ = offset;
    return h;
}

double ObliqueField::blend_weight(const Vec& x) const {
    if (kind_ != Kind::rotation_blend) return 0.0;
    const double s = std::clamp(v_.dot(x) + offset_, 0.0, 1.0);
    return s * s * (3.0 - 2.0 * s);
}

Mat ObliqueField::eval(const Vec& x) const {
    if (x.size() != dim_) throw InvalidArgument("eval_field: dimension mismatch");
    switch (kind_) {
        case Kind::constant:
            return m0_;
        case Kind::diagonal_affine: {
            Mat out = Mat::Zero(dim_, dim_);
            for (int i = 0; i < dim_; ++i) out(i, i) = std::clamp(v_(i) + m0_.row(i).dot(x), 1.0 / c_, c_);
            return out;
        }
        case Kind::rotation_blend: {
            const double w = blend_weight(x);
            Mat out(dim_, dim_);
            for (int i = 0; i < dim_; ++i)
                for (int j = i; j < dim_; ++j) {
                    out(i, j) = (1.0 - w) * m0_(i, j) + w * m1_(i, j);
                    out(j, i) = out(i, j);
                }
            return out;
        }
    }
    return m0_;
}

Mat ObliqueField::inverse(const Vec& x) const {
    const Mat h = eval(x);
    if (kind_ == Kind::diagonal_affine) return h.diagonal().cwiseInverse().asDiagonal();
    Eigen::FullPivLU<Mat> lu(h);
    if (!lu.isInvertible()) throw InternalError("eval_inverse: singular field matrix");
    const Mat inv = lu.inverse();
    const double defect = (h * inv - Mat::Identity(dim_, dim_)).cwiseAbs().maxCoeff();
    if (defect > 1e-12 * c_ * c_) throw InternalError("eval_inverse: conditioning check failed");
    return inv;
}

std::string ObliqueField::describe() const {
    const std::string consts = ",c=" + format_double(c_) + ",b=" + format_double(b_) + ")";
    switch (kind_) {
        case Kind::constant:
            return "constant(" + describe_mat(m0_) + consts;
        case Kind::diagonal_affine:
            return "diagonal_affine(base=" + describe_mat(v_.transpose()) + ",slopes=" + describe_mat(m0_) + consts;
        case Kind::rotation_blend:
            return "rotation_blend(A0=" + describe_mat(m0_) + ",A1=" + describe_mat(m1_) +
                   ",dir=" + describe_mat(v_.transpose()) + ",offset=" + format_double(offset_) + consts;
    }
    return {};
}

ValidationReport validate_field(const ObliqueField& h, const std::vector<Vec>& probes) {
    if (probes.size() < 2) throw InvalidArgument("validate_field: need at least two probe points");
    ValidationReport rep;
    rep.declared_c = h.c();
    rep.declared_b = h.b();
    rep.min_eigenvalue = std::numeric_limits<double>::infinity();
    rep.max_eigenvalue = -std::numeric_limits<double>::infinity();

    const double c = h.c();
    const double eig_slack = 1e-12 * c;
    std::vector<Mat> values, inverses;
    values.reserve(probes.size());
    inverses.reserve(probes.size());

    auto fail = [&](std::string msg, int i, int j) {
        if (rep.violating_pair) return;
        rep.message = std::move(msg);
        rep.violating_pair = std::make_pair(i, j);
    };

    for (std::size_t p = 0; p < probes.size(); ++p) {
        const Mat m = h.eval(probes[p]);
        const double sym = (m - m.transpose()).cwiseAbs().maxCoeff();
        rep.max_symmetry_defect = std::max(rep.max_symmetry_defect, sym);
        const auto e = jacobi_eigen(m);
        const double lo = e.values(0), hi = e.values(e.values.size() - 1);
        rep.min_eigenvalue = std::min(rep.min_eigenvalue, lo);
        rep.max_eigenvalue = std::max(rep.max_eigenvalue, hi);
        const int ip = static_cast<int>(p);
        if (sym != 0.0) fail("H(x) is not symmetric", ip, ip);
        if (hi > c + eig_slack) fail("eigenvalue " + format_double(hi) + " exceeds c = " + format_double(c), ip, ip);
        if (lo < 1.0 / c - eig_slack)
            fail("eigenvalue " + format_double(lo) + " below 1/c = " + format_double(1.0 / c), ip, ip);
        values.push_back(m);
        inverses.push_back(h.inverse(probes[p]));
    }

    const double b = h.b();
    for (std::size_t i = 0; i < probes.size(); ++i) {
        for (std::size_t j = i + 1; j < probes.size(); ++j) {
            const double dist = (probes[i] - probes[j]).norm();
            if (dist == 0.0) continue;
            const double qh = symmetric_norm(values[i] - values[j]) / dist;
            const double qi = symmetric_norm(inverses[i] - inverses[j]) / dist;
            rep.lipschitz_h = std::max(rep.lipschitz_h, qh);
            rep.lipschitz_h_inv = std::max(rep.lipschitz_h_inv, qi);
            const double slack = 1e-9 * (1.0 + b);
            if (qh > b + slack)
                fail("|H(x)-H(y)|/|x-y| = " + format_double(qh) + " exceeds b = " + format_double(b),
                     static_cast<int>(i), static_cast<int>(j));
            if (qi > b + slack)
                fail("|H^-1(x)-H^-1(y)|/|x-y| = " + format_double(qi) + " exceeds b = " + format_double(b),
                     static_cast<int>(i), static_cast<int>(j));
        }
    }
    rep.pass = !rep.violating_pair.has_value();
    if (rep.pass) rep.message = "pass";
    return rep;
}

Mat direction_matrix(const Vec& nu, const Vec& n) {
    if (nu.size() != n.size() || n.size() < 1) throw InvalidArgument("direction_matrix: dimension mismatch");
    if (std::abs(n.norm() - 1.0) > 1e-12) throw InvalidArgument("direction_matrix: n must be a unit vector");
    const double p = nu.dot(n);
    if (!(p > 0.0)) throw InvalidArgument("direction_matrix: <nu, n> must be > 0 for an external direction");
    const auto d = n.size();
    Mat m(d, d);
    // Assemble the upper triangle and mirror so the result is exactly symmetric.
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i; j < d; ++j) {
            const double v = (i == j ? p : 0.0) - nu(i) * n(j) - n(i) * nu(j) + (2.0 / p) * nu(i) * nu(j);
            m(i, j) = v;
            m(j, i) = v;
        }
    return m;
}

}  // namespace oblique
