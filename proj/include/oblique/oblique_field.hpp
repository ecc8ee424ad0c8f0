#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "oblique/linalg.hpp"

namespace oblique {

/// Symmetric, uniformly elliptic matrix field x -> H(x) with
/// spectrum in [1/c, c] and Lipschitz constant b for both H and H^{-1}.
///
/// Catalog:
///  - constant: a fixed SPD matrix.
///  - diagonal_affine: H = diag(d_i(x)), d_i(x) = clamp(base_i + <slope_i, x>, 1/c, c).
///  - rotation_blend: H = (1 - w(x)) A0 + w(x) A1 with
///    w(x) = smoothstep(clamp(<direction, x> + offset, 0, 1)).
///
/// Entries are computed for i <= j and mirrored, so H(x) is bit-symmetric.
class ObliqueField {
public:
    enum class Kind { constant, diagonal_affine, rotation_blend };
    /// `checked` rejects matrices whose spectrum leaves [1/c, c];
    /// `unchecked` only enforces symmetry and leaves bounds to validate_field.
    enum class Construction { checked, unchecked };

    static ObliqueField constant(Mat matrix, double c, double b, Construction mode = Construction::checked);
    static ObliqueField diagonal_affine(Vec base, Mat slopes, double c, double b);
    static ObliqueField rotation_blend(Mat a0, Mat a1, Vec direction, double offset, double c, double b,
                                       Construction mode = Construction::checked);
    static ObliqueField identity(int dim) { return constant(Mat::Identity(dim, dim), 1.0, 0.0); }

    Kind kind() const noexcept { return kind_; }
    int dim() const noexcept { return dim_; }
    double c() const noexcept { return c_; }
    double b() const noexcept { return b_; }

    Mat eval(const Vec& x) const;
    /// Inverse by full-pivoting LU; throws InternalError if H(x) H(x)^{-1}
    /// misses the identity by more than 1e-12 (relative).
    Mat inverse(const Vec& x) const;

    /// Blend weight in [0, 1]; zero for non-blend kinds.
    double blend_weight(const Vec& x) const;

    std::string describe() const;

private:
    ObliqueField(Kind kind, int dim, double c, double b) : kind_(kind), dim_(dim), c_(c), b_(b) {}

    Kind kind_;
    int dim_;
    double c_;
    double b_;
    Mat m0_, m1_;  // constant matrix / blend endpoints; slopes for diagonal_affine
    Vec v_;        // diagonal base / blend direction
    double offset_ = 0.0;
};

struct ValidationReport {
    bool pass = false;
    double max_symmetry_defect = 0.0;
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
    double lipschitz_h = 0.0;      // max |H(x)-H(y)| / |x-y| over probe pairs
    double lipschitz_h_inv = 0.0;  // same for H^{-1}
    double declared_c = 0.0;
    double declared_b = 0.0;
    std::string message;
    /// Probe indices of the first violating pair (a single index is repeated
    /// for pointwise violations).
    std::optional<std::pair<int, int>> violating_pair;
};

/// Probes symmetry, ellipticity and Lipschitz bounds of H on a point cloud.
/// Requires at least two probes.
ValidationReport validate_field(const ObliqueField& h, const std::vector<Vec>& probes);

/// M = <nu,n> I - nu n^T - n nu^T + (2/<nu,n>) nu nu^T, which is symmetric
/// and maps the unit normal n to the external direction nu.
/// Rejects <nu, n> <= 0 and |n| != 1 (to 1e-12).
Mat direction_matrix(const Vec& nu, const Vec& n);

}  // namespace oblique
