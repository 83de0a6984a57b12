#pragma once

#include <string>
#include <vector>

#include "parabolica/errors.hpp"
#include "parabolica/types.hpp"

namespace parabolica {

struct Centre {
    Vec3 position;
    double mass;
};

/// The problem instance: fixed centres c_i with masses m_i and the
/// homogeneity degree alpha of the attracting potential,
///   V(x) = sum_i m_i / (alpha |x - c_i|^alpha),  alpha in [1,2).
struct CentreConfiguration {
    double alpha = 1.0;
    std::vector<Centre> centres;

    double total_mass() const;
    double max_centre_norm() const;  // Xi
    /// Throws InvalidConfiguration on duplicate centres, non-positive masses
    /// or alpha outside [1,2).
    void validate() const;
};

/// Translates the configuration so the mass-weighted centroid sits at the origin.
CentreConfiguration normalize(const CentreConfiguration& config);

double eval_V(const CentreConfiguration& config, const Vec3& x);
Vec3 eval_gradV(const CentreConfiguration& config, const Vec3& x);
Mat3 eval_hessV(const CentreConfiguration& config, const Vec3& x);

/// Far-field splitting V(x) = m/(alpha |x|^alpha) + W(x).
struct FarField {
    double W;
    Vec3 gradW;
};
FarField far_field_remainder(const CentreConfiguration& config, const Vec3& x);

/// Near-centre splitting V(x) = m_i/(alpha |x-c_i|^alpha) + Phi_i(x);
/// Phi_i is smooth at c_i itself.
double near_field_remainder(const CentreConfiguration& config, int centre, const Vec3& x);
Vec3 near_field_gradient(const CentreConfiguration& config, int centre, const Vec3& x);
Mat3 near_field_hessian(const CentreConfiguration& config, int centre, const Vec3& x);

struct CertificateEntry {
    std::string inequality;
    int grid_resolution;
    double worst_margin;
};

/// Certified constants of the potential splittings: delta* for the
/// near-centre balls, K and C-, C+ for the far field. The certificate lists
/// the worst margin observed per inequality on the verification grid.
struct PotentialConstants {
    double delta_star = 0.0;
    double K = 0.0;
    double C_minus = 0.0;
    double C_plus = 0.0;
    std::vector<CertificateEntry> certificate;

    const CertificateEntry& entry(const std::string& name) const;
};

/// Grid-certifies delta*, K, C-, C+. K is searched on a geometric grid
/// starting just above Xi+1 (hard cap 1e4*(Xi+1), else CertificationFailure);
/// C+ carries a 2x safety factor and C- a 0.5x one.
PotentialConstants certify_constants(const CentreConfiguration& config, int grid_resolution = 32);

/// Distance below which evaluation counts as a collision.
inline constexpr double kCollisionEvalThreshold = 1e-13;

}  // namespace parabolica
