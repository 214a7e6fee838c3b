#pragma once

#include <cmath>

namespace viewfusion {

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg_to_rad(double d) { return d * kPi / 180.0; }
inline constexpr double rad_to_deg(double r) { return r * 180.0 / kPi; }

/// Wrap an angle into (-pi, pi].
double wrap_angle(double a);

/// Absolute camera pose in spherical coordinates (radians, radians, unitless).
struct Pose {
    double azimuth = 0.0;
    double elevation = 0.0;
    double distance = 1.5;
};

/// Relative offset between two views: (delta azimuth, delta elevation,
/// delta distance). Azimuth stays wrapped into (-pi, pi].
struct PoseOffset {
    double d_azimuth = 0.0;
    double d_elevation = 0.0;
    double d_distance = 0.0;

    /// View-distance scalar |da|/pi + |de|/pi + |dd|. Zero iff identity.
    double delta() const {
        return std::abs(d_azimuth) / kPi + std::abs(d_elevation) / kPi + std::abs(d_distance);
    }
    bool is_identity() const { return d_azimuth == 0.0 && d_elevation == 0.0 && d_distance == 0.0; }
    PoseOffset negated() const { return {wrap_angle(-d_azimuth), -d_elevation, -d_distance}; }
};

/// Construct an offset with the azimuth wrapped.
PoseOffset make_offset(double d_azimuth, double d_elevation, double d_distance);

/// base advanced by the offset.
Pose apply_offset(const Pose& base, const PoseOffset& o);

/// Offset o with to == apply_offset(from, o).
PoseOffset offset_between(const Pose& from, const Pose& to);

/// Componentwise difference a - b of two offsets sharing a reference frame,
/// i.e. the pose of view a relative to view b.
PoseOffset relative_offset(const PoseOffset& a, const PoseOffset& b);

}  // namespace viewfusion
