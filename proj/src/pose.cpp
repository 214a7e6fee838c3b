#include "viewfusion/pose.hpp"

namespace viewfusion {

double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a > kPi) a -= 2.0 * kPi;
    if (a <= -kPi) a += 2.0 * kPi;
    return a;
}

PoseOffset make_offset(double d_azimuth, double d_elevation, double d_distance) {
    return {wrap_angle(d_azimuth), d_elevation, d_distance};
}

Pose apply_offset(const Pose& base, const PoseOffset& o) {
    return {wrap_angle(base.azimuth + o.d_azimuth), base.elevation + o.d_elevation,
            base.distance + o.d_distance};
}

PoseOffset offset_between(const Pose& from, const Pose& to) {
    return {wrap_angle(to.azimuth - from.azimuth), to.elevation - from.elevation,
            to.distance - from.distance};
}

PoseOffset relative_offset(const PoseOffset& a, const PoseOffset& b) {
    return {wrap_angle(a.d_azimuth - b.d_azimuth), a.d_elevation - b.d_elevation,
            a.d_distance - b.d_distance};
}

}  // namespace viewfusion
