#pragma once

#include <array>
#include <cmath>
#include <string_view>

#include "ssfi/channels.hpp"

namespace ssfi {

struct ElectrodePosition {
    std::string_view name;
    double x = 0.0;  // +x = right ear
    double y = 0.0;  // +y = nose
};

struct MontageLayout {
    std::array<ElectrodePosition, kNumChannels> electrodes;

    const ElectrodePosition& operator[](std::size_t i) const { return electrodes[i]; }
};

namespace detail {

struct Sph3 {
    double x, y, z;
};

// Point on the unit sphere from inclination (degrees from the vertex) and
// azimuth (degrees counterclockwise from the right ear, seen from above).
inline Sph3 sph_point(double incl_deg, double az_deg) {
    const double d2r = 3.14159265358979323846 / 180.0;
    double incl = incl_deg * d2r;
    double az = az_deg * d2r;
    return {std::sin(incl) * std::cos(az), std::sin(incl) * std::sin(az), std::cos(incl)};
}

inline Sph3 slerp(const Sph3& p, const Sph3& q, double t) {
    double dot = p.x * q.x + p.y * q.y + p.z * q.z;
    double omega = std::acos(std::min(1.0, std::max(-1.0, dot)));
    double sa = std::sin((1.0 - t) * omega) / std::sin(omega);
    double sb = std::sin(t * omega) / std::sin(omega);
    return {sa * p.x + sb * q.x, sa * p.y + sb * q.y, sa * p.z + sb * q.z};
}

// Azimuthal-equidistant projection from the vertex: planar radius is
// proportional to inclination, with the nasion/inion equator at radius 1.
inline ElectrodePosition project(std::string_view name, const Sph3& p) {
    double incl = std::acos(std::min(1.0, std::max(-1.0, p.z)));
    double r = incl / (3.14159265358979323846 / 2.0);
    double az = std::atan2(p.y, p.x);
    return {name, r * std::cos(az), r * std::sin(az)};
}

}  // namespace detail

// The 14-electrode Epoc subset of the 10-20 system on an idealized sphere.
// Ring electrodes (F7/8, T7/8, P7/8, O1/2) sit on the 10% circle at 72 deg
// inclination, spaced 18 deg apart in azimuth; interior electrodes are
// great-circle midpoints of the standard 10-10 construction arcs:
// F3 halfway along Fz-F7, AF3 halfway along AFz-AF7, FC5 three quarters
// along FCz-FT7 (mirrored on the right).
inline MontageLayout project_montage() {
    using detail::Sph3;
    using detail::slerp;
    using detail::sph_point;

    const double ring = 72.0;
    // Azimuths on the ring, nose at 90.
    Sph3 f7 = sph_point(ring, 144.0), f8 = sph_point(ring, 36.0);
    Sph3 t7 = sph_point(ring, 180.0), t8 = sph_point(ring, 0.0);
    Sph3 p7 = sph_point(ring, 216.0), p8 = sph_point(ring, -36.0);
    Sph3 o1 = sph_point(ring, 252.0), o2 = sph_point(ring, -72.0);
    Sph3 af7 = sph_point(ring, 126.0), af8 = sph_point(ring, 54.0);
    Sph3 ft7 = sph_point(ring, 162.0), ft8 = sph_point(ring, 18.0);
    // Midline positions at 20%, 30%, 40% of the nasion-inion arc.
    Sph3 afz = sph_point(54.0, 90.0);
    Sph3 fz = sph_point(36.0, 90.0);
    Sph3 fcz = sph_point(18.0, 90.0);

    Sph3 af3 = slerp(afz, af7, 0.5), af4 = slerp(afz, af8, 0.5);
    Sph3 f3 = slerp(fz, f7, 0.5), f4 = slerp(fz, f8, 0.5);
    Sph3 fc5 = slerp(fcz, ft7, 0.75), fc6 = slerp(fcz, ft8, 0.75);

    MontageLayout layout;
    const std::array<Sph3, kNumChannels> pts = {af3, f7, f3, fc5, t7, p7, o1,
                                                o2, p8, t8, fc6, f4, f8, af4};
    for (std::size_t i = 0; i < kNumChannels; ++i) {
        layout.electrodes[i] = detail::project(kChannelNames[i], pts[i]);
    }
    return layout;
}

}  // namespace ssfi
