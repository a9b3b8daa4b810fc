#include "geodrift/geodesy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "geodrift/errors.hpp"

namespace geodrift {

namespace {

constexpr double kA = 6378137.0;
constexpr double kF = 1.0 / 298.257223563;
constexpr double kK0 = 0.9996;
constexpr double kFalseEasting = 500000.0;
constexpr double kFalseNorthingSouth = 10000000.0;
constexpr double kDeg = std::numbers::pi / 180.0;

struct Series {
  double n;
  double e;        // first eccentricity
  double a_rect;   // rectifying radius A
  std::array<double, 6> alpha;
  std::array<double, 6> beta;
};

const Series& series() {
  static const Series s = [] {
    Series out{};
    const double n = kF / (2.0 - kF);
    const double n2 = n * n;
    const double n3 = n2 * n;
    const double n4 = n3 * n;
    const double n5 = n4 * n;
    const double n6 = n5 * n;
    out.n = n;
    out.e = std::sqrt(kF * (2.0 - kF));
    out.a_rect = kA / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0 + n6 / 256.0);
    out.alpha = {
        n / 2.0 - 2.0 * n2 / 3.0 + 5.0 * n3 / 16.0 + 41.0 * n4 / 180.0 - 127.0 * n5 / 288.0 +
            7891.0 * n6 / 37800.0,
        13.0 * n2 / 48.0 - 3.0 * n3 / 5.0 + 557.0 * n4 / 1440.0 + 281.0 * n5 / 630.0 -
            1983433.0 * n6 / 1935360.0,
        61.0 * n3 / 240.0 - 103.0 * n4 / 140.0 + 15061.0 * n5 / 26880.0 +
            167603.0 * n6 / 181440.0,
        49561.0 * n4 / 161280.0 - 179.0 * n5 / 168.0 + 6601661.0 * n6 / 7257600.0,
        34729.0 * n5 / 80640.0 - 3418889.0 * n6 / 1995840.0,
        212378941.0 * n6 / 319334400.0,
    };
    out.beta = {
        n / 2.0 - 2.0 * n2 / 3.0 + 37.0 * n3 / 96.0 - n4 / 360.0 - 81.0 * n5 / 512.0 +
            96199.0 * n6 / 604800.0,
        n2 / 48.0 + n3 / 15.0 - 437.0 * n4 / 1440.0 + 46.0 * n5 / 105.0 -
            1118711.0 * n6 / 3870720.0,
        17.0 * n3 / 480.0 - 37.0 * n4 / 840.0 - 209.0 * n5 / 4480.0 + 5569.0 * n6 / 90720.0,
        4397.0 * n4 / 161280.0 - 11.0 * n5 / 504.0 - 830251.0 * n6 / 7257600.0,
        4583.0 * n5 / 161280.0 - 108847.0 * n6 / 3991680.0,
        20648693.0 * n6 / 638668800.0,
    };
    return out;
  }();
  return s;
}

double central_meridian(int zone) { return (zone - 1) * 6.0 - 180.0 + 3.0; }

// Northing measured from the equator, negative in the south.
double signed_northing(const UtmCoordinate& u) {
  return u.north ? u.northing : u.northing - kFalseNorthingSouth;
}

}  // namespace

int utm_zone(double latitude, double longitude) {
  double lon = std::fmod(longitude + 180.0, 360.0);
  if (lon < 0.0) lon += 360.0;
  int zone = static_cast<int>(std::floor(lon / 6.0)) + 1;
  if (zone > 60) zone = 60;
  const double l = lon - 180.0;
  if (latitude >= 56.0 && latitude < 64.0 && l >= 3.0 && l < 12.0) zone = 32;
  if (latitude >= 72.0 && latitude < 84.0) {
    if (l >= 0.0 && l < 9.0) zone = 31;
    else if (l >= 9.0 && l < 21.0) zone = 33;
    else if (l >= 21.0 && l < 33.0) zone = 35;
    else if (l >= 33.0 && l < 42.0) zone = 37;
  }
  return zone;
}

UtmCoordinate latlon_to_utm(double latitude, double longitude, std::optional<int> forced_zone) {
  if (!std::isfinite(latitude) || !std::isfinite(longitude)) {
    throw GeometryError("latlon_to_utm: non-finite coordinates");
  }
  if (std::abs(latitude) >= 84.0) {
    throw GeometryError("latlon_to_utm: latitude " + std::to_string(latitude) +
                        " is in the polar region");
  }
  const int zone = forced_zone.value_or(utm_zone(latitude, longitude));
  if (zone < 1 || zone > 60) throw GeometryError("latlon_to_utm: invalid zone");
  const Series& s = series();
  double dlon = longitude - central_meridian(zone);
  dlon = std::remainder(dlon, 360.0);
  const double phi = latitude * kDeg;
  const double lam = dlon * kDeg;

  const double sphi = std::sin(phi);
  const double t = std::sinh(std::atanh(sphi) - s.e * std::atanh(s.e * sphi));
  const double xi_p = std::atan2(t, std::cos(lam));
  const double eta_p = std::atanh(std::sin(lam) / std::sqrt(1.0 + t * t));
  double xi = xi_p;
  double eta = eta_p;
  for (int j = 1; j <= 6; ++j) {
    const double a = s.alpha[static_cast<std::size_t>(j - 1)];
    xi += a * std::sin(2.0 * j * xi_p) * std::cosh(2.0 * j * eta_p);
    eta += a * std::cos(2.0 * j * xi_p) * std::sinh(2.0 * j * eta_p);
  }
  UtmCoordinate out;
  out.zone = zone;
  out.north = latitude >= 0.0;
  out.easting = kFalseEasting + kK0 * s.a_rect * eta;
  out.northing = kK0 * s.a_rect * xi + (out.north ? 0.0 : kFalseNorthingSouth);
  return out;
}

LatLon utm_to_latlon(const UtmCoordinate& utm) {
  if (utm.zone < 1 || utm.zone > 60) {
    throw GeometryError("utm_to_latlon: invalid zone " + std::to_string(utm.zone));
  }
  if (!std::isfinite(utm.easting) || !std::isfinite(utm.northing)) {
    throw GeometryError("utm_to_latlon: non-finite coordinates");
  }
  const Series& s = series();
  const double xi = signed_northing(utm) / (kK0 * s.a_rect);
  const double eta = (utm.easting - kFalseEasting) / (kK0 * s.a_rect);
  double xi_p = xi;
  double eta_p = eta;
  for (int j = 1; j <= 6; ++j) {
    const double b = s.beta[static_cast<std::size_t>(j - 1)];
    xi_p -= b * std::sin(2.0 * j * xi) * std::cosh(2.0 * j * eta);
    eta_p -= b * std::cos(2.0 * j * xi) * std::sinh(2.0 * j * eta);
  }
  const double sinh_eta = std::sinh(eta_p);
  const double cos_xi = std::cos(xi_p);
  const double tau_p = std::sin(xi_p) / std::hypot(sinh_eta, cos_xi);
  const double lam = std::atan2(sinh_eta, cos_xi);

  // Newton iteration for tan(phi) from the conformal tan(phi').
  const double e2 = s.e * s.e;
  double tau = tau_p;
  for (int it = 0; it < 8; ++it) {
    const double sq = std::sqrt(1.0 + tau * tau);
    const double sigma = std::sinh(s.e * std::atanh(s.e * tau / sq));
    const double tau_i = tau * std::sqrt(1.0 + sigma * sigma) - sigma * sq;
    const double dtau = (tau_p - tau_i) / std::sqrt(1.0 + tau_i * tau_i) *
                        (1.0 + (1.0 - e2) * tau * tau) / ((1.0 - e2) * sq);
    tau += dtau;
    if (std::abs(dtau) < 1e-14 * std::max(1.0, std::abs(tau))) break;
  }
  LatLon out;
  out.latitude = std::atan(tau) / kDeg;
  out.longitude = std::remainder(central_meridian(utm.zone) + lam / kDeg, 360.0);
  if (std::abs(out.latitude) >= 84.0) {
    throw GeometryError("utm_to_latlon: result lies in the polar region");
  }
  return out;
}

Vector3 utm_to_world(const UtmCoordinate& utm, double height, const WorldOrigin& origin) {
  UtmCoordinate u = utm;
  if (u.zone != origin.utm.zone) {
    const LatLon ll = utm_to_latlon(u);
    u = latlon_to_utm(ll.latitude, ll.longitude, origin.utm.zone);
  }
  return Vector3(u.easting - origin.utm.easting, height - origin.height,
                 -(signed_northing(u) - signed_northing(origin.utm)));
}

UtmCoordinate world_to_utm(const Vector3& world, const WorldOrigin& origin, double* height) {
  UtmCoordinate u;
  u.zone = origin.utm.zone;
  u.easting = world.x() + origin.utm.easting;
  const double n = signed_northing(origin.utm) - world.z();
  u.north = n >= 0.0;
  u.northing = u.north ? n : n + kFalseNorthingSouth;
  if (height != nullptr) *height = world.y() + origin.height;
  return u;
}

Rot3 camera_rotation(double heading, double pitch, double roll) {
  // Forward in world axes (east, up, south).
  const Vector3 forward(std::sin(heading) * std::cos(pitch), std::sin(pitch),
                        -std::cos(heading) * std::cos(pitch));
  Vector3 right = forward.cross(Vector3::UnitY());
  if (right.norm() < 1e-12) {
    throw GeometryError("camera_rotation: pitch of +-90 degrees has no heading");
  }
  right.normalize();
  const Vector3 down = forward.cross(right);
  Matrix3 r;
  r.col(0) = right;
  r.col(1) = down;
  r.col(2) = forward;
  return Rot3::from_matrix(r) * Rot3::exp(Vector3(0.0, 0.0, roll));
}

CameraAngles camera_angles(const Rot3& rotation) {
  const Matrix3 r = rotation.matrix();
  const Vector3 f = r.col(2);
  CameraAngles out;
  out.pitch = std::asin(std::clamp(f.y(), -1.0, 1.0));
  out.heading = std::atan2(f.x(), -f.z());
  const Matrix3 rz = camera_rotation(out.heading, out.pitch, 0.0).matrix().transpose() * r;
  out.roll = std::atan2(rz(1, 0), rz(0, 0));
  return out;
}

void GeoAnchor::normalize() {
  if (latlon && utm) {
    const UtmCoordinate check = latlon_to_utm(latlon->latitude, latlon->longitude, utm->zone);
    if (std::hypot(check.easting - utm->easting, check.northing - utm->northing) > 1.0 ||
        check.north != utm->north) {
      throw DataError("geo anchor " + std::to_string(id.value) +
                      ": latitude/longitude and UTM disagree");
    }
    return;
  }
  if (latlon) {
    utm = latlon_to_utm(latlon->latitude, latlon->longitude);
  } else if (utm) {
    latlon = utm_to_latlon(*utm);
  } else {
    throw DataError("geo anchor " + std::to_string(id.value) +
                    " has neither latitude/longitude nor UTM");
  }
}

SE3 GeoAnchor::world_pose(const WorldOrigin& origin) const {
  UtmCoordinate u;
  if (utm) {
    u = *utm;
  } else if (latlon) {
    u = latlon_to_utm(latlon->latitude, latlon->longitude, origin.utm.zone);
  } else {
    throw DataError("geo anchor " + std::to_string(id.value) + " has no position");
  }
  return SE3(camera_rotation(heading.value_or(0.0), pitch.value_or(0.0), roll.value_or(0.0)),
             utm_to_world(u, height, origin));
}

}  // namespace geodrift
