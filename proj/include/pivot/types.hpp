#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace pivot {

using Real = double;
using Vec2 = Eigen::Matrix<Real, 2, 1>;
using Vec3 = Eigen::Matrix<Real, 3, 1>;
using Vec4 = Eigen::Matrix<Real, 4, 1>;
using Mat2 = Eigen::Matrix<Real, 2, 2>;
using Mat3 = Eigen::Matrix<Real, 3, 3>;
using VecX = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using MatX = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using MatX2 = Eigen::Matrix<Real, Eigen::Dynamic, 2>;
using MatX3 = Eigen::Matrix<Real, Eigen::Dynamic, 3>;  // rows are points, mm
using MatX3i = Eigen::Matrix<int, Eigen::Dynamic, 3>;
using Quat = Eigen::Quaternion<Real>;

inline constexpr Real kPi = 3.14159265358979323846;

inline Real deg2rad(Real d) { return d * kPi / 180.0; }
inline Real rad2deg(Real r) { return r * 180.0 / kPi; }

/// Wrap an angle to (-pi, pi].
inline Real wrap_angle(Real a) {
  a = std::fmod(a, 2 * kPi);
  if (a <= -kPi) a += 2 * kPi;
  if (a > kPi) a -= 2 * kPi;
  return a;
}

/// Rigid transform: world point = orientation * local point + position.
struct Pose {
  Quat orientation{1, 0, 0, 0};
  Vec3 position{0, 0, 0};

  Vec3 apply(const Vec3& p) const { return orientation * p + position; }
  Vec3 rotate(const Vec3& v) const { return orientation * v; }

  Pose compose(const Pose& rhs) const {
    return Pose{(orientation * rhs.orientation).normalized(),
                orientation * rhs.position + position};
  }
  Pose inverse() const {
    Quat qi = orientation.conjugate();
    return Pose{qi, qi * (-position)};
  }
};

/// Geodesic angle between two orientations, in [0, pi].
inline Real orientation_distance(const Quat& a, const Quat& b) {
  Real d = std::min<Real>(1.0, std::abs(a.dot(b)));
  return 2 * std::acos(d);
}

/// Closed interval of angles, radians.
struct AngleInterval {
  Real lo = 0;
  Real hi = 0;
  bool contains(Real a, Real tol = 0) const { return a >= lo - tol && a <= hi + tol; }
  Real width() const { return hi - lo; }
};

// ---------------------------------------------------------------------------
// Error types. All derive from std::runtime_error; catch by concrete type.
// ---------------------------------------------------------------------------

#define PIVOT_DEFINE_ERROR(Name)                      \
  struct Name : std::runtime_error {                  \
    explicit Name(const std::string& what_arg)        \
        : std::runtime_error(#Name ": " + what_arg) {} \
  }

PIVOT_DEFINE_ERROR(ParseError);
PIVOT_DEFINE_ERROR(DegenerateMesh);
PIVOT_DEFINE_ERROR(NoGraspFound);
PIVOT_DEFINE_ERROR(NoStablePlacement);
PIVOT_DEFINE_ERROR(EmptyRange);
PIVOT_DEFINE_ERROR(DegenerateFrame);
PIVOT_DEFINE_ERROR(ConeDegenerate);
PIVOT_DEFINE_ERROR(BoundaryCase);
PIVOT_DEFINE_ERROR(EmptyIntersection);
PIVOT_DEFINE_ERROR(DimensionMismatch);
PIVOT_DEFINE_ERROR(NotPSD);
PIVOT_DEFINE_ERROR(ModelMismatch);
PIVOT_DEFINE_ERROR(IOError);

#undef PIVOT_DEFINE_ERROR

}  // namespace pivot
