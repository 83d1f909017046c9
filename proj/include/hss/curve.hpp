#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hss/algebra.hpp"
#include "hss/bigint.hpp"
#include "hss/error.hpp"

namespace hss {

/// Short Weierstrass curve y^2 = x^3 + a x + b over F_p with a base point of
/// prime order.
struct CurveParams {
  std::string name;
  BigInt p;
  BigInt a;
  BigInt b;
  BigInt gx;
  BigInt gy;
  BigInt order;

  friend bool operator==(const CurveParams&, const CurveParams&) = default;
};

/// Affine point or the point at infinity.
class CurvePoint {
 public:
  CurvePoint() = default;  // identity
  CurvePoint(BigInt x, BigInt y) : affine_(true), x_(std::move(x)), y_(std::move(y)) {}

  static CurvePoint identity() { return {}; }

  bool is_identity() const noexcept { return !affine_; }
  const BigInt& x() const { return x_; }
  const BigInt& y() const { return y_; }

  friend bool operator==(const CurvePoint& a, const CurvePoint& b) {
    if (a.affine_ != b.affine_) return false;
    return !a.affine_ || (a.x_ == b.x_ && a.y_ == b.y_);
  }

 private:
  bool affine_ = false;
  BigInt x_;
  BigInt y_;
};

/// Group operations on one curve. Inputs are checked for curve membership
/// and rejected with OffCurve.
class Curve {
 public:
  explicit Curve(CurveParams params)
      : params_(std::move(params)), generator_(params_.gx, params_.gy), scalars_(make_scalar_field(params_.order)) {}

  const CurveParams& params() const noexcept { return params_; }
  const CurvePoint& generator() const noexcept { return generator_; }
  const BigInt& order() const noexcept { return params_.order; }

  /// The field Z/ord(G): every share, renewal value and key scalar lives here.
  const FieldRef& scalar_field() const noexcept { return scalars_; }

  bool contains(const CurvePoint& point) const {
    if (point.is_identity()) return true;
    const BigInt& p = params_.p;
    if (point.x() < 0 || point.x() >= p || point.y() < 0 || point.y() >= p) return false;
    const BigInt lhs = (point.y() * point.y()) % p;
    const BigInt rhs = mod_floor(point.x() * point.x() * point.x() + params_.a * point.x() + params_.b, p);
    return lhs == rhs;
  }

  CurvePoint negate(const CurvePoint& point) const {
    require_on_curve(point);
    if (point.is_identity()) return point;
    return {point.x(), point.y() == 0 ? BigInt(0) : BigInt(params_.p - point.y())};
  }

  CurvePoint add(const CurvePoint& lhs, const CurvePoint& rhs) const {
    require_on_curve(lhs);
    require_on_curve(rhs);
    return add_unchecked(lhs, rhs);
  }

  /// Double-and-add, most significant bit first. The scalar is used as
  /// given, without reduction, so order() * G comes out as the identity.
  CurvePoint multiply(const BigInt& scalar, const CurvePoint& point) const {
    require_on_curve(point);
    if (scalar < 0) {
      return multiply_unchecked(-scalar, negate(point));
    }
    return multiply_unchecked(scalar, point);
  }

  CurvePoint multiply(const FieldElement& scalar, const CurvePoint& point) const {
    if (scalar.modulus() != params_.order) {
      throw Error(ErrorCode::field_mismatch, "scalar is not reduced modulo the base-point order");
    }
    return multiply(scalar.value(), point);
  }

  CurvePoint multiply_generator(const FieldElement& scalar) const { return multiply(scalar, generator_); }

 private:
  static FieldRef make_scalar_field(const BigInt& order) {
    // Validation of primality is validate_curve()'s job; a composite order
    // still gets a ring here so that the validator can report on it.
    return std::make_shared<const FieldParams>(FieldParams{order});
  }

  void require_on_curve(const CurvePoint& point) const {
    if (!contains(point)) {
      throw Error(ErrorCode::off_curve,
                  "(" + point.x().str() + ", " + point.y().str() + ") is not on curve " + params_.name);
    }
  }

  CurvePoint add_unchecked(const CurvePoint& lhs, const CurvePoint& rhs) const {
    if (lhs.is_identity()) return rhs;
    if (rhs.is_identity()) return lhs;
    const BigInt& p = params_.p;
    BigInt slope;
    if (lhs.x() == rhs.x()) {
      if (mod_floor(lhs.y() + rhs.y(), p) == 0) return CurvePoint::identity();
      slope = mod_floor((3 * lhs.x() * lhs.x() + params_.a) * mod_inverse(2 * lhs.y(), p), p);
    } else {
      slope = mod_floor((rhs.y() - lhs.y()) * mod_inverse(rhs.x() - lhs.x(), p), p);
    }
    BigInt x = mod_floor(slope * slope - lhs.x() - rhs.x(), p);
    BigInt y = mod_floor(slope * (lhs.x() - x) - lhs.y(), p);
    return {std::move(x), std::move(y)};
  }

  // Jacobian coordinates (X, Y, Z) stand for (X/Z^2, Y/Z^3); Z = 0 is the
  // identity. Used inside multiply() so only one inversion is needed.
  struct Jacobian {
    BigInt x, y, z;
  };

  Jacobian jacobian_double(const Jacobian& p) const {
    const BigInt& m = params_.p;
    if (p.z == 0 || p.y == 0) return {1, 1, 0};
    const BigInt yy = (p.y * p.y) % m;
    const BigInt s = (4 * p.x * yy) % m;
    const BigInt zz = (p.z * p.z) % m;
    const BigInt slope = mod_floor(3 * p.x * p.x + params_.a * ((zz * zz) % m), m);
    BigInt x = mod_floor(slope * slope - 2 * s, m);
    BigInt y = mod_floor(slope * (s - x) - 8 * ((yy * yy) % m), m);
    BigInt z = (2 * p.y * p.z) % m;
    return {std::move(x), std::move(y), std::move(z)};
  }

  // p + q with q affine and not the identity.
  Jacobian jacobian_add_affine(const Jacobian& p, const CurvePoint& q) const {
    const BigInt& m = params_.p;
    if (p.z == 0) return {q.x(), q.y(), 1};
    const BigInt zz = (p.z * p.z) % m;
    const BigInt u = (q.x() * zz) % m;
    const BigInt s = (q.y() * ((zz * p.z) % m)) % m;
    const BigInt h = mod_floor(u - p.x, m);
    const BigInt r = mod_floor(s - p.y, m);
    if (h == 0) return r == 0 ? jacobian_double(p) : Jacobian{1, 1, 0};
    const BigInt hh = (h * h) % m;
    const BigInt hhh = (hh * h) % m;
    const BigInt v = (p.x * hh) % m;
    BigInt x = mod_floor(r * r - hhh - 2 * v, m);
    BigInt y = mod_floor(r * (v - x) - p.y * hhh, m);
    BigInt z = (p.z * h) % m;
    return {std::move(x), std::move(y), std::move(z)};
  }

  CurvePoint multiply_unchecked(const BigInt& scalar, const CurvePoint& point) const {
    if (scalar == 0 || point.is_identity()) return CurvePoint::identity();
    Jacobian acc{1, 1, 0};
    for (std::size_t bit = boost::multiprecision::msb(scalar) + 1; bit-- > 0;) {
      acc = jacobian_double(acc);
      if (boost::multiprecision::bit_test(scalar, static_cast<unsigned>(bit))) {
        acc = jacobian_add_affine(acc, point);
      }
    }
    if (acc.z == 0) return CurvePoint::identity();
    const BigInt& m = params_.p;
    const BigInt zi = mod_inverse(acc.z, m);
    const BigInt zi2 = (zi * zi) % m;
    return {(acc.x * zi2) % m, (acc.y * ((zi2 * zi) % m)) % m};
  }

  CurveParams params_;
  CurvePoint generator_;
  FieldRef scalars_;
};

struct CurveValidation {
  bool valid = true;
  std::vector<std::string> failures;
};

/// Itemized validity check; never throws on bad parameters.
inline CurveValidation validate_curve(const CurveParams& params) {
  CurveValidation report;
  auto fail = [&report](std::string what) {
    report.valid = false;
    report.failures.push_back(std::move(what));
  };

  if (params.p <= 3 || !is_prime(params.p)) {
    fail("field modulus p is not a prime greater than 3");
    return report;
  }
  const BigInt& p = params.p;
  const BigInt disc = mod_floor(4 * params.a * params.a * params.a + 27 * params.b * params.b, p);
  if (disc == 0) fail("singular curve: 4a^3 + 27b^2 = 0 mod p");
  if (params.order <= 2 || !is_prime(params.order)) fail("base point order is not prime");

  if (params.order <= 0) {
    fail("base point order must be positive");
    return report;
  }
  const Curve curve(params);
  if (!curve.contains(curve.generator())) {
    fail("G is not on the curve");
    return report;
  }
  if (!curve.multiply(params.order, curve.generator()).is_identity()) {
    fail("order * G is not the identity");
  }
  return report;
}

/// y^2 = x^3 + 2x + 2 over F_17; G = (5, 1) generates all 19 points.
inline CurveParams toy_curve() { return {"toy", 17, 2, 2, 5, 1, 19}; }

/// y^2 = x^3 + 3x + 7 over a 25-bit prime with prime group order; large
/// enough for trees of a few thousand nodes, small enough for fast tests.
inline CurveParams small_curve() { return {"small", 16777259, 3, 7, 4, 4959278, 16773749}; }

/// secp256k1.
inline CurveParams standard_curve() {
  return {"standard",
          BigInt("0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F"),
          0,
          7,
          BigInt("0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798"),
          BigInt("0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8"),
          BigInt("0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141")};
}

inline std::optional<CurveParams> curve_profile(std::string_view name) {
  if (name == "toy") return toy_curve();
  if (name == "small") return small_curve();
  if (name == "standard") return standard_curve();
  return std::nullopt;
}

}  // namespace hss
