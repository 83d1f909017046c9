#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hss/bigint.hpp"
#include "hss/error.hpp"
#include "hss/rng.hpp"

namespace hss {

/// The prime field shares and renewal values live in.
struct FieldParams {
  BigInt modulus;
};

using FieldRef = std::shared_ptr<const FieldParams>;

/// Builds a field after checking the modulus is a prime greater than 2.
inline FieldRef make_field(const BigInt& modulus) {
  if (modulus <= 2) {
    throw Error(ErrorCode::invalid_params, "field modulus must exceed 2, got " + modulus.str());
  }
  if (!is_prime(modulus)) {
    throw Error(ErrorCode::invalid_params, "field modulus is not prime: " + modulus.str());
  }
  return std::make_shared<const FieldParams>(FieldParams{modulus});
}

inline bool same_field(const FieldRef& a, const FieldRef& b) {
  return a == b || (a && b && a->modulus == b->modulus);
}

class FieldElement {
 public:
  FieldElement(FieldRef field, const BigInt& value)
      : field_(std::move(field)), value_(mod_floor(value, field_->modulus)) {}

  static FieldElement zero(const FieldRef& field) { return {field, 0}; }
  static FieldElement one(const FieldRef& field) { return {field, 1}; }

  const BigInt& value() const noexcept { return value_; }
  const FieldRef& field() const noexcept { return field_; }
  const BigInt& modulus() const noexcept { return field_->modulus; }
  bool is_zero() const noexcept { return value_ == 0; }

  FieldElement operator+(const FieldElement& rhs) const {
    check(rhs);
    BigInt sum = value_ + rhs.value_;
    if (sum >= modulus()) sum -= modulus();
    return FieldElement(field_, std::move(sum), raw_tag{});
  }

  FieldElement operator-(const FieldElement& rhs) const {
    check(rhs);
    BigInt diff = value_ - rhs.value_;
    if (diff < 0) diff += modulus();
    return FieldElement(field_, std::move(diff), raw_tag{});
  }

  FieldElement operator-() const {
    return FieldElement(field_, value_ == 0 ? BigInt(0) : BigInt(modulus() - value_), raw_tag{});
  }

  FieldElement operator*(const FieldElement& rhs) const {
    check(rhs);
    return FieldElement(field_, BigInt((value_ * rhs.value_) % modulus()), raw_tag{});
  }

  FieldElement& operator+=(const FieldElement& rhs) { return *this = *this + rhs; }
  FieldElement& operator-=(const FieldElement& rhs) { return *this = *this - rhs; }
  FieldElement& operator*=(const FieldElement& rhs) { return *this = *this * rhs; }

  FieldElement pow(const BigInt& exponent) const {
    return FieldElement(field_, boost::multiprecision::powm(value_, exponent, modulus()), raw_tag{});
  }

  /// Equality compares value and field; elements of different fields are
  /// never equal (and never throw here).
  friend bool operator==(const FieldElement& a, const FieldElement& b) {
    return a.value_ == b.value_ && same_field(a.field_, b.field_);
  }

 private:
  struct raw_tag {};
  FieldElement(FieldRef field, BigInt value, raw_tag) : field_(std::move(field)), value_(std::move(value)) {}

  void check(const FieldElement& rhs) const {
    if (!same_field(field_, rhs.field_)) {
      throw Error(ErrorCode::field_mismatch,
                  "operands from F_" + modulus().str() + " and F_" + rhs.modulus().str());
    }
  }

  FieldRef field_;
  BigInt value_;
};

/// Multiplicative inverse; ZeroInverse for a == 0.
inline FieldElement field_inverse(const FieldElement& a) {
  if (a.is_zero()) {
    throw Error(ErrorCode::zero_inverse, "zero has no inverse in F_" + a.modulus().str());
  }
  return {a.field(), mod_inverse(a.value(), a.modulus())};
}

/// Coefficient h of the list is the coefficient of x^h.
class Polynomial {
 public:
  explicit Polynomial(std::vector<FieldElement> coefficients) : coefficients_(std::move(coefficients)) {
    if (coefficients_.empty()) {
      throw Error(ErrorCode::invalid_params, "polynomial needs at least one coefficient");
    }
    for (const auto& c : coefficients_) {
      if (!same_field(c.field(), coefficients_.front().field())) {
        throw Error(ErrorCode::field_mismatch, "polynomial coefficients from different fields");
      }
    }
  }

  std::size_t degree() const noexcept { return coefficients_.size() - 1; }
  const FieldElement& coefficient(std::size_t h) const { return coefficients_.at(h); }
  std::span<const FieldElement> coefficients() const noexcept { return coefficients_; }
  const FieldRef& field() const noexcept { return coefficients_.front().field(); }

  friend bool operator==(const Polynomial&, const Polynomial&) = default;

 private:
  std::vector<FieldElement> coefficients_;
};

/// Horner evaluation.
inline FieldElement poly_eval(const Polynomial& q, const FieldElement& x) {
  if (!same_field(q.field(), x.field())) {
    throw Error(ErrorCode::field_mismatch, "evaluation point is not in the polynomial's field");
  }
  const auto coeffs = q.coefficients();
  FieldElement acc = coeffs.back();
  for (std::size_t h = coeffs.size() - 1; h-- > 0;) {
    acc = acc * x + coeffs[h];
  }
  return acc;
}

/// Random polynomial of the given degree with q(0) = free_coeff. The higher
/// coefficients are independent and uniform over the whole field, zero
/// included: conditioning the leading coefficient to be nonzero would let
/// k shares rule out one candidate secret.
inline Polynomial sample_polynomial(Rng& rng, std::size_t degree, const FieldElement& free_coeff) {
  std::vector<FieldElement> coeffs;
  coeffs.reserve(degree + 1);
  coeffs.push_back(free_coeff);
  for (std::size_t h = 1; h <= degree; ++h) {
    coeffs.emplace_back(free_coeff.field(), rng.uniform_below(free_coeff.modulus()));
  }
  return Polynomial(std::move(coeffs));
}

struct InterpolationPoint {
  FieldElement x;
  FieldElement y;
};

/// Value at zero of the unique polynomial of degree < points.size() through
/// the given points.
inline FieldElement lagrange_at_zero(std::span<const InterpolationPoint> points) {
  if (points.empty()) {
    throw Error(ErrorCode::invalid_params, "interpolation needs at least one point");
  }
  const FieldRef& field = points.front().x.field();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].x.is_zero()) {
      throw Error(ErrorCode::zero_abscissa, "abscissa 0 is not a valid evaluation point");
    }
    if (!same_field(points[i].x.field(), field) || !same_field(points[i].y.field(), field)) {
      throw Error(ErrorCode::field_mismatch, "interpolation points from different fields");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (points[i].x == points[j].x) {
        throw Error(ErrorCode::duplicate_abscissa, "abscissa " + points[i].x.value().str() + " repeated");
      }
    }
  }

  // L_i(0) = prod_{j != i} x_j / (x_j - x_i); one inversion for the whole sum.
  std::vector<FieldElement> numerators, denominators;
  numerators.reserve(points.size());
  denominators.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    FieldElement num = FieldElement::one(field);
    FieldElement den = FieldElement::one(field);
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (j == i) continue;
      num *= points[j].x;
      den *= points[j].x - points[i].x;
    }
    numerators.push_back(std::move(num));
    denominators.push_back(std::move(den));
  }
  FieldElement common = FieldElement::one(field);
  for (const auto& d : denominators) common *= d;
  const FieldElement common_inv = field_inverse(common);

  FieldElement acc = FieldElement::zero(field);
  for (std::size_t i = 0; i < points.size(); ++i) {
    FieldElement others = FieldElement::one(field);
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (j != i) others *= denominators[j];
    }
    acc += points[i].y * numerators[i] * others * common_inv;
  }
  return acc;
}

}  // namespace hss
