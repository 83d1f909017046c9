#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hss {

enum class ErrorCode {
  invalid_params,
  zero_inverse,
  field_mismatch,
  duplicate_abscissa,
  zero_abscissa,
  off_curve,
  parent_inactive,
  tree_full,
  empty_hierarchy,
  unknown_user,
  already_inactive,
  position_occupied,
  inactive_node,
  invalid_threshold_factor,
  inactive_subtree,
  eval_point_collision,
  insufficient_shares,
  stale_epoch,
  mixed_epochs,
  no_children,
  epoch_skew,
  unverified_bundle,
  mixed_accused,
  config_error,
  version_mismatch,
  corrupt_snapshot,
  not_at_epoch_boundary,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_params: return "InvalidParams";
    case ErrorCode::zero_inverse: return "ZeroInverse";
    case ErrorCode::field_mismatch: return "FieldMismatch";
    case ErrorCode::duplicate_abscissa: return "DuplicateAbscissa";
    case ErrorCode::zero_abscissa: return "ZeroAbscissa";
    case ErrorCode::off_curve: return "OffCurve";
    case ErrorCode::parent_inactive: return "ParentInactive";
    case ErrorCode::tree_full: return "TreeFull";
    case ErrorCode::empty_hierarchy: return "EmptyHierarchy";
    case ErrorCode::unknown_user: return "UnknownUser";
    case ErrorCode::already_inactive: return "AlreadyInactive";
    case ErrorCode::position_occupied: return "PositionOccupied";
    case ErrorCode::inactive_node: return "InactiveNode";
    case ErrorCode::invalid_threshold_factor: return "InvalidThresholdFactor";
    case ErrorCode::inactive_subtree: return "InactiveSubtree";
    case ErrorCode::eval_point_collision: return "EvalPointCollision";
    case ErrorCode::insufficient_shares: return "InsufficientShares";
    case ErrorCode::stale_epoch: return "StaleEpoch";
    case ErrorCode::mixed_epochs: return "MixedEpochs";
    case ErrorCode::no_children: return "NoChildren";
    case ErrorCode::epoch_skew: return "EpochSkew";
    case ErrorCode::unverified_bundle: return "UnverifiedBundle";
    case ErrorCode::mixed_accused: return "MixedAccused";
    case ErrorCode::config_error: return "ConfigError";
    case ErrorCode::version_mismatch: return "VersionMismatch";
    case ErrorCode::corrupt_snapshot: return "CorruptSnapshot";
    case ErrorCode::not_at_epoch_boundary: return "NotAtEpochBoundary";
  }
  return "Unknown";
}

/// Base exception for every failure raised by the library. The code is what
/// callers and tests dispatch on; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hss
