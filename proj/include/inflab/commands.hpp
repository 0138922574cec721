#pragma once

#include "inflab/serialize.hpp"

#include <string>

namespace inflab {

enum class ExitStatus { ok = 0, precondition = 2, numerical = 3, internal = 4 };

struct CommandResult {
  ExitStatus status = ExitStatus::ok;
  json report;
  /// CSV rendering when the command has one, empty otherwise.
  std::string csv;
  /// Set when status is not ok: {"error", "message", "field"}.
  json error;
};

/// Runs one experiment config. Never throws; failures are reported through
/// `status` and `error`. A numerical failure still carries the partial report.
CommandResult run_command(const ExperimentConfig& config);

/// Error object for the diagnostic stream.
json error_object(ExitStatus status, const std::string& message, const std::string& field = {});

}  // namespace inflab
