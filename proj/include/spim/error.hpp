#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spim {

enum class Errc {
  cache_miss,
  not_found,
  unauthorized,
  malformed,
  truncated,
  oversize,
  connection_failed,
  malformed_cache_file,
  render_error,
  compose_error,
  config_error,
  lock_held,
  contract_violation,
  io_error,
};

std::string_view to_string(Errc code) noexcept;

/// Exception type used across the library. The code is what callers branch on;
/// the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace spim
