#include "spim/error.hpp"

namespace spim {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::cache_miss: return "CACHE_MISS";
    case Errc::not_found: return "NOT_FOUND";
    case Errc::unauthorized: return "UNAUTHORIZED";
    case Errc::malformed: return "MALFORMED";
    case Errc::truncated: return "TRUNCATED";
    case Errc::oversize: return "OVERSIZE";
    case Errc::connection_failed: return "CONNECTION_FAILED";
    case Errc::malformed_cache_file: return "MALFORMED_CACHE_FILE";
    case Errc::render_error: return "RENDER_ERROR";
    case Errc::compose_error: return "COMPOSE_ERROR";
    case Errc::config_error: return "CONFIG_ERROR";
    case Errc::lock_held: return "LOCK_HELD";
    case Errc::contract_violation: return "CONTRACT_VIOLATION";
    case Errc::io_error: return "IO_ERROR";
  }
  return "UNKNOWN";
}

}  // namespace spim
