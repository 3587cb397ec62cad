#pragma once

// XML request/response documents exchanged between the client controller and
// the server controller, plus the length-prefixed framing that carries them.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace spim {

/// Inclusive key range over one named table.
struct Query {
  std::string table;
  std::uint64_t key_from = 0;
  std::uint64_t key_to = 0;

  /// Canonical cache key, `table:from:to`.
  std::string canonical_key() const;
  static std::optional<Query> from_canonical_key(std::string_view key);

  bool valid() const noexcept;

  friend bool operator==(const Query&, const Query&) = default;
};

bool is_valid_table_name(std::string_view name) noexcept;

struct Record {
  std::uint64_t key = 0;
  std::vector<std::pair<std::string, std::string>> fields;

  const std::string* field(std::string_view name) const noexcept;

  friend bool operator==(const Record&, const Record&) = default;
};

struct RequestEnvelope {
  std::string request_id;
  std::string client_id;
  std::string token;
  Query query;

  friend bool operator==(const RequestEnvelope&, const RequestEnvelope&) = default;
};

enum class Status { ok, error };
enum class Source { cache, store, none };
enum class ErrorCode { none, cache_miss, not_found, unauthorized, malformed };

std::string_view to_string(Status s) noexcept;
std::string_view to_string(Source s) noexcept;
std::string_view to_string(ErrorCode c) noexcept;

struct ResponseEnvelope {
  std::string request_id;
  Status status = Status::ok;
  Source source = Source::none;
  ErrorCode error_code = ErrorCode::none;
  std::vector<Record> records;

  static ResponseEnvelope success(std::string request_id, Source source, std::vector<Record> records);
  static ResponseEnvelope failure(std::string request_id, ErrorCode code);

  bool ok() const noexcept { return status == Status::ok; }

  /// Checks the status/source/code coupling and key uniqueness.
  bool valid() const noexcept;

  friend bool operator==(const ResponseEnvelope&, const ResponseEnvelope&) = default;
};

std::string encode_request(const RequestEnvelope& req);
std::string encode_response(const ResponseEnvelope& resp);

/// Both throw spim::Error(Errc::malformed) on any input that is not an image
/// of the matching encoder.
RequestEnvelope decode_request(std::string_view doc);
ResponseEnvelope decode_response(std::string_view doc);

/// Escapes `& < > " '`.
std::string xml_escape(std::string_view text);

// ---------------------------------------------------------------------------
// Framing: 4-byte big-endian length followed by the payload.

inline constexpr std::size_t kDefaultMaxFrame = std::size_t{64} << 20;

std::string frame(std::string_view doc);

struct Deframed {
  std::string payload;
  std::size_t consumed = 0;
};

/// Reads exactly one frame from the front of `stream`.
/// Throws Errc::truncated if the stream ends mid-frame, Errc::oversize if the
/// declared length exceeds `max_len`.
Deframed deframe(std::string_view stream, std::size_t max_len = kDefaultMaxFrame);

/// Incremental deframer for byte streams that arrive in arbitrary chunks.
class StreamDeframer {
 public:
  explicit StreamDeframer(std::size_t max_len = kDefaultMaxFrame) : max_len_(max_len) {}

  void feed(std::string_view bytes) { buffer_.append(bytes); }

  /// Next complete payload, or nullopt if more bytes are needed.
  /// Throws Errc::oversize as soon as an oversized header is seen.
  std::optional<std::string> next();

  /// Call at end of stream; throws Errc::truncated if a partial frame remains.
  void finish() const;

  std::size_t buffered() const noexcept { return buffer_.size() - offset_; }

 private:
  std::string buffer_;
  std::size_t offset_ = 0;
  std::size_t max_len_;
};

}  // namespace spim
