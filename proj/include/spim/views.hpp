#pragma once

// Client views: the same OK response rendered as a text table, an HTML table
// or JSON, and composition of several responses into one (a mashup).

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spim/wire.hpp"

namespace spim {

enum class RenderKind { text, html, json };

std::string_view to_string(RenderKind k) noexcept;
/// Throws Errc::config_error.
RenderKind parse_render_kind(std::string_view text);

/// Throws Errc::render_error for an ERROR response.
std::string render(const ResponseEnvelope& resp, RenderKind kind);

/// Field added to every composed record, naming the service it came from.
inline constexpr std::string_view kSourceField = "_source";

struct ComposePart {
  std::string label;
  ResponseEnvelope response;
};

/// Concatenates the parts' records in order, tagging each with `_source`.
/// Duplicate keys across parts are kept. Throws Errc::compose_error if any
/// part is an ERROR.
ResponseEnvelope compose(const std::vector<ComposePart>& parts);

/// (key, field, value), the content every renderer must preserve.
struct Triple {
  std::uint64_t key;
  std::string field;
  std::string value;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

std::vector<Triple> triples_of(const ResponseEnvelope& resp);

/// Reads triples back out of rendered output. Used to check renderer
/// fidelity; throws Errc::malformed if the output is not what `render` emits.
std::vector<Triple> extract_triples(std::string_view rendered, RenderKind kind);

}  // namespace spim
