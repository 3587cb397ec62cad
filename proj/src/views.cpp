#include "spim/views.hpp"

#include <algorithm>
#include <charconv>
#include "json.hpp"

#include "spim/detail/xml.hpp"
#include "spim/error.hpp"

namespace spim {

namespace {

std::vector<std::string> columns_of(const ResponseEnvelope& resp) {
  std::vector<std::string> columns;
  for (const auto& rec : resp.records) {
    for (const auto& [name, _] : rec.fields) {
      if (std::find(columns.begin(), columns.end(), name) == columns.end()) columns.push_back(name);
    }
  }
  return columns;
}

// Text cells never contain a newline, a tab, two adjacent spaces, a leading
// or trailing space, or nothing at all, so column boundaries stay recoverable
// from the header. `\e` stands for an empty string, `\-` for an absent field.
constexpr std::string_view kAbsentCell = "\\-";

std::string text_escape(std::string_view s) {
  if (s.empty()) return "\\e";
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      case ' ':
        if (i == 0 || i + 1 == s.size() || s[i + 1] == ' ') {
          out += "\\s";
        } else {
          out.push_back(' ');
        }
        break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string text_unescape(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out.push_back(s[i]);
      continue;
    }
    if (++i == s.size()) throw Error(Errc::malformed, "dangling escape in text view");
    switch (s[i]) {
      case '\\': out.push_back('\\'); break;
      case 'n': out.push_back('\n'); break;
      case 'r': out.push_back('\r'); break;
      case 't': out.push_back('\t'); break;
      case 's': out.push_back(' '); break;
      case 'e': break;
      default: throw Error(Errc::malformed, "unknown escape in text view");
    }
  }
  return out;
}

std::string render_text(const ResponseEnvelope& resp) {
  std::vector<std::string> header{"key"};
  for (const auto& c : columns_of(resp)) header.push_back(text_escape(c));
  std::vector<std::vector<std::string>> rows;
  rows.reserve(resp.records.size());
  for (const auto& rec : resp.records) {
    std::vector<std::string> row{std::to_string(rec.key)};
    for (std::size_t i = 1; i < header.size(); ++i) {
      const std::string* v = nullptr;
      for (const auto& [name, value] : rec.fields) {
        if (text_escape(name) == header[i]) {
          v = &value;
          break;
        }
      }
      row.push_back(v != nullptr ? text_escape(*v) : std::string(kAbsentCell));
    }
    rows.push_back(std::move(row));
  }

  std::vector<std::size_t> width(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }

  std::string out;
  auto emit = [&](const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      line += cells[i];
      if (i + 1 < cells.size()) line.append(width[i] - cells[i].size() + 2, ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line;
    out += '\n';
  };
  emit(header);
  for (const auto& row : rows) emit(row);
  return out;
}

std::string render_html(const ResponseEnvelope& resp) {
  auto columns = columns_of(resp);
  std::string out = "<table><thead><tr><th>key</th>";
  for (const auto& c : columns) out += "<th>" + xml_escape(c) + "</th>";
  out += "</tr></thead><tbody>";
  for (const auto& rec : resp.records) {
    out += "<tr><td>" + std::to_string(rec.key) + "</td>";
    for (const auto& c : columns) {
      if (const std::string* v = rec.field(c)) {
        out += "<td>" + xml_escape(*v) + "</td>";
      } else {
        out += "<td class=\"absent\"></td>";
      }
    }
    out += "</tr>";
  }
  out += "</tbody></table>\n";
  return out;
}

std::string render_json(const ResponseEnvelope& resp) {
  auto array = nlohmann::ordered_json::array();
  for (const auto& rec : resp.records) {
    nlohmann::ordered_json fields = nlohmann::ordered_json::object();
    for (const auto& [name, value] : rec.fields) fields[name] = value;
    array.push_back({{"key", rec.key}, {"fields", std::move(fields)}});
  }
  return array.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace) + "\n";
}

std::uint64_t parse_key(std::string_view s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw Error(Errc::malformed, "bad key '" + std::string(s) + "'");
  }
  return v;
}

std::vector<Triple> extract_text(std::string_view rendered) {
  std::vector<std::string_view> lines;
  while (!rendered.empty()) {
    auto nl = rendered.find('\n');
    lines.push_back(rendered.substr(0, nl));
    rendered = nl == std::string_view::npos ? std::string_view{} : rendered.substr(nl + 1);
  }
  if (lines.empty()) throw Error(Errc::malformed, "empty text view");

  // Column starts: header cells are separated by runs of two or more spaces.
  std::string_view header = lines.front();
  std::vector<std::size_t> starts;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < header.size();) {
    starts.push_back(i);
    auto gap = header.find("  ", i);
    std::string_view cell = header.substr(i, gap == std::string_view::npos ? std::string_view::npos : gap - i);
    names.push_back(text_unescape(cell));
    if (gap == std::string_view::npos) break;
    i = header.find_first_not_of(' ', gap);
    if (i == std::string_view::npos) break;
  }
  if (names.empty() || names.front() != "key") throw Error(Errc::malformed, "text view header must start with key");

  std::vector<Triple> out;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    std::string_view line = lines[li];
    std::vector<std::string> cells;
    for (std::size_t c = 0; c < starts.size(); ++c) {
      std::size_t begin = std::min(starts[c], line.size());
      std::size_t end = c + 1 < starts.size() ? std::min(starts[c + 1], line.size()) : line.size();
      std::string_view cell = line.substr(begin, end - begin);
      while (!cell.empty() && cell.back() == ' ') cell.remove_suffix(1);
      cells.emplace_back(cell);
    }
    std::uint64_t key = parse_key(cells.front());
    for (std::size_t c = 1; c < cells.size(); ++c) {
      if (cells[c] == kAbsentCell) continue;
      out.push_back({key, names[c], text_unescape(cells[c])});
    }
  }
  return out;
}

std::vector<Triple> extract_html(std::string_view rendered) {
  detail::XmlElement table = detail::parse_xml(rendered);
  if (table.name != "table" || table.children.size() != 2) throw Error(Errc::malformed, "expected <table>");
  const auto& thead = table.children[0];
  const auto& tbody = table.children[1];
  if (thead.name != "thead" || tbody.name != "tbody" || thead.children.size() != 1) {
    throw Error(Errc::malformed, "expected <thead> and <tbody>");
  }
  std::vector<std::string> names;
  for (const auto& th : thead.children.front().children) names.push_back(th.text);
  std::vector<Triple> out;
  for (const auto& tr : tbody.children) {
    if (tr.children.size() != names.size()) throw Error(Errc::malformed, "row width differs from header");
    std::uint64_t key = parse_key(tr.children.front().text);
    for (std::size_t c = 1; c < names.size(); ++c) {
      const auto& td = tr.children[c];
      const std::string* cls = td.attribute("class");
      if (cls != nullptr && *cls == "absent") continue;
      out.push_back({key, names[c], td.text});
    }
  }
  return out;
}

std::vector<Triple> extract_json(std::string_view rendered) {
  std::vector<Triple> out;
  try {
    auto array = nlohmann::ordered_json::parse(rendered);
    for (const auto& item : array) {
      std::uint64_t key = item.at("key").get<std::uint64_t>();
      for (const auto& [name, value] : item.at("fields").items()) out.push_back({key, name, value.get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::malformed, e.what());
  }
  return out;
}

}  // namespace

std::string_view to_string(RenderKind k) noexcept {
  switch (k) {
    case RenderKind::text: return "text";
    case RenderKind::html: return "html";
    case RenderKind::json: return "json";
  }
  return "text";
}

RenderKind parse_render_kind(std::string_view text) {
  if (text == "text") return RenderKind::text;
  if (text == "html") return RenderKind::html;
  if (text == "json") return RenderKind::json;
  throw Error(Errc::config_error, "render must be text, html or json, got '" + std::string(text) + "'");
}

std::string render(const ResponseEnvelope& resp, RenderKind kind) {
  if (!resp.ok()) throw Error(Errc::render_error, "cannot render an ERROR response (" + std::string(to_string(resp.error_code)) + ")");
  switch (kind) {
    case RenderKind::text: return render_text(resp);
    case RenderKind::html: return render_html(resp);
    case RenderKind::json: return render_json(resp);
  }
  return {};
}

ResponseEnvelope compose(const std::vector<ComposePart>& parts) {
  ResponseEnvelope merged = ResponseEnvelope::success("", Source::cache, {});
  std::string id;
  for (const auto& part : parts) {
    if (!part.response.ok()) {
      throw Error(Errc::compose_error, "part '" + part.label + "' is an ERROR response");
    }
    if (!id.empty()) id += '+';
    id += part.label;
    if (part.response.source == Source::store) merged.source = Source::store;
    for (Record rec : part.response.records) {
      auto it = std::find_if(rec.fields.begin(), rec.fields.end(), [](const auto& f) { return f.first == kSourceField; });
      if (it != rec.fields.end()) {
        it->second = part.label;
      } else {
        rec.fields.emplace_back(std::string(kSourceField), part.label);
      }
      merged.records.push_back(std::move(rec));
    }
  }
  merged.request_id = std::move(id);
  return merged;
}

std::vector<Triple> triples_of(const ResponseEnvelope& resp) {
  std::vector<Triple> out;
  for (const auto& rec : resp.records) {
    for (const auto& [name, value] : rec.fields) out.push_back({rec.key, name, value});
  }
  return out;
}

std::vector<Triple> extract_triples(std::string_view rendered, RenderKind kind) {
  switch (kind) {
    case RenderKind::text: return extract_text(rendered);
    case RenderKind::html: return extract_html(rendered);
    case RenderKind::json: return extract_json(rendered);
  }
  return {};
}

}  // namespace spim
