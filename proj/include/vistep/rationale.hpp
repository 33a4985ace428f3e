#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "vistep/interpreter.hpp"

namespace vistep::rationale {

struct Options {
  int thumb_max = 256;
  const Registry* registry = nullptr;  // adds per-module captions when given
};

/// Self-contained HTML document: one `<section class="cell">` per trace, in
/// step order, images inlined as PNG data URIs. Byte-for-byte deterministic.
std::string render_html(const RunRecord& run, const Options& options = {});

/// Same structure as the document, for programmatic clients.
nlohmann::json render_sidecar(const RunRecord& run, const Options& options = {});

std::string escape_html(std::string_view text);

}  // namespace vistep::rationale
