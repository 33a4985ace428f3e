#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vistep/backend.hpp"
#include "vistep/value.hpp"

namespace vistep::neural {

struct ListConfig {
  int default_max = 20;
};

/// Comma-separated phrases, trimmed, empties dropped.
std::vector<std::string> split_phrases(std::string_view text);

/// Regions restricted to `category` (when given), then one argmax region per
/// comma-separated phrase of `query`, tagged with that phrase. A region may win
/// several phrases. Throws NoCandidates.
ObjectList select(const Image& image, const ObjectList& objs, std::string_view query,
                  const std::optional<std::string>& category, backend::Backend& backend);

/// One category: only the best region is tagged. Several: each region takes
/// its best category, then each category stays only on its best region.
/// All other regions come back untagged. Empty input gives empty output.
ObjectList classify(const Image& image, const ObjectList& objs, const TextList& categories,
                    backend::Backend& backend);

/// Throws EmptyList when nothing survives trimming.
TextList knowledge_list(std::string_view query, std::optional<int> max, const ListConfig& config,
                        backend::Backend& backend);

ObjectList locate(const Image& image, std::string_view query, backend::Backend& backend);
ObjectList detect_faces(const Image& image, backend::Backend& backend);
ObjectList segment(const Image& image, backend::Backend& backend);
std::string vqa(const Image& image, std::string_view question, backend::Backend& backend);
/// Inpaints the union of the region masks. Throws MissingMask.
Image replace(const Image& image, const ObjectList& objs, std::string_view prompt, backend::Backend& backend);

}  // namespace vistep::neural
