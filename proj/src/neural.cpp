#include "vistep/neural.hpp"

#include <algorithm>
#include <cctype>

#include "vistep/error.hpp"
#include "vistep/image_ops.hpp"

namespace vistep::neural {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool same_text(std::string_view a, std::string_view b) {
  const auto ta = trim(a);
  const auto tb = trim(b);
  return std::equal(ta.begin(), ta.end(), tb.begin(), tb.end(), [](char x, char y) {
    return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
  });
}

/// rows = boxes, columns = texts
std::vector<std::vector<double>> score(const Image& image, const ObjectList& objs, const TextList& texts,
                                       backend::Backend& backend) {
  backend::Request req;
  req.op = backend::Op::ScoreRegions;
  req.image_ref = backend.put_image(image);
  for (const auto& o : objs) req.boxes.push_back(o.box);
  req.texts = texts;
  auto resp = backend.call(req);
  resp.check_against(req);
  return std::move(resp.scores);
}

ObjectList regions_of(const Image& image, backend::Op op, backend::Backend& backend,
                      std::optional<std::string> query = std::nullopt) {
  backend::Request req;
  req.op = op;
  req.image_ref = backend.put_image(image);
  req.query = std::move(query);
  auto resp = backend.call(req);
  resp.check_against(req);
  return std::move(resp.regions);
}

}  // namespace

std::vector<std::string> split_phrases(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string_view::npos ? text.size() : comma;
    auto item = trim(text.substr(start, end - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

ObjectList select(const Image& image, const ObjectList& objs, std::string_view query,
                  const std::optional<std::string>& category, backend::Backend& backend) {
  ObjectList candidates;
  for (const auto& o : objs) {
    if (!category || (o.category && same_text(*o.category, *category))) candidates.push_back(o);
  }
  if (candidates.empty()) {
    nlohmann::json detail{{"regions", objs.size()}};
    if (category) detail["category"] = *category;
    throw Error(ErrorCode::NoCandidates,
                category ? "no region has category '" + *category + "'" : std::string("no regions to select from"),
                detail);
  }
  const auto phrases = split_phrases(query);
  if (phrases.empty()) throw Error(ErrorCode::InvalidArgument, "select query has no phrases");

  const auto matrix = score(image, candidates, phrases, backend);
  ObjectList out;
  for (std::size_t p = 0; p < phrases.size(); ++p) {
    std::size_t best = 0;
    for (std::size_t r = 1; r < candidates.size(); ++r) {
      if (matrix[r][p] > matrix[best][p]) best = r;
    }
    ObjectRegion chosen = candidates[best];
    chosen.tag = phrases[p];
    out.push_back(std::move(chosen));
  }
  return out;
}

ObjectList classify(const Image& image, const ObjectList& objs, const TextList& categories,
                    backend::Backend& backend) {
  if (categories.empty()) throw Error(ErrorCode::InvalidArgument, "classify needs at least one category");
  if (objs.empty()) return {};

  const auto matrix = score(image, objs, categories, backend);
  ObjectList out = objs;
  for (auto& o : out) o.tag.reset();

  if (categories.size() == 1) {
    std::size_t best = 0;
    for (std::size_t r = 1; r < objs.size(); ++r) {
      if (matrix[r][0] > matrix[best][0]) best = r;
    }
    out[best].tag = categories[0];
    return out;
  }

  std::vector<std::size_t> best_cat(objs.size(), 0);
  for (std::size_t r = 0; r < objs.size(); ++r) {
    for (std::size_t c = 1; c < categories.size(); ++c) {
      if (matrix[r][c] > matrix[r][best_cat[r]]) best_cat[r] = c;
    }
  }
  for (std::size_t c = 0; c < categories.size(); ++c) {
    std::optional<std::size_t> winner;
    for (std::size_t r = 0; r < objs.size(); ++r) {
      if (best_cat[r] != c) continue;
      if (!winner || matrix[r][c] > matrix[*winner][c]) winner = r;
    }
    if (winner) out[*winner].tag = categories[c];
  }
  return out;
}

TextList knowledge_list(std::string_view query, std::optional<int> max, const ListConfig& config,
                        backend::Backend& backend) {
  const auto q = trim(query);
  if (q.empty()) throw Error(ErrorCode::InvalidArgument, "list query is empty");
  const int limit = max ? *max : config.default_max;
  if (limit < 1) throw Error(ErrorCode::InvalidArgument, "list max must be at least 1", {{"max", limit}});

  backend::Request req;
  req.op = backend::Op::KnowledgeList;
  req.query = q;
  req.max = limit;
  auto resp = backend.call(req);
  resp.check_against(req);

  TextList raw = resp.texts;
  if (raw.empty() && resp.answer) raw = {*resp.answer};
  TextList out;
  for (const auto& entry : raw) {
    for (auto& item : split_phrases(entry)) {
      if (static_cast<int>(out.size()) == limit) break;
      out.push_back(std::move(item));
    }
  }
  if (out.empty()) throw Error(ErrorCode::EmptyList, "knowledge list for '" + q + "' is empty", {{"query", q}});
  return out;
}

ObjectList locate(const Image& image, std::string_view query, backend::Backend& backend) {
  auto regions = regions_of(image, backend::Op::Locate, backend, std::string(query));
  for (auto& r : regions) {
    if (!r.category) r.category = std::string(query);
  }
  return regions;
}

ObjectList detect_faces(const Image& image, backend::Backend& backend) {
  auto regions = regions_of(image, backend::Op::DetectFaces, backend);
  for (auto& r : regions) {
    if (!r.category) r.category = "face";
  }
  return regions;
}

ObjectList segment(const Image& image, backend::Backend& backend) {
  return regions_of(image, backend::Op::Segment, backend);
}

std::string vqa(const Image& image, std::string_view question, backend::Backend& backend) {
  backend::Request req;
  req.op = backend::Op::Vqa;
  req.image_ref = backend.put_image(image);
  req.question = std::string(question);
  auto resp = backend.call(req);
  resp.check_against(req);
  return *resp.answer;
}

Image replace(const Image& image, const ObjectList& objs, std::string_view prompt, backend::Backend& backend) {
  if (objs.empty()) return image;
  backend::Request req;
  req.op = backend::Op::Inpaint;
  req.mask = ops::union_mask(objs, image.width(), image.height());
  req.image_ref = backend.put_image(image);
  req.prompt = std::string(prompt);
  auto resp = backend.call(req);
  resp.check_against(req);
  return backend.get_image(*resp.image_ref);
}

}  // namespace vistep::neural
