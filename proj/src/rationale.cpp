#include "vistep/rationale.hpp"

#include <algorithm>

#include "vistep/codec.hpp"
#include "vistep/image_ops.hpp"

namespace vistep::rationale {

namespace {

// One rendered value: caption text plus an optional inline picture.
struct Shown {
  std::string kind;
  std::string text;
  std::string image;  // data URI, may be empty
};

const char* kStyle =
    "body{font-family:sans-serif;margin:1.5em;background:#fafafa;color:#222}"
    "h1{font-size:1.3em}pre.program{background:#fff;border:1px solid #ccc;padding:.6em}"
    ".cell{background:#fff;border:1px solid #ccc;border-radius:4px;margin:.8em 0;padding:.6em}"
    ".cell h2{font-size:1em;margin:0 0 .4em}.step-no{display:inline-block;min-width:1.6em;color:#666}"
    ".args,.output{display:flex;flex-wrap:wrap;gap:.8em;align-items:flex-start}"
    ".value{border:1px solid #eee;padding:.3em}.value img{display:block;image-rendering:pixelated}"
    ".name{font-weight:bold;margin-right:.3em}.caption{color:#555;margin:.4em 0 0}"
    ".error-banner{background:#fde2e2;border:1px solid #e08080;padding:.4em;margin-top:.4em}"
    ".result-banner{background:#e2f5e2;border:1px solid #80c080;padding:.6em;font-weight:bold}"
    ".failure-banner{background:#fde2e2;border:1px solid #e08080;padding:.6em;font-weight:bold}";

Image mask_picture(const Mask& m) {
  std::vector<std::uint8_t> rgba;
  rgba.reserve(static_cast<std::size_t>(m.width()) * m.height() * 4);
  for (auto bit : m.bits()) {
    const std::uint8_t v = bit ? 255 : 0;
    rgba.insert(rgba.end(), {v, v, v, 255});
  }
  return Image(m.width(), m.height(), std::move(rgba));
}

/// Thumbnail of `base` with regions outlined and labelled in thumbnail space.
Image annotate(const Image& base, const ObjectList& objs, int thumb_max) {
  const Image thumb = ops::thumbnail(base, thumb_max);
  const double sx = static_cast<double>(thumb.width()) / base.width();
  const double sy = static_cast<double>(thumb.height()) / base.height();
  Canvas canvas(thumb);
  for (std::size_t i = 0; i < objs.size(); ++i) {
    const auto& o = objs[i];
    const Rgba color = ops::palette_color(i);
    if (o.mask && o.mask->width() == base.width() && o.mask->height() == base.height()) {
      const Rgba tint{color.r, color.g, color.b, 96};
      for (int y = 0; y < canvas.height(); ++y) {
        const int my = std::min(base.height() - 1, static_cast<int>((y + 0.5) / sy));
        for (int x = 0; x < canvas.width(); ++x) {
          const int mx = std::min(base.width() - 1, static_cast<int>((x + 0.5) / sx));
          if (o.mask->at(mx, my)) canvas.blend(x, y, tint);
        }
      }
    }
    const Box scaled{o.box.x1 * sx, o.box.y1 * sy, o.box.x2 * sx, o.box.y2 * sy};
    const PixelRect r = to_pixels(scaled, canvas.width(), canvas.height());
    ops::draw_outline(canvas, r, color);
    if (auto label = o.label()) ops::draw_label(canvas, r, *label, color);
  }
  return canvas.freeze();
}

Shown show(const Value& v, const std::optional<Image>& base, int thumb_max) {
  Shown s{std::string(to_string(v.kind())), v.summary(), {}};
  switch (v.kind()) {
    case ValueKind::Image:
      s.image = codec::png_data_uri(ops::thumbnail(v.as_image(), thumb_max));
      break;
    case ValueKind::Mask:
      s.image = codec::png_data_uri(ops::thumbnail(mask_picture(v.as_mask()), thumb_max));
      break;
    case ValueKind::Box:
      if (base) {
        ObjectRegion r;
        r.box = v.as_box();
        s.image = codec::png_data_uri(annotate(*base, {r}, thumb_max));
      }
      break;
    case ValueKind::ObjectList:
      if (base) s.image = codec::png_data_uri(annotate(*base, v.as_objects(), thumb_max));
      break;
    default: break;
  }
  return s;
}

std::optional<Image> base_image(const StepTrace& t, const RunRecord& run) {
  for (const auto& [name, v] : t.args) {
    if (v.is(ValueKind::Image)) return v.as_image();
  }
  for (const auto& [name, v] : run.inputs) {
    if (v.is(ValueKind::Image)) return v.as_image();
  }
  return std::nullopt;
}

std::string caption(const StepTrace& t, const Options& options) {
  if (!options.registry || !t.output) return {};
  try {
    const auto step = dsl::parse_step(t.text);
    const ModuleImpl* impl = options.registry->find(step.module);
    if (!impl || !impl->summarize) return {};
    ArgMap args;
    for (const auto& [name, v] : t.args) args.set(name, v);
    return impl->summarize(args, *t.output);
  } catch (const std::exception&) {
    return {};
  }
}

nlohmann::json shown_json(const Shown& s) {
  nlohmann::json j{{"kind", s.kind}, {"text", s.text}};
  if (!s.image.empty()) j["image"] = s.image;
  return j;
}

std::string value_html(const Shown& s, const std::string& name = {}) {
  std::string out = "<div class=\"value\" data-kind=\"" + s.kind + "\">";
  if (!name.empty()) out += "<span class=\"name\">" + escape_html(name) + "</span>";
  out += "<span class=\"text\">" + escape_html(s.text) + "</span>";
  if (!s.image.empty()) out += "<img src=\"" + s.image + "\" alt=\"" + escape_html(s.kind) + "\">";
  return out + "</div>";
}

std::string error_text(const nlohmann::json& e) {
  return e.value("code", std::string("Error")) + ": " + e.value("message", std::string());
}

}  // namespace

std::string escape_html(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

nlohmann::json render_sidecar(const RunRecord& run, const Options& options) {
  nlohmann::json j{{"run_id", run.run_id}, {"status", run.ok() ? "ok" : "failed"}, {"source", run.source}};
  auto cells = nlohmann::json::array();
  for (const auto& t : run.traces) {
    const auto base = base_image(t, run);
    nlohmann::json c{{"step", t.step}, {"text", t.text}};
    auto args = nlohmann::json::array();
    for (const auto& [name, v] : t.args) {
      auto a = shown_json(show(v, base, options.thumb_max));
      a["name"] = name;
      args.push_back(std::move(a));
    }
    c["args"] = std::move(args);
    c["output"] = t.output ? shown_json(show(*t.output, base, options.thumb_max)) : nlohmann::json();
    c["caption"] = caption(t, options);
    c["error"] = t.error ? *t.error : nlohmann::json();
    cells.push_back(std::move(c));
  }
  j["cells"] = std::move(cells);
  j["result"] = run.result ? shown_json(show(*run.result, std::nullopt, options.thumb_max)) : nlohmann::json();
  return j;
}

std::string render_html(const RunRecord& run, const Options& options) {
  std::string h;
  h += "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n";
  h += "<title>Run " + escape_html(run.run_id) + "</title>\n<style>" + std::string(kStyle) + "</style>\n</head>\n<body>\n";
  h += "<header><h1>Run " + escape_html(run.run_id) + "</h1><p class=\"status\">" +
       std::string(run.ok() ? "ok" : "failed") + "</p></header>\n";
  h += "<pre class=\"program\">" + escape_html(run.source) + "</pre>\n";

  if (!run.inputs.empty()) {
    h += "<div class=\"inputs\">";
    for (const auto& [name, v] : run.inputs) h += value_html(show(v, std::nullopt, options.thumb_max), name);
    h += "</div>\n";
  }

  for (const auto& t : run.traces) {
    const auto base = base_image(t, run);
    h += "<section class=\"cell\" id=\"step-" + std::to_string(t.step) + "\" data-step=\"" + std::to_string(t.step) +
         "\">\n<h2><span class=\"step-no\">" + std::to_string(t.step) + "</span><code>" + escape_html(t.text) +
         "</code></h2>\n";
    h += "<div class=\"args\">";
    for (const auto& [name, v] : t.args) h += value_html(show(v, base, options.thumb_max), name);
    h += "</div>\n";
    if (t.output) h += "<div class=\"output\">" + value_html(show(*t.output, base, options.thumb_max), "output") + "</div>\n";
    if (auto cap = caption(t, options); !cap.empty()) h += "<p class=\"caption\">" + escape_html(cap) + "</p>\n";
    if (t.error) h += "<div class=\"error-banner\">" + escape_html(error_text(*t.error)) + "</div>\n";
    h += "</section>\n";
  }

  if (run.result) {
    h += "<div class=\"result-banner\">Result: " + value_html(show(*run.result, std::nullopt, options.thumb_max)) +
         "</div>\n";
  } else {
    const StepTrace* f = run.failed_step();
    h += "<div class=\"failure-banner\">Failed" +
         (f ? " at step " + std::to_string(f->step) + ": " + escape_html(error_text(*f->error)) : std::string()) +
         "</div>\n";
  }
  h += "</body>\n</html>\n";
  return h;
}

}  // namespace vistep::rationale
