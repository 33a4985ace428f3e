#include "vistep/modules.hpp"

#include <cmath>

#include "vistep/error.hpp"
#include "vistep/expr.hpp"

namespace vistep {

namespace {

constexpr KindSet kImage{ValueKind::Image};
constexpr KindSet kText{ValueKind::Text};
constexpr KindSet kObjects{ValueKind::ObjectList};

ArgSpec req(std::string name, KindSet kinds) { return {std::move(name), kinds, true, Value::null()}; }
ArgSpec opt(std::string name, KindSet kinds, Value fallback) { return {std::move(name), kinds, false, std::move(fallback)}; }

std::string quoted(const std::string& s) { return "'" + s + "'"; }

std::string count_phrase(std::size_t n, const char* noun) {
  return std::to_string(n) + " " + noun + (n == 1 ? "" : "s");
}

std::string regions_caption(const Value& out) {
  if (!out.is(ValueKind::ObjectList)) return out.summary();
  const auto& objs = out.as_objects();
  std::string s = count_phrase(objs.size(), "region");
  std::string labels;
  for (const auto& o : objs) {
    if (auto l = o.label()) labels += (labels.empty() ? "" : ", ") + *l;
  }
  if (!labels.empty()) s += ": " + labels;
  return s;
}

TextList as_categories(const Value& v) {
  if (v.is(ValueKind::TextList)) return v.as_texts();
  return neural::split_phrases(v.as_text());
}

Image crop_arg(const Image& image, const Value& box, ops::Relation relation) {
  if (box.is(ValueKind::Box)) return ops::crop_spatial(image, box.as_box(), relation);
  const auto& objs = box.as_objects();
  if (objs.empty()) return image;
  return ops::crop_spatial(image, objs.front().box, relation);
}

void add(Registry& r, std::string name, std::vector<ArgSpec> args, KindSet output, std::string description,
         ExecuteFn execute, SummarizeFn summarize) {
  r.add({ModuleSignature{std::move(name), std::move(args), output, std::move(description)}, std::move(execute),
         std::move(summarize)});
}

}  // namespace

void add_symbolic_modules(Registry& r, const ModuleConfig& config) {
  add(r, "COUNT", {req("box", kObjects)}, {ValueKind::Number}, "number of regions",
      [](const ExecContext& c) { return Value::number(static_cast<double>(c.args.get("box").as_objects().size())); },
      [](const ArgMap&, const Value& out) { return "count = " + out.summary(); });

  const std::pair<const char*, ops::Relation> crops[] = {
      {"CROP", ops::Relation::None},           {"CROP_LEFTOF", ops::Relation::Left},
      {"CROP_RIGHTOF", ops::Relation::Right},  {"CROP_ABOVE", ops::Relation::Above},
      {"CROP_BELOW", ops::Relation::Below},    {"CROP_FRONTOF", ops::Relation::FrontOf},
      {"CROP_BEHIND", ops::Relation::Behind},
  };
  for (const auto& [name, relation] : crops) {
    const ops::Relation rel = relation;
    add(r, name, {req("image", kImage), req("box", {ValueKind::ObjectList, ValueKind::Box})}, kImage,
        "crop relative to the first box",
        [rel](const ExecContext& c) {
          return Value::image(crop_arg(c.args.get("image").as_image(), c.args.get("box"), rel));
        },
        [rel](const ArgMap&, const Value& out) {
          return std::string("crop (") + std::string(ops::to_string(rel)) + ") -> " + out.summary();
        });
  }

  add(r, "EVAL", {req("expr", kText)}, {ValueKind::Text, ValueKind::Number, ValueKind::Boolean},
      "evaluate an expression after substituting {VAR} placeholders",
      [](const ExecContext& c) {
        const auto source = expr::substitute(c.args.get("expr").as_text(), c.state);
        return expr::eval_expr(source);
      },
      [](const ArgMap& args, const Value& out) {
        const Value* e = args.find("expr");
        return (e && e->is(ValueKind::Text) ? e->as_text() : std::string("?")) + " = " + out.summary();
      });

  add(r, "RESULT", {req("var", KindSet::any())}, KindSet::any(), "mark the program answer",
      [](const ExecContext& c) { return c.args.get("var"); },
      [](const ArgMap&, const Value& out) { return "result: " + out.summary(); });

  add(r, "TAG", {req("image", kImage), req("object", kObjects)}, kImage, "draw boxes and labels",
      [](const ExecContext& c) {
        return Value::image(ops::tag(c.args.get("image").as_image(), c.args.get("object").as_objects()));
      },
      [](const ArgMap& args, const Value&) {
        const Value* o = args.find("object");
        return "tagged " + (o ? regions_caption(*o) : std::string("0 regions"));
      });

  add(r, "COLORPOP", {req("image", kImage), req("object", kObjects)}, kImage, "grayscale outside the masks",
      [](const ExecContext& c) {
        return Value::image(ops::color_pop(c.args.get("image").as_image(), c.args.get("object").as_objects()));
      },
      [](const ArgMap&, const Value&) { return std::string("color pop"); });

  add(r, "BGBLUR", {req("image", kImage), req("object", kObjects)}, kImage, "blur outside the masks",
      [](const ExecContext& c) {
        return Value::image(
            ops::background_blur(c.args.get("image").as_image(), c.args.get("object").as_objects()));
      },
      [](const ArgMap&, const Value&) { return std::string("background blur"); });

  const ops::EmojiTable* table = config.emoji;
  add(r, "EMOJI", {req("image", kImage), req("object", kObjects), req("emoji", kText)}, kImage,
      "paste an emoji over each region",
      [table](const ExecContext& c) {
        const auto& t = table ? *table : ops::EmojiTable::builtin();
        return Value::image(ops::emoji(c.args.get("image").as_image(), c.args.get("object").as_objects(),
                                       c.args.get("emoji").as_text(), t));
      },
      [](const ArgMap& args, const Value&) {
        const Value* e = args.find("emoji");
        return "emoji " + (e && e->is(ValueKind::Text) ? quoted(e->as_text()) : std::string("?"));
      });
}

void add_neural_modules(Registry& r, const ModuleConfig& config) {
  add(r, "LOC", {req("image", kImage), req("object", kText)}, kObjects, "open-vocabulary localization",
      [](const ExecContext& c) {
        return Value::objects(
            neural::locate(c.args.get("image").as_image(), c.args.get("object").as_text(), c.require_backend()));
      },
      [](const ArgMap& args, const Value& out) {
        const Value* q = args.find("object");
        return (q && q->is(ValueKind::Text) ? quoted(q->as_text()) + ": " : std::string()) + regions_caption(out);
      });

  add(r, "FACEDET", {req("image", kImage)}, kObjects, "face detection",
      [](const ExecContext& c) {
        return Value::objects(neural::detect_faces(c.args.get("image").as_image(), c.require_backend()));
      },
      [](const ArgMap&, const Value& out) { return regions_caption(out); });

  add(r, "SEG", {req("image", kImage)}, kObjects, "panoptic segmentation",
      [](const ExecContext& c) {
        return Value::objects(neural::segment(c.args.get("image").as_image(), c.require_backend()));
      },
      [](const ArgMap&, const Value& out) { return regions_caption(out); });

  add(r, "VQA", {req("image", kImage), req("question", kText)}, kText, "visual question answering",
      [](const ExecContext& c) {
        return Value::text(
            neural::vqa(c.args.get("image").as_image(), c.args.get("question").as_text(), c.require_backend()));
      },
      [](const ArgMap& args, const Value& out) {
        const Value* q = args.find("question");
        return (q && q->is(ValueKind::Text) ? q->as_text() + " -> " : std::string()) + out.summary();
      });

  add(r, "SELECT",
      {req("image", kImage), req("object", kObjects), req("query", kText),
       opt("category", {ValueKind::Text, ValueKind::Null}, Value::null())},
      kObjects, "pick the best region for each phrase",
      [](const ExecContext& c) {
        const Value& cat = c.args.get("category");
        std::optional<std::string> category;
        if (cat.is(ValueKind::Text)) category = cat.as_text();
        return Value::objects(neural::select(c.args.get("image").as_image(), c.args.get("object").as_objects(),
                                             c.args.get("query").as_text(), category, c.require_backend()));
      },
      [](const ArgMap&, const Value& out) { return "selected " + regions_caption(out); });

  add(r, "CLASSIFY",
      {req("image", kImage), req("object", kObjects), req("categories", {ValueKind::TextList, ValueKind::Text})},
      kObjects, "assign categories to regions",
      [](const ExecContext& c) {
        const auto& objs = c.args.get("object").as_objects();
        if (objs.empty()) return Value::objects({});
        return Value::objects(neural::classify(c.args.get("image").as_image(), objs,
                                               as_categories(c.args.get("categories")), c.require_backend()));
      },
      [](const ArgMap&, const Value& out) { return "classified " + regions_caption(out); });

  const neural::ListConfig list = config.list;
  add(r, "LIST", {req("query", kText), opt("max", {ValueKind::Number, ValueKind::Null}, Value::null())},
      {ValueKind::TextList}, "retrieve a list of names",
      [list](const ExecContext& c) {
        std::optional<int> max;
        const Value& m = c.args.get("max");
        if (m.is(ValueKind::Number)) {
          const double v = m.as_number();
          if (!(v >= 1) || v != std::floor(v) || v > 1e6) {
            throw Error(ErrorCode::InvalidArgument, "LIST max must be a positive integer", {{"max", m.summary()}});
          }
          max = static_cast<int>(v);
        }
        return Value::texts(neural::knowledge_list(c.args.get("query").as_text(), max, list, c.require_backend()));
      },
      [](const ArgMap&, const Value& out) { return out.summary(); });

  add(r, "REPLACE", {req("image", kImage), req("object", kObjects), req("prompt", kText)}, kImage,
      "inpaint the masked regions",
      [](const ExecContext& c) {
        return Value::image(neural::replace(c.args.get("image").as_image(), c.args.get("object").as_objects(),
                                            c.args.get("prompt").as_text(), c.require_backend()));
      },
      [](const ArgMap& args, const Value&) {
        const Value* p = args.find("prompt");
        return "replaced with " + (p && p->is(ValueKind::Text) ? quoted(p->as_text()) : std::string("?"));
      });
}

Registry standard_registry(const ModuleConfig& config) {
  Registry r;
  add_neural_modules(r, config);
  add_symbolic_modules(r, config);
  return r;
}

}  // namespace vistep
