#include "vistep/value.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "vistep/error.hpp"

namespace vistep {

namespace {

constexpr std::string_view kKindNames[] = {"null", "text", "number", "boolean", "image",
                                           "box", "mask", "object_list", "text_list"};

[[noreturn]] void kind_mismatch(ValueKind expected, ValueKind actual) {
  throw Error(ErrorCode::TypeMismatch,
              "expected " + std::string(to_string(expected)) + " but value is " + std::string(to_string(actual)),
              {{"expected", to_string(expected)}, {"actual", to_string(actual)}});
}

template <std::size_t I>
const auto& get_or_throw(const Value::Storage& s, ValueKind expected) {
  if (s.index() != I) kind_mismatch(expected, static_cast<ValueKind>(s.index()));
  return std::get<I>(s);
}

}  // namespace

std::string_view to_string(ValueKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<ValueKind> value_kind_from_string(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kKindNames); ++i) {
    if (kKindNames[i] == name) return static_cast<ValueKind>(i);
  }
  return std::nullopt;
}

std::string KindSet::describe() const {
  if (is_any()) return "any";
  std::string out;
  for (std::size_t i = 0; i < std::size(kKindNames); ++i) {
    if (!contains(static_cast<ValueKind>(i))) continue;
    if (!out.empty()) out += "|";
    out += kKindNames[i];
  }
  return out.empty() ? "none" : out;
}

const std::string& Value::as_text() const { return get_or_throw<1>(storage_, ValueKind::Text); }
double Value::as_number() const { return get_or_throw<2>(storage_, ValueKind::Number); }
bool Value::as_boolean() const { return get_or_throw<3>(storage_, ValueKind::Boolean); }
const Image& Value::as_image() const { return get_or_throw<4>(storage_, ValueKind::Image); }
const Box& Value::as_box() const { return get_or_throw<5>(storage_, ValueKind::Box); }
const Mask& Value::as_mask() const { return get_or_throw<6>(storage_, ValueKind::Mask); }
const ObjectList& Value::as_objects() const { return get_or_throw<7>(storage_, ValueKind::ObjectList); }
const TextList& Value::as_texts() const { return get_or_throw<8>(storage_, ValueKind::TextList); }

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == std::trunc(v) && std::fabs(v) < 1e15) {
    long long i = static_cast<long long>(v);
    return std::to_string(i);
  }
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string Value::summary() const {
  switch (kind()) {
    case ValueKind::Null: return "None";
    case ValueKind::Text: return as_text();
    case ValueKind::Number: return format_number(as_number());
    case ValueKind::Boolean: return as_boolean() ? "True" : "False";
    case ValueKind::Image: {
      const auto& img = as_image();
      return "image " + std::to_string(img.width()) + "x" + std::to_string(img.height());
    }
    case ValueKind::Box: {
      const auto& b = as_box();
      return "[" + format_number(b.x1) + ", " + format_number(b.y1) + ", " + format_number(b.x2) + ", " +
             format_number(b.y2) + "]";
    }
    case ValueKind::Mask: {
      const auto& m = as_mask();
      return "mask " + std::to_string(m.width()) + "x" + std::to_string(m.height()) + " (" +
             std::to_string(m.count()) + " px)";
    }
    case ValueKind::ObjectList: {
      const auto& objs = as_objects();
      std::string out = std::to_string(objs.size()) + (objs.size() == 1 ? " object" : " objects");
      bool first = true;
      for (const auto& o : objs) {
        if (auto l = o.label()) {
          out += first ? ": " : ", ";
          out += *l;
          first = false;
        }
      }
      return out;
    }
    case ValueKind::TextList: {
      std::string out = "[";
      const auto& items = as_texts();
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        out += items[i];
      }
      return out + "]";
    }
  }
  return {};
}

}  // namespace vistep
