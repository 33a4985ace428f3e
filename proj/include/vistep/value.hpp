#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vistep/image.hpp"

namespace vistep {

/// One detected or segmented object: box, optional mask, detector score,
/// producer category ("face", "blue circle") and an assigned tag.
struct ObjectRegion {
  Box box;
  std::optional<Mask> mask;
  double score = 1.0;
  std::optional<std::string> category;
  std::optional<std::string> tag;

  /// Tag if assigned, otherwise category.
  std::optional<std::string> label() const { return tag ? tag : category; }

  friend bool operator==(const ObjectRegion&, const ObjectRegion&) = default;
};

using ObjectList = std::vector<ObjectRegion>;
using TextList = std::vector<std::string>;

enum class ValueKind : std::uint8_t { Null, Text, Number, Boolean, Image, Box, Mask, ObjectList, TextList };

std::string_view to_string(ValueKind kind);
std::optional<ValueKind> value_kind_from_string(std::string_view name);

/// Set of accepted kinds for a module argument.
class KindSet {
 public:
  constexpr KindSet() = default;
  constexpr KindSet(std::initializer_list<ValueKind> kinds) {
    for (auto k : kinds) bits_ |= bit(k);
  }
  static constexpr KindSet any() {
    KindSet s;
    s.bits_ = 0x1ff;
    return s;
  }

  constexpr bool contains(ValueKind k) const { return (bits_ & bit(k)) != 0; }
  constexpr bool is_any() const { return bits_ == 0x1ff; }
  std::string describe() const;

  friend constexpr bool operator==(const KindSet&, const KindSet&) = default;

 private:
  static constexpr std::uint16_t bit(ValueKind k) { return static_cast<std::uint16_t>(1u << static_cast<unsigned>(k)); }
  std::uint16_t bits_ = 0;
};

/// Runtime value bound to a program variable. Immutable once built.
class Value {
 public:
  using Storage = std::variant<std::monostate, std::string, double, bool, Image, Box, Mask, ObjectList, TextList>;

  Value() = default;

  static Value null() { return Value(); }
  static Value text(std::string v) { return Value(Storage(std::in_place_index<1>, std::move(v))); }
  static Value number(double v) { return Value(Storage(std::in_place_index<2>, v)); }
  static Value boolean(bool v) { return Value(Storage(std::in_place_index<3>, v)); }
  static Value image(Image v) { return Value(Storage(std::in_place_index<4>, std::move(v))); }
  static Value box(Box v) { return Value(Storage(std::in_place_index<5>, v)); }
  static Value mask(Mask v) { return Value(Storage(std::in_place_index<6>, std::move(v))); }
  static Value objects(ObjectList v) { return Value(Storage(std::in_place_index<7>, std::move(v))); }
  static Value texts(TextList v) { return Value(Storage(std::in_place_index<8>, std::move(v))); }

  ValueKind kind() const { return static_cast<ValueKind>(storage_.index()); }
  bool is(ValueKind k) const { return kind() == k; }
  bool is_null() const { return kind() == ValueKind::Null; }

  // Accessors throw Error{TypeMismatch} on the wrong kind.
  const std::string& as_text() const;
  double as_number() const;
  bool as_boolean() const;
  const Image& as_image() const;
  const Box& as_box() const;
  const Mask& as_mask() const;
  const ObjectList& as_objects() const;
  const TextList& as_texts() const;

  const Storage& storage() const { return storage_; }

  /// Short human-readable rendering used in traces and rationales.
  std::string summary() const;

  friend bool operator==(const Value&, const Value&) = default;

 private:
  explicit Value(Storage s) : storage_(std::move(s)) {}
  Storage storage_;
};

/// Canonical number text: integers without a decimal point, everything else in
/// shortest round-trip form.
std::string format_number(double v);

}  // namespace vistep
