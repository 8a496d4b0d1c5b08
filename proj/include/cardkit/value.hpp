#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cardkit {

// Int, Bool, or an Int-indexed array. Arrays carry the extent used for
// concrete store values; sort equality ignores the extent since the
// symbolic theory treats arrays as total maps.
class Sort {
 public:
  enum class Kind { Int, Bool, Array };

  static Sort integer() { return Sort(Kind::Int); }
  static Sort boolean() { return Sort(Kind::Bool); }
  static Sort array(Sort element, std::size_t length);

  Kind kind() const { return kind_; }
  bool is_int() const { return kind_ == Kind::Int; }
  bool is_bool() const { return kind_ == Kind::Bool; }
  bool is_array() const { return kind_ == Kind::Array; }

  const Sort& element() const;
  std::size_t length() const { return length_; }
  int depth() const;

  friend bool operator==(const Sort& a, const Sort& b);
  friend bool operator!=(const Sort& a, const Sort& b) { return !(a == b); }

  // "int", "bool", "array[int;10]"
  std::string to_string() const;
  // "Int", "Bool", "(Array Int Int)"
  std::string to_smtlib() const;

 private:
  explicit Sort(Kind k) : kind_(k) {}

  Kind kind_;
  std::shared_ptr<const Sort> element_;
  std::size_t length_ = 0;
};

class Value {
 public:
  using Array = std::vector<Value>;

  Value() : v_(std::int64_t{0}) {}
  static Value integer(std::int64_t i) { return Value(i); }
  static Value boolean(bool b) { return Value(b); }
  static Value array(Array elems) { return Value(std::move(elems)); }
  // Zero/false-filled value of the given sort.
  static Value zero(const Sort& sort);

  bool is_int() const { return std::holds_alternative<std::int64_t>(v_); }
  bool is_bool() const { return std::holds_alternative<bool>(v_); }
  bool is_array() const { return std::holds_alternative<Array>(v_); }

  std::int64_t as_int() const;
  bool as_bool() const;
  const Array& as_array() const;
  Array& as_array();

  bool conforms(const Sort& sort) const;

  friend bool operator==(const Value& a, const Value& b) { return a.v_ == b.v_; }
  friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }
  friend bool operator<(const Value& a, const Value& b) { return a.v_ < b.v_; }

  // 42, true, [1,2,3]
  std::string to_string() const;

 private:
  explicit Value(std::int64_t i) : v_(i) {}
  explicit Value(bool b) : v_(b) {}
  explicit Value(Array a) : v_(std::move(a)) {}

  std::variant<std::int64_t, bool, Array> v_;
};

struct FieldDecl {
  std::string name;
  Sort sort;
};

class StoreSchema {
 public:
  StoreSchema() = default;
  explicit StoreSchema(std::vector<FieldDecl> fields);

  const std::vector<FieldDecl>& fields() const { return fields_; }
  std::size_t size() const { return fields_.size(); }
  const FieldDecl& field(std::size_t slot) const { return fields_.at(slot); }
  std::optional<std::size_t> slot(std::string_view name) const;

 private:
  std::vector<FieldDecl> fields_;
};

// One value per schema slot.
struct StoreValue {
  std::vector<Value> fields;

  friend bool operator==(const StoreValue& a, const StoreValue& b) { return a.fields == b.fields; }
  friend bool operator!=(const StoreValue& a, const StoreValue& b) { return !(a == b); }
  friend bool operator<(const StoreValue& a, const StoreValue& b) { return a.fields < b.fields; }

  bool conforms(const StoreSchema& schema) const;
  // (10, false, false) for multi-field stores; the bare value for one field.
  std::string to_string() const;
  // val=10 b1=false
  std::string to_string(const StoreSchema& schema) const;
};

}  // namespace cardkit
