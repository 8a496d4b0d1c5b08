#include "cardkit/value.hpp"

#include <sstream>

#include "cardkit/error.hpp"

namespace cardkit {

Sort Sort::array(Sort element, std::size_t length) {
  Sort s(Kind::Array);
  s.element_ = std::make_shared<const Sort>(std::move(element));
  s.length_ = length;
  if (s.depth() > 2) throw SortError("array nesting deeper than 2");
  return s;
}

const Sort& Sort::element() const {
  if (!element_) throw SortError("element() on non-array sort " + to_string());
  return *element_;
}

int Sort::depth() const { return is_array() ? 1 + element_->depth() : 0; }

bool operator==(const Sort& a, const Sort& b) {
  if (a.kind_ != b.kind_) return false;
  if (a.kind_ != Sort::Kind::Array) return true;
  return *a.element_ == *b.element_;
}

std::string Sort::to_string() const {
  switch (kind_) {
    case Kind::Int:
      return "int";
    case Kind::Bool:
      return "bool";
    case Kind::Array:
      return "array[" + element_->to_string() + ";" + std::to_string(length_) + "]";
  }
  return "?";
}

std::string Sort::to_smtlib() const {
  switch (kind_) {
    case Kind::Int:
      return "Int";
    case Kind::Bool:
      return "Bool";
    case Kind::Array:
      return "(Array Int " + element_->to_smtlib() + ")";
  }
  return "?";
}

Value Value::zero(const Sort& sort) {
  switch (sort.kind()) {
    case Sort::Kind::Int:
      return integer(0);
    case Sort::Kind::Bool:
      return boolean(false);
    case Sort::Kind::Array:
      return array(Array(sort.length(), zero(sort.element())));
  }
  return {};
}

std::int64_t Value::as_int() const {
  if (!is_int()) throw EvalError("expected int value, got " + to_string());
  return std::get<std::int64_t>(v_);
}

bool Value::as_bool() const {
  if (!is_bool()) throw EvalError("expected bool value, got " + to_string());
  return std::get<bool>(v_);
}

const Value::Array& Value::as_array() const {
  if (!is_array()) throw EvalError("expected array value, got " + to_string());
  return std::get<Array>(v_);
}

Value::Array& Value::as_array() {
  if (!is_array()) throw EvalError("expected array value, got " + to_string());
  return std::get<Array>(v_);
}

bool Value::conforms(const Sort& sort) const {
  switch (sort.kind()) {
    case Sort::Kind::Int:
      return is_int();
    case Sort::Kind::Bool:
      return is_bool();
    case Sort::Kind::Array: {
      if (!is_array()) return false;
      const auto& a = as_array();
      if (a.size() != sort.length()) return false;
      for (const auto& e : a)
        if (!e.conforms(sort.element())) return false;
      return true;
    }
  }
  return false;
}

std::string Value::to_string() const {
  if (is_int()) return std::to_string(std::get<std::int64_t>(v_));
  if (is_bool()) return std::get<bool>(v_) ? "true" : "false";
  std::string out = "[";
  const auto& a = std::get<Array>(v_);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i) out += ",";
    out += a[i].to_string();
  }
  return out + "]";
}

StoreSchema::StoreSchema(std::vector<FieldDecl> fields) : fields_(std::move(fields)) {
  if (fields_.empty()) throw SortError("store schema needs at least one field");
  for (std::size_t i = 0; i < fields_.size(); ++i)
    for (std::size_t j = i + 1; j < fields_.size(); ++j)
      if (fields_[i].name == fields_[j].name) throw SortError("duplicate store field '" + fields_[i].name + "'");
}

std::optional<std::size_t> StoreSchema::slot(std::string_view name) const {
  for (std::size_t i = 0; i < fields_.size(); ++i)
    if (fields_[i].name == name) return i;
  return std::nullopt;
}

bool StoreValue::conforms(const StoreSchema& schema) const {
  if (fields.size() != schema.size()) return false;
  for (std::size_t i = 0; i < fields.size(); ++i)
    if (!fields[i].conforms(schema.field(i).sort)) return false;
  return true;
}

std::string StoreValue::to_string() const {
  if (fields.size() == 1) return fields[0].to_string();
  std::string out = "(";
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ", ";
    out += fields[i].to_string();
  }
  return out + ")";
}

std::string StoreValue::to_string(const StoreSchema& schema) const {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += " ";
    out += (i < schema.size() ? schema.field(i).name : "?") + "=" + fields[i].to_string();
  }
  return out;
}

}  // namespace cardkit
