#include "autoesc/value.hpp"

namespace autoesc {

namespace {
const Value::List kEmptyList;
const Value::Record kEmptyRecord;
}  // namespace

Value Value::text(std::string s) {
  Value v;
  v.kind_ = Kind::Text;
  v.str_ = std::move(s);
  return v;
}

Value Value::number(double d) {
  Value v;
  v.kind_ = Kind::Number;
  v.num_ = d;
  return v;
}

Value Value::boolean(bool b) {
  Value v;
  v.kind_ = Kind::Boolean;
  v.flag_ = b;
  return v;
}

Value Value::list(List items) {
  Value v;
  v.kind_ = Kind::List;
  v.list_ = std::make_shared<const List>(std::move(items));
  return v;
}

Value Value::record(Record fields) {
  Value v;
  v.kind_ = Kind::Record;
  v.record_ = std::make_shared<const Record>(std::move(fields));
  return v;
}

Value trusted_safe_content(std::string label, std::string text) {
  Value v;
  v.kind_ = Value::Kind::Safe;
  v.label_ = std::move(label);
  v.str_ = std::move(text);
  return v;
}

const Value::List& Value::items() const { return list_ ? *list_ : kEmptyList; }
const Value::Record& Value::fields() const { return record_ ? *record_ : kEmptyRecord; }

bool operator==(const Value& a, const Value& b) {
  if (a.kind_ != b.kind_) return false;
  switch (a.kind_) {
    case Value::Kind::Text: return a.str_ == b.str_;
    case Value::Kind::Number: return a.num_ == b.num_;
    case Value::Kind::Boolean: return a.flag_ == b.flag_;
    case Value::Kind::List: return a.items() == b.items();
    case Value::Kind::Record: return a.fields() == b.fields();
    case Value::Kind::Safe: return a.label_ == b.label_ && a.str_ == b.str_;
  }
  return false;
}

bool truthy(const Value& v) {
  switch (v.kind()) {
    case Value::Kind::Text: return !v.str().empty();
    case Value::Kind::Number: return v.num() != 0;
    case Value::Kind::Boolean: return v.flag();
    case Value::Kind::List: return !v.items().empty();
    case Value::Kind::Record: return true;
    case Value::Kind::Safe: return !v.str().empty();
  }
  return false;
}

}  // namespace autoesc
