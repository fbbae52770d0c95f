#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace autoesc {

/// Render-time input. SafeContent carries a content-language label and is
/// only produced by a machine's collected() output or by trusted fixtures.
class Value {
 public:
  enum class Kind { Text, Number, Boolean, List, Record, Safe };
  using List = std::vector<Value>;
  using Record = std::map<std::string, Value>;

  Value() = default;

  static Value text(std::string s);
  static Value number(double d);
  static Value boolean(bool b);
  static Value list(List items);
  static Value record(Record fields);

  Kind kind() const { return kind_; }
  bool is_safe() const { return kind_ == Kind::Safe; }

  // Text and Safe payload.
  const std::string& str() const { return str_; }
  const std::string& safe_label() const { return label_; }
  double num() const { return num_; }
  bool flag() const { return flag_; }
  const List& items() const;
  const Record& fields() const;

  friend bool operator==(const Value& a, const Value& b);

 private:
  friend Value trusted_safe_content(std::string label, std::string text);

  Kind kind_ = Kind::Text;
  std::string str_;
  std::string label_;
  double num_ = 0;
  bool flag_ = false;
  std::shared_ptr<const List> list_;
  std::shared_ptr<const Record> record_;
};

/// Mints a SafeContent value. Callers vouch that `text` is safe for
/// `label`; ordinary ingestion never reaches this.
Value trusted_safe_content(std::string label, std::string text);

// Truthiness: false, "", 0, empty list are false; everything else true.
bool truthy(const Value& v);

}  // namespace autoesc
