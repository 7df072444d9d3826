#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pdfmine::pdf {

struct Ref {
  int num = 0;
  int gen = 0;
  friend auto operator<=>(const Ref&, const Ref&) = default;
};

struct Name {
  std::string value;
  friend bool operator==(const Name&, const Name&) = default;
};

struct PdfString {
  std::string bytes;
};

class Object;
using Array = std::vector<Object>;
using Dict = std::map<std::string, Object, std::less<>>;

struct Stream {
  Dict dict;
  std::string raw;
};

/// Immutable PDF value. Containers are shared so copies are cheap.
class Object {
 public:
  using Value = std::variant<std::monostate, bool, std::int64_t, double, Name, PdfString,
                             std::shared_ptr<const Array>, std::shared_ptr<const Dict>,
                             std::shared_ptr<const Stream>, Ref>;

  Object() = default;
  Object(bool v) : value_(v) {}
  Object(std::int64_t v) : value_(v) {}
  Object(double v) : value_(v) {}
  Object(Name v) : value_(std::move(v)) {}
  Object(PdfString v) : value_(std::move(v)) {}
  Object(Array v) : value_(std::make_shared<const Array>(std::move(v))) {}
  Object(Dict v) : value_(std::make_shared<const Dict>(std::move(v))) {}
  Object(Stream v) : value_(std::make_shared<const Stream>(std::move(v))) {}
  Object(Ref v) : value_(v) {}

  bool is_null() const { return std::holds_alternative<std::monostate>(value_); }
  bool is_ref() const { return std::holds_alternative<Ref>(value_); }
  bool is_number() const {
    return std::holds_alternative<std::int64_t>(value_) || std::holds_alternative<double>(value_);
  }

  std::optional<bool> boolean() const;
  std::optional<double> number() const;
  std::optional<std::int64_t> integer() const;
  /// Name value without the leading slash.
  const std::string* name() const;
  const std::string* string() const;
  const Array* array() const;
  /// Dictionary of a dict object or of a stream object.
  const Dict* dict() const;
  const Stream* stream() const;
  std::shared_ptr<const Stream> stream_ptr() const;
  std::optional<Ref> ref() const;

  bool is_name(std::string_view n) const {
    const auto* v = name();
    return v && *v == n;
  }

  const Value& value() const { return value_; }

 private:
  Value value_;
};

/// Lookup that returns nullptr for a missing key.
const Object* find(const Dict& dict, std::string_view key);

}  // namespace pdfmine::pdf
