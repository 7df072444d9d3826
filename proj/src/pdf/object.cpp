#include "pdfmine/pdf/object.hpp"

#include <cmath>

namespace pdfmine::pdf {

std::optional<bool> Object::boolean() const {
  if (const auto* v = std::get_if<bool>(&value_)) return *v;
  return std::nullopt;
}

std::optional<double> Object::number() const {
  if (const auto* v = std::get_if<std::int64_t>(&value_)) return static_cast<double>(*v);
  if (const auto* v = std::get_if<double>(&value_)) return *v;
  return std::nullopt;
}

std::optional<std::int64_t> Object::integer() const {
  if (const auto* v = std::get_if<std::int64_t>(&value_)) return *v;
  if (const auto* v = std::get_if<double>(&value_)) {
    if (std::isfinite(*v) && std::abs(*v) < 9e15) return static_cast<std::int64_t>(std::llround(*v));
  }
  return std::nullopt;
}

const std::string* Object::name() const {
  if (const auto* v = std::get_if<Name>(&value_)) return &v->value;
  return nullptr;
}

const std::string* Object::string() const {
  if (const auto* v = std::get_if<PdfString>(&value_)) return &v->bytes;
  return nullptr;
}

const Array* Object::array() const {
  if (const auto* v = std::get_if<std::shared_ptr<const Array>>(&value_)) return v->get();
  return nullptr;
}

const Dict* Object::dict() const {
  if (const auto* v = std::get_if<std::shared_ptr<const Dict>>(&value_)) return v->get();
  if (const auto* v = std::get_if<std::shared_ptr<const Stream>>(&value_)) return &(*v)->dict;
  return nullptr;
}

const Stream* Object::stream() const {
  if (const auto* v = std::get_if<std::shared_ptr<const Stream>>(&value_)) return v->get();
  return nullptr;
}

std::shared_ptr<const Stream> Object::stream_ptr() const {
  if (const auto* v = std::get_if<std::shared_ptr<const Stream>>(&value_)) return *v;
  return nullptr;
}

std::optional<Ref> Object::ref() const {
  if (const auto* v = std::get_if<Ref>(&value_)) return *v;
  return std::nullopt;
}

const Object* find(const Dict& dict, std::string_view key) {
  auto it = dict.find(key);
  return it == dict.end() ? nullptr : &it->second;
}

}  // namespace pdfmine::pdf
