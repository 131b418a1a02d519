#ifndef UIVNAV__JSON_FIELDS_HPP_
#define UIVNAV__JSON_FIELDS_HPP_

#include <set>
#include <string>
#include <utility>

#include "json.hpp"
#include "uivnav/common.hpp"

namespace uivnav
{

/// Strict reader over a JSON object: every read is type-checked, errors name the
/// offending field, and finish() rejects keys nobody asked for.
class JsonFields
{
public:
  JsonFields(const nlohmann::json & j, std::string context)
  : j_(j), context_(std::move(context))
  {
    if (!j_.is_object()) {
      throw ParseError(context_ + ": expected an object");
    }
  }

  bool has(const std::string & key) const {return j_.contains(key);}

  template<class T>
  T require(const std::string & key)
  {
    if (!j_.contains(key)) {
      throw ParseError(context_ + ": missing field '" + key + "'");
    }
    return read<T>(key);
  }

  template<class T>
  void optional(const std::string & key, T & out)
  {
    if (j_.contains(key)) {
      out = read<T>(key);
    }
  }

  const nlohmann::json & sub(const std::string & key)
  {
    if (!j_.contains(key)) {
      throw ParseError(context_ + ": missing field '" + key + "'");
    }
    used_.insert(key);
    return j_.at(key);
  }

  std::string field_path(const std::string & key) const {return context_ + "." + key;}

  void finish() const
  {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) {
        throw ParseError(context_ + ": unknown field '" + it.key() + "'");
      }
    }
  }

private:
  template<class T>
  T read(const std::string & key)
  {
    used_.insert(key);
    const auto & v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) {throw ParseError("");}
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) {throw ParseError("");}
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) {throw ParseError("");}
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) {throw ParseError("");}
      }
      return v.get<T>();
    } catch (const std::exception &) {
      throw ParseError(context_ + ": field '" + key + "' has the wrong type");
    }
  }

  const nlohmann::json & j_;
  std::string context_;
  std::set<std::string> used_;
};

}  // namespace uivnav

#endif  // UIVNAV__JSON_FIELDS_HPP_
