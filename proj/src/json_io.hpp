#ifndef POLYTRAJ_SRC_JSON_IO_HPP
#define POLYTRAJ_SRC_JSON_IO_HPP

#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cstdio>
#include <string>

namespace polytraj::detail {

using ordered_json = nlohmann::ordered_json;

inline std::string format_number(const ordered_json& j) {
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (v == 0.0) return "0";  // canonical zero, sign dropped
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }
  return j.dump();
}

// Serializer with fixed float formatting; nlohmann's own dump would use
// shortest-round-trip notation instead of the documented 17 digits.
inline void dump_json(const ordered_json& j, std::string& out, int indent) {
  const std::string pad(indent, ' ');
  if (j.is_object()) {
    out += "{\n";
    std::size_t i = 0;
    for (auto it = j.begin(); it != j.end(); ++it, ++i) {
      out += pad + "  \"" + it.key() + "\": ";
      dump_json(it.value(), out, indent + 2);
      if (i + 1 < j.size()) out += ",";
      out += "\n";
    }
    out += pad + "}";
  } else if (j.is_array()) {
    const bool flat = std::all_of(j.begin(), j.end(), [](const ordered_json& e) {
      return e.is_number();
    });
    if (flat) {
      out += "[";
      for (std::size_t i = 0; i < j.size(); ++i) {
        out += format_number(j[i]);
        if (i + 1 < j.size()) out += ", ";
      }
      out += "]";
    } else {
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        out += pad + "  ";
        dump_json(j[i], out, indent + 2);
        if (i + 1 < j.size()) out += ",";
        out += "\n";
      }
      out += pad + "]";
    }
  } else if (j.is_number()) {
    out += format_number(j);
  } else {
    out += j.dump();
  }
}

inline std::string dump_document(const ordered_json& j) {
  std::string out;
  dump_json(j, out, 0);
  out += "\n";
  return out;
}

inline Eigen::VectorXd json_to_vector(const ordered_json& j,
                                      const std::string& field) {
  if (!j.is_array())
    throw std::invalid_argument(field + ": expected an array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number())
      throw std::invalid_argument(field + ": expected numbers");
    v(i) = j[i].get<double>();
  }
  return v;
}

inline ordered_json vector_to_json(const Eigen::VectorXd& v) {
  ordered_json a = ordered_json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

}  // namespace polytraj::detail

#endif
