#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>

#include "mlad/io.hpp"
#include "mlad/model.hpp"

namespace mlad {

inline constexpr int kModelFormatVersion = 1;

/// 64-bit FNV-1a, fed incrementally.
class Fnv1a64 {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= b[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 8);
  }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  std::uint64_t value() const noexcept { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

/// Digest of everything a model file means: config, window length, names,
/// shapes and the exact bit patterns of every parameter.
inline std::string model_checksum(const Model& m) {
  Fnv1a64 h;
  h.str(model_config_to_json(m.config).dump());
  h.u64(m.window_length);
  for_each_parameter(m.params, [&](const std::string& name, const Tensor& t) {
    h.str(name);
    h.u64(t.rank());
    for (std::size_t d : t.shape()) h.u64(d);
    for (double v : t.data()) h.u64(std::bit_cast<std::uint64_t>(v));
  });
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h.value()));
  return buf;
}

/// Numbers are written in shortest round-trip form, so reloading restores
/// every double bit for bit.
inline std::string serialize_model(const Model& m) {
  for_each_parameter(m.params, [&](const std::string& name, const Tensor& t) {
    if (!t.all_finite()) throw Error("invalid_model", "parameter " + name + " holds a non-finite value");
  });
  Json j;
  j["format_version"] = kModelFormatVersion;
  j["config"] = model_config_to_json(m.config);
  j["window_length"] = m.window_length;
  j["checksum"] = model_checksum(m);
  Json params = Json::object();
  for_each_parameter(m.params, [&](const std::string& name, const Tensor& t) {
    params[name] = {{"shape", t.shape()}, {"data", t.vec()}};
  });
  j["parameters"] = std::move(params);
  return j.dump() + "\n";
}

inline Model deserialize_model(const std::string& text, const std::string& source = "model") {
  using namespace detail;
  const Where w{source};
  const Json j = parse_json(text, w);
  only_keys(j, {"format_version", "config", "window_length", "checksum", "parameters"}, w);
  const Json& ver = field(j, "format_version", w);
  if (!ver.is_number_integer() || ver.get<std::int64_t>() != kModelFormatVersion)
    throw Error("version_mismatch", source + ": unsupported format_version " + ver.dump() + " (expected " +
                                        std::to_string(kModelFormatVersion) + ")");
  Model m;
  m.config = model_config_from_json(field(j, "config", w), source + ".config");
  m.window_length = as_uint(field(j, "window_length", w), w.at("window_length"));
  m.params = zero_parameters(m.config);

  const Json& params = field(j, "parameters", w);
  if (!params.is_object()) bad(w.at("parameters"), "expected an object");
  std::size_t matched = 0;
  for_each_parameter(m.params, [&](const std::string& name, Tensor& t) {
    auto it = params.find(name);
    if (it == params.end()) throw Error("invalid_model", source + ": missing parameter " + name);
    const Where pw = w.at("parameters").at(name);
    only_keys(*it, {"shape", "data"}, pw);
    Shape shape;
    for (const Json& d : as_array(field(*it, "shape", pw), pw.at("shape"))) shape.push_back(as_uint(d, pw.at("shape")));
    if (shape != t.shape())
      throw Error("invalid_model", source + ": parameter " + name + " has shape " + shape_str(shape) + ", expected " +
                                       shape_str(t.shape()));
    const Json& data = as_array(field(*it, "data", pw), pw.at("data"));
    if (data.size() != t.size()) bad(pw.at("data"), "expected " + std::to_string(t.size()) + " values");
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = as_number(data[i], pw.at("data"));
    ++matched;
  });
  if (matched != params.size()) {
    const auto expected = parameter_names(m.params);
    for (const auto& [k, v] : params.items())
      if (std::find(expected.begin(), expected.end(), k) == expected.end())
        throw Error("invalid_model", source + ": unexpected parameter " + k);
  }
  const std::string stored = as_string(field(j, "checksum", w), w.at("checksum"));
  if (stored != model_checksum(m)) throw Error("checksum_mismatch", source + ": checksum does not match contents");
  return m;
}

inline void save_model(const Model& m, const std::string& path) { write_text_file(path, serialize_model(m)); }
inline Model load_model(const std::string& path) { return deserialize_model(read_text_file(path), path); }

}  // namespace mlad
