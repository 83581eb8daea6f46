#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace litatlas::binio {

static_assert(std::endian::native == std::endian::little,
              "snapshot arrays are stored little-endian; big-endian hosts are not supported");

template <typename T>
constexpr std::string_view dtype_name();
template <>
constexpr std::string_view dtype_name<double>() { return "f64"; }
template <>
constexpr std::string_view dtype_name<std::uint32_t>() { return "u32"; }
template <>
constexpr std::string_view dtype_name<std::uint64_t>() { return "u64"; }

/// Flat binary payload plus the JSON header describing it:
/// {"format", "byte_order", "arrays": [{name, dtype, shape, offset, bytes}], ...}.
class Writer {
 public:
  explicit Writer(nlohmann::json header = nlohmann::json::object()) : header_(std::move(header)) {
    header_["format"] = "litatlas-binary-v1";
    header_["byte_order"] = "little";
    header_["arrays"] = nlohmann::json::array();
  }

  template <typename T>
  void add(std::string_view name, std::span<const T> data, std::vector<std::uint64_t> shape) {
    std::size_t bytes = data.size() * sizeof(T);
    header_["arrays"].push_back({{"name", name},
                                 {"dtype", dtype_name<T>()},
                                 {"shape", std::move(shape)},
                                 {"offset", payload_.size()},
                                 {"bytes", bytes}});
    std::size_t at = payload_.size();
    payload_.resize(at + bytes);
    if (bytes > 0) std::memcpy(payload_.data() + at, data.data(), bytes);
  }

  const std::string& payload() const { return payload_; }
  std::string header_text() const { return header_.dump(2); }

 private:
  nlohmann::json header_;
  std::string payload_;
};

/// Reads arrays back; throws std::runtime_error on any inconsistency, which
/// callers translate to a snapshot corruption error.
class Reader {
 public:
  Reader(const nlohmann::json& header, std::string_view payload)
      : header_(header), payload_(payload) {
    if (header_.value("format", "") != "litatlas-binary-v1" ||
        header_.value("byte_order", "") != "little") {
      throw std::runtime_error("unsupported binary header");
    }
  }

  template <typename T>
  std::vector<T> get(std::string_view name, std::vector<std::uint64_t>* shape = nullptr) const {
    for (const auto& a : header_.at("arrays")) {
      if (a.at("name").get<std::string>() != name) continue;
      if (a.at("dtype").get<std::string>() != dtype_name<T>()) {
        throw std::runtime_error("dtype mismatch for " + std::string(name));
      }
      auto offset = a.at("offset").get<std::uint64_t>();
      auto bytes = a.at("bytes").get<std::uint64_t>();
      auto dims = a.at("shape").get<std::vector<std::uint64_t>>();
      std::uint64_t count = 1;
      for (auto d : dims) count *= d;
      if (bytes != count * sizeof(T) || offset + bytes > payload_.size()) {
        throw std::runtime_error("array " + std::string(name) + " out of bounds");
      }
      std::vector<T> out(count);
      if (bytes > 0) std::memcpy(out.data(), payload_.data() + offset, bytes);
      if (shape != nullptr) *shape = std::move(dims);
      return out;
    }
    throw std::runtime_error("missing array " + std::string(name));
  }

 private:
  const nlohmann::json& header_;
  std::string_view payload_;
};

}  // namespace litatlas::binio
