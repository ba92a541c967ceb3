// Copyright 2026 The itm Authors
// SPDX-License-Identifier: Apache-2.0

#include "itm/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "itm/config.hpp"
#include "itm/hdr_io.hpp"

namespace itm {

using nlohmann::json;

namespace {

constexpr int kFormat = 1;

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v)
{
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float f)
{
  const auto v = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

float get_f32(const std::uint8_t* p)
{
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return std::bit_cast<float>(v);
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const TrainState& state, const json& echo)
{
  const auto& params = state.network.params();
  const bool with_adam = state.adam.m.size() == params.size();

  json table = json::array();
  std::vector<std::uint8_t> payload;
  std::size_t offset = 0;
  auto emit = [&](const std::string& name, const char* role, const Tensor<float>& t) {
    table.push_back({{"name", name}, {"role", role}, {"shape", t.shape().dims()}, {"offset", offset},
                     {"count", t.size()}});
    for (float f : t.data())
      put_f32(payload, f);
    offset += t.size();
  };
  for (std::size_t i = 0; i < params.size(); ++i)
    emit(params[i].name, "param", params[i].value);
  if (with_adam) {
    for (std::size_t i = 0; i < params.size(); ++i)
      emit(params[i].name, "adam_m", state.adam.m[i]);
    for (std::size_t i = 0; i < params.size(); ++i)
      emit(params[i].name, "adam_v", state.adam.v[i]);
  }

  json header = {{"format", kFormat},
                 {"network", to_json(state.network.config())},
                 {"iteration", state.iteration},
                 {"echo", echo},
                 {"tensors", table}};
  if (with_adam)
    header["adam"] = {{"step", state.adam.step},
                      {"beta1", state.adam.hyper.beta1},
                      {"beta2", state.adam.hyper.beta2},
                      {"epsilon", state.adam.hyper.epsilon}};
  else
    header["adam"] = nullptr;

  const std::string text = header.dump();
  std::vector<std::uint8_t> bytes(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  put_u64(bytes, text.size());
  bytes.insert(bytes.end(), text.begin(), text.end());
  bytes.insert(bytes.end(), payload.begin(), payload.end());
  write_file_bytes(path, bytes);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path)
{
  const auto bytes = read_file_bytes(path);
  const std::string where = path.string();
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0)
    throw InputError(where + ": not a checkpoint (bad magic)");
  std::uint64_t hlen = 0;
  for (int i = 0; i < 8; ++i)
    hlen |= static_cast<std::uint64_t>(bytes[8 + i]) << (8 * i);
  if (hlen > bytes.size() - 16)
    throw InputError(where + ": header length " + std::to_string(hlen) + " exceeds file size");

  json header;
  try {
    header = json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(hlen));
  } catch (const json::exception& e) {
    throw InputError(where + ": corrupt header: " + e.what());
  }
  const std::uint8_t* payload = bytes.data() + 16 + hlen;
  const std::size_t payload_floats = (bytes.size() - 16 - hlen) / 4;

  try {
    if (header.at("format").get<int>() != kFormat)
      throw InputError(where + ": unsupported checkpoint format " + header.at("format").dump());
    const HisnConfig cfg = network_from_json(header.at("network"));

    ParameterSet<float> params;
    std::vector<Tensor<float>> m, v;
    for (const auto& e : header.at("tensors")) {
      const auto offset = e.at("offset").get<std::size_t>();
      const auto count = e.at("count").get<std::size_t>();
      const Shape shape(e.at("shape").get<std::vector<std::size_t>>());
      if (shape.numel() != count || offset + count > payload_floats || offset + count < offset)
        throw InputError(where + ": tensor '" + e.at("name").get<std::string>() + "' is out of bounds");
      std::vector<float> data(count);
      for (std::size_t i = 0; i < count; ++i)
        data[i] = get_f32(payload + 4 * (offset + i));
      Tensor<float> t(shape, std::move(data));
      const auto role = e.at("role").get<std::string>();
      if (role == "param") {
        for (float f : t.data())
          if (!std::isfinite(f))
            throw InputError(where + ": parameter '" + e.at("name").get<std::string>() + "' is not finite");
        params.add(e.at("name").get<std::string>(), std::move(t));
      } else if (role == "adam_m") {
        m.push_back(std::move(t));
      } else if (role == "adam_v") {
        v.push_back(std::move(t));
      } else {
        throw InputError(where + ": unknown tensor role '" + role + "'");
      }
    }

    HisnNetwork<float> net(cfg, std::move(params));
    AdamState<float> adam;
    if (!header.at("adam").is_null()) {
      const auto& a = header["adam"];
      adam.hyper = {a.at("beta1").get<double>(), a.at("beta2").get<double>(), a.at("epsilon").get<double>()};
      adam.step = a.at("step").get<std::int64_t>();
      if (m.size() != net.params().size() || v.size() != net.params().size())
        throw InputError(where + ": optimizer state does not cover every parameter");
      for (std::size_t i = 0; i < m.size(); ++i)
        if (m[i].shape() != net.params()[i].value.shape() || v[i].shape() != net.params()[i].value.shape())
          throw InputError(where + ": optimizer state shape mismatch for '" + net.params()[i].name + "'");
      adam.m = std::move(m);
      adam.v = std::move(v);
    } else {
      adam = make_adam_state(net.params());
    }
    const auto iteration = header.at("iteration").get<std::size_t>();
    return LoadedCheckpoint{TrainState{std::move(net), std::move(adam), iteration}, header.value("echo", json::object())};
  } catch (const json::exception& e) {
    throw InputError(where + ": malformed header: " + e.what());
  } catch (const ConfigError& e) {
    throw InputError(where + ": stored network config is invalid: " + e.what());
  }
}

} // namespace itm
