#include "vdasap/persistence.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace vdasap {

using nlohmann::json;

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::kIo, "cannot move output into place at " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

json net_to_json(const Mlp& net) {
  json layers = json::array();
  const auto params = net.parameters();
  for (const auto& layer : net.layers()) {
    const auto w = params.subspan(layer.weight_offset, static_cast<std::size_t>(layer.in) * layer.out);
    const auto b = params.subspan(layer.bias_offset, layer.out);
    layers.push_back({{"in", layer.in},
                      {"out", layer.out},
                      {"weights", std::vector<double>(w.begin(), w.end())},
                      {"bias", std::vector<double>(b.begin(), b.end())}});
  }
  return json{{"layers", layers}};
}

void net_from_json(const json& j, Mlp& net) {
  const auto& layers = j.at("layers");
  if (layers.size() != net.layers().size()) {
    throw Error(ErrorCode::kFormat, "stored network depth does not match its architecture");
  }
  auto params = net.parameters();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& spec = net.layers()[l];
    const auto w = layers[l].at("weights").get<std::vector<double>>();
    const auto b = layers[l].at("bias").get<std::vector<double>>();
    if (layers[l].at("in").get<int>() != spec.in || layers[l].at("out").get<int>() != spec.out ||
        w.size() != static_cast<std::size_t>(spec.in) * spec.out ||
        b.size() != static_cast<std::size_t>(spec.out)) {
      throw Error(ErrorCode::kFormat, "layer " + std::to_string(l) + " has the wrong shape");
    }
    std::copy(w.begin(), w.end(), params.begin() + spec.weight_offset);
    std::copy(b.begin(), b.end(), params.begin() + spec.bias_offset);
  }
  for (double v : params)
    if (!std::isfinite(v)) throw Error(ErrorCode::kFormat, "stored weights are not finite");
}

json fingerprint_to_json(const ScenarioFingerprint& fp) {
  return {{"total_units", fp.total_units},
          {"consumers", fp.consumers},
          {"lot_count", fp.lot_count},
          {"reserve_price", fp.reserve_price},
          {"distribution", fp.distribution}};
}

ScenarioFingerprint fingerprint_from_json(const json& j) {
  ScenarioFingerprint fp;
  fp.total_units = j.at("total_units").get<int>();
  fp.consumers = j.at("consumers").get<int>();
  fp.lot_count = j.at("lot_count").get<int>();
  fp.reserve_price = j.at("reserve_price").get<double>();
  fp.distribution = j.at("distribution").get<std::string>();
  return fp;
}

}  // namespace

std::string serialize_mechanism(const MechanismParams& params) {
  json j;
  j["format"] = "vdasap-mechanism";
  j["version"] = kMechanismFormatVersion;
  j["architecture"] = {{"inputs", params.allocation_net.input_width()},
                       {"hidden", params.hidden},
                       {"outputs", params.allocation_net.output_width()},
                       {"activation", params.activation}};
  j["fingerprint"] = fingerprint_to_json(params.fingerprint);
  j["scaling"] = {{"reserve", params.scaling.reserve}, {"upper", params.scaling.upper}};
  j["seed"] = params.seed;
  j["allocation_net"] = net_to_json(params.allocation_net);
  j["payment_net"] = net_to_json(params.payment_net);
  return j.dump() + "\n";
}

MechanismParams parse_mechanism(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("mechanism file is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "vdasap-mechanism") {
      throw Error(ErrorCode::kFormat, "not a mechanism file");
    }
    if (j.at("version").get<int>() != kMechanismFormatVersion) {
      throw Error(ErrorCode::kFormat, "unsupported mechanism file version");
    }
    if (j.at("architecture").at("activation").get<std::string>() != "relu") {
      throw Error(ErrorCode::kFormat, "unsupported activation");
    }
    const auto fp = fingerprint_from_json(j.at("fingerprint"));
    InputScaling scaling{j.at("scaling").at("reserve").get<double>(),
                         j.at("scaling").at("upper").get<double>()};
    auto params = MechanismParams::initialize(
        fp, scaling, j.at("architecture").at("hidden").get<std::vector<int>>(),
        j.at("seed").get<std::uint64_t>());
    net_from_json(j.at("allocation_net"), params.allocation_net);
    net_from_json(j.at("payment_net"), params.payment_net);
    return params;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("malformed mechanism file: ") + e.what());
  }
}

void save_mechanism(const MechanismParams& params, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_mechanism(params));
}

MechanismParams load_mechanism(const std::filesystem::path& path,
                               const std::optional<ScenarioFingerprint>& expected) {
  auto params = parse_mechanism(read_file(path));
  if (expected && !(*expected == params.fingerprint)) {
    throw Error(ErrorCode::kFingerprintMismatch,
                path.string() + " was trained for a different scenario");
  }
  return params;
}

}  // namespace vdasap
