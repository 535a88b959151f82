#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "didp/learning.hpp"
#include "json.hpp"

namespace didp {

namespace {

using nlohmann::json;

std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_hex_double(const json& j) {
  if (!j.is_string()) throw CorruptParamsError("weight entry is not a hex-float string");
  const std::string s = j.get<std::string>();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw CorruptParamsError("bad hex-float: " + s);
  return v;
}

json layers_to_json(const NetworkParams& p, const std::vector<LayerShape>& layers) {
  json arr = json::array();
  for (const auto& l : layers) {
    json w = json::array(), b = json::array();
    for (std::size_t k = 0; k < l.weight_count(); ++k) w.push_back(hex_double(p.values[l.offset + k]));
    for (std::size_t k = 0; k < l.rows; ++k) b.push_back(hex_double(p.values[l.bias_offset() + k]));
    arr.push_back({{"rows", l.rows}, {"cols", l.cols}, {"weights", w}, {"bias", b}});
  }
  return arr;
}

void layers_from_json(const json& arr, std::vector<LayerShape>& layers, std::vector<double>& values) {
  if (!arr.is_array()) throw CorruptParamsError("layer list is not an array");
  for (const auto& l : arr) {
    LayerShape shape{l.at("rows").get<std::size_t>(), l.at("cols").get<std::size_t>(), values.size()};
    const auto& w = l.at("weights");
    const auto& b = l.at("bias");
    if (!w.is_array() || !b.is_array() || w.size() != shape.weight_count() || b.size() != shape.rows)
      throw CorruptParamsError("layer arrays do not match the declared shape");
    for (const auto& v : w) values.push_back(parse_hex_double(v));
    for (const auto& v : b) values.push_back(parse_hex_double(v));
    layers.push_back(shape);
  }
}

void check_chain(const NetworkParams& p) {
  if (p.encoder.empty() || p.trunk.empty()) throw CorruptParamsError("network has no layers");
  std::size_t width = p.input_width;
  for (const auto& l : p.encoder) {
    if (l.cols != width) throw CorruptParamsError("encoder layer shapes do not chain");
    width = l.rows;
  }
  width = p.head == HeadKind::kCritic ? width : 2 * width;
  for (const auto& l : p.trunk) {
    if (l.cols != width) throw CorruptParamsError("trunk layer shapes do not chain");
    width = l.rows;
  }
  const std::size_t expected =
      p.head != HeadKind::kCritic && p.layout() == ActionLayout::kCurrentElement ? 2 : 1;
  if (width != expected) throw CorruptParamsError("output width does not match the head");
  if (p.input_width != feature_width(p.domain)) throw CorruptParamsError("input width does not match the domain");
}

}  // namespace

std::string params_to_json(const NetworkParams& p) {
  json doc;
  doc["format"] = "didp-network";
  doc["version"] = kParamsFormatVersion;
  doc["domain"] = domain_name(p.domain);
  doc["head"] = head_name(p.head);
  doc["input_width"] = p.input_width;
  doc["encoder"] = layers_to_json(p, p.encoder);
  doc["trunk"] = layers_to_json(p, p.trunk);
  return doc.dump(1) + "\n";
}

NetworkParams params_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw CorruptParamsError(std::string("weight file is not valid JSON: ") + e.what());
  }
  try {
    if (!doc.is_object() || doc.value("format", "") != "didp-network")
      throw CorruptParamsError("not a network weight file");
    const int version = doc.at("version").get<int>();
    if (version != kParamsFormatVersion)
      throw ParamsVersionError("weight file version " + std::to_string(version) + " is not supported (expected " +
                               std::to_string(kParamsFormatVersion) + ")");
    NetworkParams p;
    try {
      p.domain = parse_domain(doc.at("domain").get<std::string>());
    } catch (const UnsupportedDomainError& e) {
      throw CorruptParamsError(e.what());
    }
    p.head = parse_head(doc.at("head").get<std::string>());
    p.input_width = doc.at("input_width").get<std::size_t>();
    layers_from_json(doc.at("encoder"), p.encoder, p.values);
    layers_from_json(doc.at("trunk"), p.trunk, p.values);
    check_chain(p);
    return p;
  } catch (const json::exception& e) {
    throw CorruptParamsError(std::string("malformed weight file: ") + e.what());
  }
}

void save_params(const NetworkParams& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write weight file: " + path);
  out << params_to_json(p);
  if (!out) throw Error("failed writing weight file: " + path);
}

NetworkParams load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read weight file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return params_from_json(ss.str());
}

}  // namespace didp
