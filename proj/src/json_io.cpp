#include "trajpred/json_io.hpp"

#include <fstream>
#include <stdexcept>

namespace trajpred {

using nlohmann::json;

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << j.dump(1) << '\n';
}

json read_json(const std::string& path, const std::string& expect_format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": invalid json: " + e.what());
  }
  const std::string fmt = j.value("format", "");
  if (fmt != expect_format) {
    throw std::runtime_error(path + ": expected format '" + expect_format + "', found '" + fmt +
                             "'");
  }
  return j;
}

json net_to_json(const Mlp& net) {
  json j;
  j["sizes"] = net.sizes;
  j["weights"] = net.w;
  j["biases"] = net.b;
  return j;
}

Mlp net_from_json(const json& j) {
  Mlp net;
  net.sizes = j.at("sizes").get<std::vector<int>>();
  net.w = j.at("weights").get<std::vector<std::vector<double>>>();
  net.b = j.at("biases").get<std::vector<std::vector<double>>>();
  if (net.sizes.size() < 2 || net.w.size() != net.sizes.size() - 1 || net.b.size() != net.w.size()) {
    throw std::runtime_error("malformed network json");
  }
  for (std::size_t l = 0; l + 1 < net.sizes.size(); ++l) {
    const std::size_t expect = static_cast<std::size_t>(net.sizes[l]) * net.sizes[l + 1];
    if (net.w[l].size() != expect || net.b[l].size() != static_cast<std::size_t>(net.sizes[l + 1])) {
      throw std::runtime_error("malformed network json: layer shape mismatch");
    }
  }
  return net;
}

json stats_to_json(const NormStats& s) {
  json j;
  j["names"] = s.names;
  j["mean"] = s.mean;
  j["std"] = s.std_dev;
  j["min"] = s.min_v;
  j["max"] = s.max_v;
  return j;
}

NormStats stats_from_json(const json& j) {
  NormStats s;
  s.names = j.at("names").get<std::vector<std::string>>();
  s.mean = j.at("mean").get<std::vector<double>>();
  s.std_dev = j.at("std").get<std::vector<double>>();
  s.min_v = j.at("min").get<std::vector<double>>();
  s.max_v = j.at("max").get<std::vector<double>>();
  if (s.mean.size() != s.names.size() || s.std_dev.size() != s.names.size() ||
      s.min_v.size() != s.names.size() || s.max_v.size() != s.names.size()) {
    throw std::runtime_error("malformed stats json");
  }
  return s;
}

}  // namespace trajpred
