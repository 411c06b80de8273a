#include "netmeter/config.h"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "json_config.h"
#include "netmeter/error.h"

namespace netmeter {

namespace internal {

namespace {

using json = nlohmann::json;

const json& RequireObject(const json& obj, const char* path, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_object()) {
    throw Error(Errc::kInvalidArgument,
                fmt::format("config: '{}.{}' must be an object", path, key));
  }
  return *it;
}

bool RequireBool(const json& obj, const char* path, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_boolean()) {
    throw Error(Errc::kInvalidArgument,
                fmt::format("config: '{}.{}' must be a boolean", path, key));
  }
  return it->get<bool>();
}

}  // namespace

double RequireNumber(const json& obj, const char* path, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    throw Error(Errc::kInvalidArgument,
                fmt::format("config: '{}.{}' must be a number", path, key));
  }
  return it->get<double>();
}

nlohmann::ordered_json CaseToJson(const ExperimentCase& c) {
  nlohmann::ordered_json j;
  if (c.case_id) {
    j["id"] = *c.case_id;
  } else {
    j["id"] = "custom";
  }
  j["topology"] = ToString(c.topology);
  j["ap_side"] = ToString(c.ap_side);
  j["band"] = ToString(c.band);
  j["robot_iface"] = c.robot_iface;
  j["station_iface"] = c.station_iface;
  return j;
}

ExperimentCase CaseFromJson(const nlohmann::json& j) {
  ExperimentCase c;
  const auto& id = j.at("id");
  if (id.is_string()) {
    if (id.get<std::string>() != "custom") {
      throw Error(Errc::kInvalidArgument, "case id must be 1..10 or \"custom\"");
    }
  } else {
    c.case_id = id.get<int>();
  }
  c.topology = ParseTopology(j.at("topology").get<std::string>());
  c.ap_side = ParseApSide(j.at("ap_side").get<std::string>());
  c.band = ParseBand(j.at("band").get<std::string>());
  c.robot_iface = j.at("robot_iface").get<std::string>();
  c.station_iface = j.at("station_iface").get<std::string>();
  return c;
}

ChannelParams ChannelFromJson(const json& channel) {
  if (!channel.is_object()) {
    throw Error(Errc::kInvalidArgument, "config: 'channel' must be an object");
  }
  ChannelParams p;
  const auto& tr = RequireObject(channel, "channel", "two_ray");
  p.two_ray = TwoRayParams(RequireNumber(tr, "two_ray", "p_t_w"),
                           RequireNumber(tr, "two_ray", "g_t"),
                           RequireNumber(tr, "two_ray", "g_r"),
                           RequireNumber(tr, "two_ray", "h_t_m"),
                           RequireNumber(tr, "two_ray", "h_r_m"));

  const auto& pl = RequireObject(channel, "channel", "path_loss");
  p.path_loss = PathLossParams(RequireNumber(pl, "path_loss", "rss_d0_dbm"),
                               RequireNumber(pl, "path_loss", "eta"),
                               RequireNumber(pl, "path_loss", "d0_m"));

  const auto& sh = RequireObject(channel, "channel", "shadowing");
  std::optional<double> decorrelation;
  if (const auto it = sh.find("autocorrelation");
      it != sh.end() && !it->is_null()) {
    decorrelation = RequireNumber(*it, "shadowing.autocorrelation",
                                  "decorrelation_m");
  }
  p.shadowing =
      ShadowingParams(RequireNumber(sh, "shadowing", "sigma_db"), decorrelation);

  const auto& mp = RequireObject(channel, "channel", "multipath");
  p.multipath = MultipathParams(RequireNumber(mp, "multipath", "m_shape"),
                                RequireNumber(mp, "multipath", "omega_spread"),
                                RequireBool(mp, "multipath", "enabled"));

  const auto& lk = RequireObject(channel, "channel", "link");
  p.link = LinkParams(RequireNumber(lk, "link", "b_mhz"),
                      RequireNumber(lk, "link", "pn_dbm"),
                      RequireNumber(lk, "link", "alpha_t"),
                      RequireNumber(lk, "link", "l_bits"));
  return p;
}

nlohmann::ordered_json ChannelToJson(const ChannelParams& p) {
  nlohmann::ordered_json j;
  j["two_ray"] = {{"p_t_w", p.two_ray.p_t_w()},
                  {"g_t", p.two_ray.g_t()},
                  {"g_r", p.two_ray.g_r()},
                  {"h_t_m", p.two_ray.h_t_m()},
                  {"h_r_m", p.two_ray.h_r_m()}};
  j["path_loss"] = {{"rss_d0_dbm", p.path_loss.rss_d0_dbm()},
                    {"d0_m", p.path_loss.d0_m()},
                    {"eta", p.path_loss.eta()}};
  nlohmann::ordered_json sh = {{"sigma_db", p.shadowing.sigma_db()}};
  if (p.shadowing.decorrelation_m()) {
    sh["autocorrelation"] = {
        {"decorrelation_m", *p.shadowing.decorrelation_m()}};
  }
  j["shadowing"] = sh;
  j["multipath"] = {{"m_shape", p.multipath.m_shape()},
                    {"omega_spread", p.multipath.omega_spread()},
                    {"enabled", p.multipath.enabled()}};
  j["link"] = {{"b_mhz", p.link.b_mhz()},
               {"pn_dbm", p.link.pn_dbm()},
               {"alpha_t", p.link.alpha_t()},
               {"l_bits", p.link.l_bits()}};
  return j;
}

}  // namespace internal

ChannelParams ParseChannelConfig(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::kInvalidArgument, fmt::format("config: {}", e.what()));
  }
  const auto it = doc.find("channel");
  if (it == doc.end()) {
    throw Error(Errc::kInvalidArgument, "config: missing 'channel' object");
  }
  return internal::ChannelFromJson(*it);
}

std::string ChannelConfigToText(const ChannelParams& params) {
  nlohmann::ordered_json doc;
  doc["channel"] = internal::ChannelToJson(params);
  return doc.dump(2);
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::kIo, fmt::format("cannot open '{}'", path.string()));
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) {
    throw Error(Errc::kIo, fmt::format("read failed for '{}'", path.string()));
  }
  return ss.str();
}

}  // namespace netmeter
