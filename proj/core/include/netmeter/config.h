#ifndef NETMETER_CONFIG_H_
#define NETMETER_CONFIG_H_

#include <filesystem>
#include <string>
#include <string_view>

#include "netmeter/channel.h"

namespace netmeter {

// Reads the "channel" object of a config document (same text object format
// as trace headers):
//
//   {"channel": {
//      "two_ray":   {"p_t_w":..,"g_t":..,"g_r":..,"h_t_m":..,"h_r_m":..},
//      "path_loss": {"rss_d0_dbm":..,"d0_m":..,"eta":..},
//      "shadowing": {"sigma_db":.., "autocorrelation": {"decorrelation_m":..}},
//      "multipath": {"m_shape":..,"omega_spread":..,"enabled":..},
//      "link":      {"b_mhz":..,"pn_dbm":..,"alpha_t":..,"l_bits":..}}}
//
// Every field is mandatory except the autocorrelation block. Throws
// Errc::kInvalidArgument naming the missing or invalid field.
ChannelParams ParseChannelConfig(std::string_view text);

std::string ChannelConfigToText(const ChannelParams& params);

// Whole-file read; throws Errc::kIo.
std::string ReadTextFile(const std::filesystem::path& path);

}  // namespace netmeter

#endif  // NETMETER_CONFIG_H_
