#ifndef NETMETER_SRC_JSON_CONFIG_H_
#define NETMETER_SRC_JSON_CONFIG_H_

#include <nlohmann/json.hpp>

#include "netmeter/channel.h"
#include "netmeter/metrics.h"

namespace netmeter::internal {

// `channel` is the object stored under the "channel" key.
ChannelParams ChannelFromJson(const nlohmann::json& channel);
nlohmann::ordered_json ChannelToJson(const ChannelParams& params);

// Experiment case object as stored in trace headers and preset files.
ExperimentCase CaseFromJson(const nlohmann::json& j);
nlohmann::ordered_json CaseToJson(const ExperimentCase& c);

// Mandatory numeric member; throws Errc::kInvalidArgument naming `path.key`.
double RequireNumber(const nlohmann::json& obj, const char* path,
                     const char* key);

}  // namespace netmeter::internal

#endif  // NETMETER_SRC_JSON_CONFIG_H_
