#pragma once

#include <string>
#include <string_view>

#include "scancor/ip.hpp"

namespace scancor {

enum class Proto { tcp, udp, icmp, other };

Proto proto_from_token(std::string_view token);
const char* proto_name(Proto p);

/// One summarized connection from a flow log. Both endpoints are always of
/// the same address family.
struct ConnRecord {
  double ts = 0;  // seconds since epoch
  IpAddress orig_ip;
  uint16_t orig_port = 0;
  IpAddress resp_ip;
  uint16_t resp_port = 0;
  Proto proto = Proto::other;
  std::string conn_state;  // monitor state token, kept verbatim
  std::string history;     // per-packet event letters; empty when unset
};

/// Limits visibility to one monitored network, as a sensor placed on that
/// network would. A record is visible when either endpoint is inside.
struct SubnetFilter {
  Cidr cidr;

  bool matches(const ConnRecord& r) const {
    return cidr.contains(r.orig_ip) || cidr.contains(r.resp_ip);
  }
};

}  // namespace scancor
