#include "scancor/ip.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <bit>
#include <charconv>

namespace scancor {

std::optional<IpAddress> IpAddress::parse(std::string_view text) {
  if (text.empty() || text.size() > 45) return std::nullopt;
  char buf[46];
  std::memcpy(buf, text.data(), text.size());
  buf[text.size()] = '\0';

  IpAddress out;
  if (text.find(':') != std::string_view::npos) {
    if (inet_pton(AF_INET6, buf, out.bytes_.data()) != 1) return std::nullopt;
    out.nbytes_ = 16;
  } else {
    if (inet_pton(AF_INET, buf, out.bytes_.data()) != 1) return std::nullopt;
    out.nbytes_ = 4;
  }
  return out;
}

IpAddress IpAddress::from_bytes(const uint8_t* data, int nbytes) {
  IpAddress out;
  out.nbytes_ = (uint8_t)nbytes;
  std::memcpy(out.bytes_.data(), data, (size_t)nbytes);
  return out;
}

IpAddress IpAddress::v4_from_u32(uint32_t value) {
  uint8_t b[4] = {(uint8_t)(value >> 24), (uint8_t)(value >> 16),
                  (uint8_t)(value >> 8), (uint8_t)value};
  return from_bytes(b, 4);
}

std::string IpAddress::to_string() const {
  char buf[INET6_ADDRSTRLEN];
  const char* s = inet_ntop(nbytes_ == 4 ? AF_INET : AF_INET6, bytes_.data(),
                            buf, sizeof(buf));
  return s ? std::string(s) : std::string();
}

int common_prefix_bits(const IpAddress& a, const IpAddress& b) {
  int bits = 0;
  for (int i = 0; i < a.byte_count(); ++i) {
    uint8_t x = a.bytes()[(size_t)i] ^ b.bytes()[(size_t)i];
    if (x == 0) {
      bits += 8;
      continue;
    }
    bits += std::countl_zero(x);
    break;
  }
  return std::min(bits, a.bit_width());
}

std::optional<Cidr> Cidr::parse(std::string_view text) {
  std::string_view addr = text;
  int prefix = -1;
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    addr = text.substr(0, slash);
    std::string_view p = text.substr(slash + 1);
    int v = 0;
    auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), v);
    if (ec != std::errc{} || ptr != p.data() + p.size() || v < 0)
      return std::nullopt;
    prefix = v;
  }
  auto ip = IpAddress::parse(addr);
  if (!ip) return std::nullopt;
  if (prefix < 0) prefix = ip->bit_width();
  if (prefix > ip->bit_width()) return std::nullopt;
  // A prefix with set host bits is almost always a typo; refuse it.
  for (int i = prefix; i < ip->bit_width(); ++i)
    if (ip->bit(i)) return std::nullopt;
  Cidr out;
  out.base_ = *ip;
  out.prefix_ = prefix;
  return out;
}

Cidr Cidr::from_prefix(const IpAddress& addr, int prefix) {
  std::array<uint8_t, 16> b = addr.bytes();
  for (int i = prefix; i < addr.bit_width(); ++i)
    b[(size_t)(i >> 3)] &= (uint8_t)~(1u << (7 - (i & 7)));
  Cidr out;
  out.base_ = IpAddress::from_bytes(b.data(), addr.byte_count());
  out.prefix_ = prefix;
  return out;
}

bool Cidr::contains(const IpAddress& ip) const {
  if (ip.version() != base_.version()) return false;
  return common_prefix_bits(base_, ip) >= prefix_;
}

std::string Cidr::to_string() const {
  return base_.to_string() + "/" + std::to_string(prefix_);
}

IpAddress ip_add_offset(const IpAddress& base, uint64_t offset) {
  std::array<uint8_t, 16> b = base.bytes();
  int lsb = base.byte_count() - 1;
  for (int i = 0; i < 8 && i <= lsb; ++i) {
    uint64_t sum = (uint64_t)b[(size_t)(lsb - i)] + (offset & 0xff);
    b[(size_t)(lsb - i)] = (uint8_t)sum;
    offset = (offset >> 8) + (sum >> 8);
  }
  return IpAddress::from_bytes(b.data(), base.byte_count());
}

}  // namespace scancor
