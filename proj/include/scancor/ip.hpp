#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <string_view>

namespace scancor {

/// IPv4 or IPv6 address held as network-order bytes. Addresses order by
/// (version, byte string), so all v4 addresses sort before all v6 ones and
/// within a family the order matches numeric order.
class IpAddress {
public:
  IpAddress() = default;

  static std::optional<IpAddress> parse(std::string_view text);
  static IpAddress from_bytes(const uint8_t* data, int nbytes);
  static IpAddress v4_from_u32(uint32_t value);

  int version() const { return nbytes_ == 4 ? 4 : 6; }
  int byte_count() const { return nbytes_; }
  int bit_width() const { return nbytes_ * 8; }
  const std::array<uint8_t, 16>& bytes() const { return bytes_; }

  /// Bit i counted from the most significant bit of the first byte.
  int bit(int i) const { return (bytes_[i >> 3] >> (7 - (i & 7))) & 1; }

  std::string to_string() const;

  friend bool operator==(const IpAddress&, const IpAddress&) = default;
  friend auto operator<=>(const IpAddress&, const IpAddress&) = default;

private:
  // Declaration order drives the defaulted comparisons: version first.
  uint8_t nbytes_ = 4;
  std::array<uint8_t, 16> bytes_{};
};

struct IpHash {
  size_t operator()(const IpAddress& ip) const {
    uint64_t h = 0xcbf29ce484222325ULL ^ (uint64_t)ip.byte_count();
    for (int i = 0; i < ip.byte_count(); ++i) {
      h ^= ip.bytes()[(size_t)i];
      h *= 0x100000001b3ULL;
    }
    return (size_t)h;
  }
};

/// Length of the shared leading bit prefix. Both addresses must belong to
/// the same family.
int common_prefix_bits(const IpAddress& a, const IpAddress& b);

/// Network prefix. parse() is strict and rejects set host bits;
/// from_prefix() masks them off instead.
class Cidr {
public:
  Cidr() = default;

  static std::optional<Cidr> parse(std::string_view text);
  static Cidr from_prefix(const IpAddress& addr, int prefix);

  const IpAddress& base() const { return base_; }
  int prefix() const { return prefix_; }
  int host_bits() const { return base_.bit_width() - prefix_; }

  bool contains(const IpAddress& ip) const;
  std::string to_string() const;

  friend bool operator==(const Cidr&, const Cidr&) = default;

private:
  IpAddress base_;
  int prefix_ = 0;
};

/// addr + offset with carry propagation through the low 8 bytes.
IpAddress ip_add_offset(const IpAddress& base, uint64_t offset);

}  // namespace scancor
