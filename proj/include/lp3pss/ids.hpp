#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>

#include "lp3pss/errors.hpp"

namespace lp3pss {

// Identifier of a secondary user. Ids are never reused within one simulation.
struct UserId {
  std::uint32_t value = 0;

  constexpr auto operator<=>(const UserId&) const = default;
};

enum class Role : std::uint8_t { kFusionCenter = 0, kGateway = 1, kUser = 2 };

// One protocol participant: the fusion center, the gateway, or user U<index>.
struct EntityId {
  Role role = Role::kUser;
  std::uint32_t index = 0;

  static constexpr EntityId fusion_center() { return {Role::kFusionCenter, 0}; }
  static constexpr EntityId gateway() { return {Role::kGateway, 0}; }
  static constexpr EntityId user(UserId id) { return {Role::kUser, id.value}; }

  constexpr bool is_user() const { return role == Role::kUser; }
  constexpr UserId user_id() const { return UserId{index}; }

  constexpr auto operator<=>(const EntityId&) const = default;

  std::string str() const {
    switch (role) {
      case Role::kFusionCenter:
        return "FC";
      case Role::kGateway:
        return "GW";
      case Role::kUser:
        return "U" + std::to_string(index);
    }
    return "?";
  }

  static EntityId parse(const std::string& s) {
    if (s == "FC") return fusion_center();
    if (s == "GW") return gateway();
    if (s.size() >= 2 && s[0] == 'U') {
      std::uint32_t v = 0;
      for (std::size_t i = 1; i < s.size(); ++i) {
        if (s[i] < '0' || s[i] > '9') throw InvalidArgument("bad entity id: " + s);
        v = v * 10 + static_cast<std::uint32_t>(s[i] - '0');
      }
      return user(UserId{v});
    }
    throw InvalidArgument("bad entity id: " + s);
  }
};

inline std::ostream& operator<<(std::ostream& os, const EntityId& e) { return os << e.str(); }
inline std::ostream& operator<<(std::ostream& os, const UserId& u) { return os << "U" << u.value; }

}  // namespace lp3pss

template <>
struct std::hash<lp3pss::UserId> {
  std::size_t operator()(const lp3pss::UserId& u) const noexcept { return std::hash<std::uint32_t>{}(u.value); }
};
