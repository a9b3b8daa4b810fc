#pragma once

#include <compare>
#include <cstdint>
#include <ostream>

namespace geodrift {

template <class Tag>
struct Id {
  std::int64_t value = 0;

  constexpr Id() = default;
  constexpr explicit Id(std::int64_t v) : value(v) {}
  constexpr auto operator<=>(const Id&) const = default;
};

template <class Tag>
std::ostream& operator<<(std::ostream& os, Id<Tag> id) {
  return os << id.value;
}

using KeyframeId = Id<struct KeyframeTag>;
using PointId = Id<struct PointTag>;
using GeoImageId = Id<struct GeoImageTag>;

}  // namespace geodrift
