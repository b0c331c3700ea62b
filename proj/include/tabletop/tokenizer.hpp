#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"
#include "tabletop/geometry.hpp"
#include "tabletop/world.hpp"

namespace tabletop {

using Tokens = std::array<int, 6>;

struct CodecRangeError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct CodecDecodeError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// Per-dimension uniform binning of (pick.x, pick.y, pick.yaw, place.x, place.y, place.yaw).
class ActionCodec {
 public:
  static constexpr int kBins = 1024;
  static constexpr int kVersion = 1;
  static constexpr std::array<std::string_view, 6> kLayout = {"pick.x",  "pick.y",  "pick.yaw",
                                                              "place.x", "place.y", "place.yaw"};

  struct Range {
    double lo;
    double hi;
    bool half_open;  // hi excluded (yaw)
    double width() const { return hi - lo; }
  };

  ActionCodec() = default;
  ActionCodec(Range x, Range y, Range yaw) : x_(x), y_(y), yaw_(yaw) {}

  const Range& range(std::size_t dim) const {
    switch (dim % 3) {
      case 0: return x_;
      case 1: return y_;
      default: return yaw_;
    }
  }

  int encode_value(std::size_t dim, double v) const {
    const Range& r = range(dim);
    const bool above = r.half_open ? v >= r.hi : v > r.hi;
    if (!(v >= r.lo) || above || !std::isfinite(v)) {
      throw CodecRangeError(std::string(kLayout[dim]) + " = " + std::to_string(v) + " outside [" +
                            std::to_string(r.lo) + ", " + std::to_string(r.hi) + (r.half_open ? ")" : "]"));
    }
    const double norm = (v - r.lo) / r.width();
    const int id = static_cast<int>(std::floor(norm * kBins));
    return std::min(id, kBins - 1);
  }

  double decode_value(std::size_t dim, int id) const {
    if (id < 0 || id >= kBins) {
      throw CodecDecodeError(std::string(kLayout[dim]) + " token " + std::to_string(id) + " outside [0, " +
                             std::to_string(kBins - 1) + "]");
    }
    const Range& r = range(dim);
    return r.lo + (id + 0.5) / kBins * r.width();
  }

  Tokens encode(const Action& a) const {
    const std::array<double, 6> v = {a.pick.x, a.pick.y, a.pick.yaw, a.place.x, a.place.y, a.place.yaw};
    Tokens t{};
    for (std::size_t d = 0; d < 6; ++d) t[d] = encode_value(d, v[d]);
    return t;
  }

  Action decode(const Tokens& t) const {
    std::array<double, 6> v{};
    for (std::size_t d = 0; d < 6; ++d) v[d] = decode_value(d, t[d]);
    return {{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
  }

  /// Largest reconstruction error of any value in a dimension.
  double max_error(std::size_t dim) const { return range(dim).width() / (2.0 * kBins); }

  nlohmann::json metadata() const {
    auto range_json = [](const Range& r) {
      return nlohmann::json{{"lo", r.lo}, {"hi", r.hi}, {"hi_inclusive", !r.half_open}};
    };
    nlohmann::json layout = nlohmann::json::array();
    for (auto name : kLayout) layout.push_back(std::string(name));
    return {{"codec", "uniform-bins"},
            {"version", kVersion},
            {"bins", kBins},
            {"reconstruction", "bin-center"},
            {"ranges", {{"x", range_json(x_)}, {"y", range_json(y_)}, {"yaw", range_json(yaw_)}}},
            {"layout", layout}};
  }

 private:
  Range x_{0.0, 1.0, false};
  Range y_{0.0, 0.5, false};
  Range yaw_{-kPi, kPi, true};
};

}  // namespace tabletop
