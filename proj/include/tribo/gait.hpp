#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace tribo {

/// The eight posture classes, in confusion-matrix order.
enum class GaitClass : int {
    NormalWalking = 0,
    Jumping = 1,
    FallingDown = 2,
    HemiplegicGait = 3,
    DiplegicGait = 4,
    Running = 5,
    FastWalking = 6,
    TaiChi = 7,
};

inline constexpr std::size_t kGaitClassCount = 8;

inline constexpr std::array<GaitClass, kGaitClassCount> kAllGaitClasses = {
    GaitClass::NormalWalking, GaitClass::Jumping,      GaitClass::FallingDown,
    GaitClass::HemiplegicGait, GaitClass::DiplegicGait, GaitClass::Running,
    GaitClass::FastWalking,   GaitClass::TaiChi,
};

std::string_view to_string(GaitClass c);
std::optional<GaitClass> parse_gait_class(std::string_view name);

inline constexpr int index_of(GaitClass c) { return static_cast<int>(c); }

}  // namespace tribo
