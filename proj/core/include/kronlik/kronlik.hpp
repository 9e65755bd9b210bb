#pragma once

#include "kronlik/core.hpp"
#include "kronlik/diag_models.hpp"
#include "kronlik/error.hpp"
#include "kronlik/flipflop.hpp"
#include "kronlik/io.hpp"
#include "kronlik/simulate.hpp"
#include "kronlik/types.hpp"
#include "kronlik/uniqueness.hpp"

namespace kronlik {
inline constexpr const char* kVersion = "0.3.0";
}
