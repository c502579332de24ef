#pragma once

namespace coagfrag {

inline constexpr const char* version_string = "0.1.0";

}
