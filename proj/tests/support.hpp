#pragma once

#include <functional>
#include <optional>

#include "nlsbif/error.hpp"

/// Error code thrown by f, or nullopt when it returns normally.
inline std::optional<nlsbif::Errc> code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const nlsbif::Error& e) {
    return e.code();
  }
  return std::nullopt;
}
