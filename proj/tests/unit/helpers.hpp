#pragma once

#include <functional>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "vistep/error.hpp"
#include "vistep/fake_backend.hpp"

/// Code of the vistep::Error raised by `f`; fails the test when nothing is raised.
inline vistep::ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const vistep::Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return vistep::ErrorCode::IoError;
}

inline vistep::backend::Scene scene_of(const char* json) {
  return vistep::backend::Scene::from_json(nlohmann::json::parse(json));
}
