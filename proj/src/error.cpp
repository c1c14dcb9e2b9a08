#include "geoctx/error.hpp"

#include <iostream>

namespace geoctx {

namespace {

void stderr_sink(const std::string &message) { std::cerr << "warning: " << message << '\n'; }

WarningSink g_sink = &stderr_sink;

}  // namespace

void set_warning_sink(WarningSink sink) { g_sink = sink ? sink : &stderr_sink; }

void warn(const std::string &message) { g_sink(message); }

}  // namespace geoctx
