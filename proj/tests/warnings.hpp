#pragma once

#include <string>
#include <vector>

#include "geoctx/error.hpp"

// Collects library warnings for the lifetime of the object.
class WarningCapture {
public:
    WarningCapture() {
        messages().clear();
        geoctx::set_warning_sink(&WarningCapture::record);
    }
    ~WarningCapture() { geoctx::set_warning_sink(nullptr); }

    const std::vector<std::string> &seen() const { return messages(); }

private:
    static std::vector<std::string> &messages() {
        static std::vector<std::string> m;
        return m;
    }
    static void record(const std::string &msg) { messages().push_back(msg); }
};
