#pragma once

#include <string>

namespace tutor {

/// A rendered prompt. `system` carries the role-setting text and is sent as
/// the system message; `user` is the task prompt.
struct Prompt {
    std::string system;
    std::string user;

    std::string text() const { return system + "\n\n" + user; }

    friend bool operator==(const Prompt&, const Prompt&) = default;
};

} // namespace tutor
