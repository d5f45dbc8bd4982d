#pragma once

#include <stdexcept>
#include <string>

namespace tutor {

// Base of every exception thrown by the tutor library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace tutor
