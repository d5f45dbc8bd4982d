#pragma once

#include "tutor/code_validation.hpp"

namespace tutor {

// Blank submission, rejected before any model call.
struct EmptySubmission {};

// Submission that failed the structural check; no model call was made.
struct RejectedSubmission {
    ValidationReport report;
};

} // namespace tutor
