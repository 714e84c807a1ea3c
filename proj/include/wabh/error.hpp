#pragma once

#include <stdexcept>
#include <string>

namespace wabh {

// Input vectors disagree in length or are empty where content is required.
struct dimension_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A value is outside its documented domain.
struct value_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// File parsing or validation failure.
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A numerical routine could not produce a solution (no bracket, not
// positive definite, MMW infeasible, ...).
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace wabh
