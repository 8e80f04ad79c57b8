#pragma once

#include <stdexcept>
#include <string>

namespace mmf {

// Base for everything thrown by this library. CLI maps these to exit code 1;
// flag/domain problems are raised as config_error and map to exit code 2.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct dimension_error : error {
    using error::error;
};

struct index_error : error {
    using error::error;
};

struct capacity_error : error {
    using error::error;
};

struct contract_error : error {
    using error::error;
};

struct format_error : error {
    using error::error;
};

struct version_error : error {
    using error::error;
};

struct parse_error : error {
    using error::error;
};

struct config_error : error {
    using error::error;
};

struct provider_error : error {
    using error::error;
};

struct storage_error : error {
    using error::error;
};

struct validation_error : error {
    using error::error;
};

struct io_error : error {
    using error::error;
};

struct task_error : error {
    using error::error;
};

struct metric_error : error {
    using error::error;
};

struct evaluation_error : error {
    using error::error;
};

struct stratification_error : error {
    using error::error;
};

}  // namespace mmf
