#include "pgnn/errors.hpp"

namespace pgnn {

MissingFileError::MissingFileError(std::string subject, const std::string& path)
    : IoError("missing file for " + subject + ": " + path), subject_(std::move(subject)) {}

}  // namespace pgnn
