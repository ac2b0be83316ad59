#pragma once

#include <stdexcept>
#include <string>

namespace hesim {

// Thrown when a tensor or vector does not fit into the available slots.
struct CapacityError : std::runtime_error {
  explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dimension mismatch between operands.
struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable, missing, or malformed model/weights/input file.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// A kernel received its input in the wrong vector representation.
struct LayoutError : std::runtime_error {
  explicit LayoutError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace hesim
