#pragma once

#include <stdexcept>
#include <string>

namespace tryon {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// imaging
struct ChannelError : Error { using Error::Error; };
struct DimensionError : Error { using Error::Error; };
struct LabelError : Error { using Error::Error; };
struct GeometryError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// keypoints
struct NoPersonError : Error { using Error::Error; };
struct SchemaError : Error { using Error::Error; };
struct RangeError : Error { using Error::Error; };

// locate
struct DegenerateGeometryError : Error { using Error::Error; };
struct InsufficientContoursError : Error { using Error::Error; };
struct NoArmError : Error { using Error::Error; };
struct LocalizationError : Error { using Error::Error; };

// tps / fitting
struct NumericalError : Error { using Error::Error; };

/// Thrown when the fitter sees a non-finite loss; carries the step index.
struct DivergenceError : Error {
    int step = -1;
    DivergenceError(const std::string& msg, int step_index)
        : Error(msg + " (step " + std::to_string(step_index) + ")"), step(step_index) {}
};

// metrics
struct WindowError : Error { using Error::Error; };
struct EmptyEvalError : Error { using Error::Error; };

// pipeline
struct LayoutError : Error { using Error::Error; };

}  // namespace tryon
