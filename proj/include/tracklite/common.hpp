#pragma once

#include <Eigen/Dense>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tracklite {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec5 = Eigen::Matrix<double, 5, 1>;
using Vec7 = Eigen::Matrix<double, 7, 1>;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat5 = Eigen::Matrix<double, 5, 5>;
using Mat7 = Eigen::Matrix<double, 7, 7>;
using Mat8 = Eigen::Matrix<double, 8, 8>;
using Mat57 = Eigen::Matrix<double, 5, 7>;
using Mat58 = Eigen::Matrix<double, 5, 8>;

enum class ObjectClass { car = 0, pedestrian = 1, cyclist = 2 };

inline const char* to_string(ObjectClass c) {
    switch (c) {
        case ObjectClass::car:        return "car";
        case ObjectClass::pedestrian: return "pedestrian";
        case ObjectClass::cyclist:    return "cyclist";
    }
    return "car";
}

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Filter: innovation covariance not invertible (condition number > 1e12).
class SingularInnovation : public Error {
public:
    using Error::Error;
};

// Tracker: frame timestamps must be strictly increasing.
class NonMonotonicTimestamp : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class MissingFile : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Metrics: no ground-truth samples to evaluate against.
class EmptyGroundTruth : public Error {
public:
    using Error::Error;
};

// Metrics: ground truth and estimate share no timestamps after interpolation.
class NoOverlap : public Error {
public:
    using Error::Error;
};

inline ObjectClass object_class_from_string(std::string_view s) {
    if (s == "car" || s == "Car") return ObjectClass::car;
    if (s == "pedestrian" || s == "Pedestrian") return ObjectClass::pedestrian;
    if (s == "cyclist" || s == "Cyclist") return ObjectClass::cyclist;
    throw ParseError("unknown object class: '" + std::string(s) + "'");
}

enum class LogLevel { off = 0, info = 1, debug = 2 };

// Verbosity from the TRACKLITE_LOG environment variable (off|info|debug).
inline LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("TRACKLITE_LOG");
        if (env == nullptr) return LogLevel::off;
        std::string_view v(env);
        if (v == "debug" || v == "2") return LogLevel::debug;
        if (v == "info" || v == "1") return LogLevel::info;
        return LogLevel::off;
    }();
    return level;
}

}  // namespace tracklite
