/*
 * Copyright 2026 The gprlab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace gprlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Graph construction or graph precondition failure.
class GraphError : public Error {
public:
    using Error::Error;
};

/// Numerical routine failed (non-convergence, NaN, singular system).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Invalid user-supplied parameter.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A routine precondition does not hold for the given input.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// File format, checksum or filesystem failure.
class IoError : public Error {
public:
    using Error::Error;
};

namespace detail {

[[noreturn]] inline void fail_dims(const std::string& op, std::size_t r1, std::size_t c1,
                                   std::size_t r2, std::size_t c2) {
    throw DimensionError(op + ": shape mismatch (" + std::to_string(r1) + "x" +
                         std::to_string(c1) + " vs " + std::to_string(r2) + "x" +
                         std::to_string(c2) + ")");
}

} // namespace detail
} // namespace gprlab
