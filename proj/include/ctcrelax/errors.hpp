// Copyright 2026 The ctcrelax Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace ctcrelax {

// Base of every error thrown by the library. The CLI maps any of these to
// exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CTCRELAX_DEFINE_ERROR(Name)  \
  class Name : public Error {        \
   public:                           \
    using Error::Error;              \
  };

CTCRELAX_DEFINE_ERROR(IoError)
CTCRELAX_DEFINE_ERROR(FormatError)
CTCRELAX_DEFINE_ERROR(VersionError)
CTCRELAX_DEFINE_ERROR(TruncationError)
CTCRELAX_DEFINE_ERROR(ValueError)
CTCRELAX_DEFINE_ERROR(ParseError)
CTCRELAX_DEFINE_ERROR(ShapeError)
CTCRELAX_DEFINE_ERROR(ConfigError)
CTCRELAX_DEFINE_ERROR(SizeError)

#undef CTCRELAX_DEFINE_ERROR

}  // namespace ctcrelax
