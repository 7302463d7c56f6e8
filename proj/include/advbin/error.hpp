// Copyright 2026 The advbin Authors. All Rights Reserved.
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

#ifndef ADVBIN_ERROR_HPP_
#define ADVBIN_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace advbin {

// Root of every error this library throws. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define ADVBIN_DECLARE_ERROR(Name, Base) \
  class Name : public Base {             \
   public:                               \
    using Base::Base;                    \
  }

// Ingestion.
ADVBIN_DECLARE_ERROR(SchemaError, Error);
ADVBIN_DECLARE_ERROR(GraphError, Error);
ADVBIN_DECLARE_ERROR(FilterError, Error);

// Transformations and strands.
ADVBIN_DECLARE_ERROR(NotApplicable, Error);
ADVBIN_DECLARE_ERROR(InvalidStrand, Error);
ADVBIN_DECLARE_ERROR(EmptyDb, Error);
ADVBIN_DECLARE_ERROR(InsufficientStrands, Error);

// Oracles.
ADVBIN_DECLARE_ERROR(OracleError, Error);
ADVBIN_DECLARE_ERROR(TimeoutError, OracleError);
ADVBIN_DECLARE_ERROR(ProtocolError, OracleError);
ADVBIN_DECLARE_ERROR(RemoteFailure, OracleError);

// Evaluation.
ADVBIN_DECLARE_ERROR(CorpusTooSmall, Error);
ADVBIN_DECLARE_ERROR(BadGroup, Error);

// Interpreter.
ADVBIN_DECLARE_ERROR(OutOfFuel, Error);
ADVBIN_DECLARE_ERROR(IllegalInstruction, Error);

#undef ADVBIN_DECLARE_ERROR

}  // namespace advbin

#endif  // ADVBIN_ERROR_HPP_
