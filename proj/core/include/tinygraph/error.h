/* Copyright 2026 The TinyGraph Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef TINYGRAPH_ERROR_H_
#define TINYGRAPH_ERROR_H_

#include <stdexcept>
#include <string>

namespace tg {

enum class Code {
  kArityMismatch,
  kDTypeMismatch,
  kShapeIncompatible,
  kDuplicateName,
  kCycleDetected,
  kDynamicShapeInitializer,
  kMalformedDocument,
  kUnknownOpKind,
  kDanglingInput,
  kRuntimeShapeMismatch,
  kMissingFeed,
  kShapeMismatchAtFeed,
  kUninitializedVariable,
  kNonScalarTarget,
  kNonDifferentiablePath,
  kNoFeasibleDevice,
  kConstraintInfeasible,
  kChannelClosed,
  kDeadlockDetected,
  kChecksumMismatch,
  kNameNotFound,
  kShapeMismatchAtRestore,
  kNonScalarSummaryInput,
  kFrozenGraph,
  kInvalidArgument,
};

const char* code_name(Code code);

class Error : public std::runtime_error {
 public:
  Error(Code code, const std::string& message)
      : std::runtime_error(std::string(code_name(code)) + ": " + message),
        code_(code) {}

  Code code() const { return code_; }

 private:
  Code code_;
};

}  // namespace tg

#endif  // TINYGRAPH_ERROR_H_
