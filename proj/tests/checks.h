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

#ifndef TINYGRAPH_TESTS_CHECKS_H_
#define TINYGRAPH_TESTS_CHECKS_H_

#include "doctest.h"
#include "tinygraph/error.h"

// Asserts that `expr` throws tg::Error with the given code.
#define CHECK_CODE(expr, expected)                        \
  do {                                                    \
    bool threw_ = false;                                  \
    try {                                                 \
      (void)(expr);                                       \
    } catch (const tg::Error& e_) {                       \
      threw_ = true;                                      \
      CHECK_MESSAGE(e_.code() == (expected), e_.what());  \
    }                                                     \
    CHECK_MESSAGE(threw_, #expr " did not throw");        \
  } while (0)

#endif  // TINYGRAPH_TESTS_CHECKS_H_
