// Copyright 2026 The cdp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cdp/error.hpp"
#include "cdp/perception.hpp"
#include "doctest.h"

using namespace cdp;

TEST_CASE("a = b + c has Halstead difficulty 1") {
  // operators {=, +}: n1 = 2; operands a, b, c: n2 = 3, N2 = 3.
  auto d = static_difficulty("a = b + c", "p");
  CHECK(d.requirement_id == "p");
  CHECK(d.halstead_difficulty == doctest::Approx(1.0));
  CHECK(d.cyclomatic_approx == 1);
  CHECK(d.overall_metric == doctest::Approx(1.0));
}

TEST_CASE("cyclomatic approximation counts branch keywords") {
  CHECK(static_difficulty("x = 1\ny = x * 2\nprint(y)").cyclomatic_approx == 1);
  CHECK(static_difficulty("for i in range(3):\n    if i:\n        print(i)").cyclomatic_approx == 3);
  CHECK(static_difficulty("while a and b or c:\n    pass").cyclomatic_approx == 4);
  CHECK(static_difficulty("try:\n    x = 1\nexcept ValueError:\n    x = 2").cyclomatic_approx == 2);
  // Keywords inside strings and comments do not count.
  CHECK(static_difficulty("s = 'if for while'  # and or elif\nprint(s)").cyclomatic_approx == 1);
  // An identifier that merely contains a keyword does not count.
  CHECK(static_difficulty("iffy = format_ = 1").cyclomatic_approx == 1);
}

TEST_CASE("hand-classified snippet") {
  // operators: = ( if > ; "(" occurs twice but is one distinct operator -> n1 = 4.
  // operands: x f a b x 1 print x -> N2 = 8, distinct {x f a b 1 print} -> n2 = 6.
  auto d = static_difficulty("x = f(a, b)\nif x > 1:\n    print(x)\n");
  CHECK(d.halstead_difficulty == doctest::Approx(4.0 / 2.0 * 8.0 / 6.0));
  CHECK(d.cyclomatic_approx == 2);
  CHECK(d.overall_metric == doctest::Approx((2.0 + 8.0 / 3.0) / 2.0));
}

TEST_CASE("literals and compound symbols tokenize as single tokens") {
  // operators {=, **}: operands y, 2.5e-3, x, 0x1F -> n2 = N2 = 4 -> (2/2)*(4/4) = 1.
  CHECK(static_difficulty("y = 2.5e-3 ** x ** 0x1F").halstead_difficulty == doctest::Approx(1.0));
  // b"x" and f'{y}' are single string operands.
  auto d = static_difficulty("v = b\"x\" + f'{y}' + r'''\nz\n'''");
  CHECK(d.halstead_difficulty == doctest::Approx(1.0));
}

TEST_CASE("static_difficulty errors") {
  try {
    static_difficulty("pass\n");
    FAIL("expected UnclassifiableSource");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnclassifiableSource);
  }
  CHECK_THROWS_AS(static_difficulty("  \n"), Error);
}
