// Copyright 2026 The GEPS Authors.
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

// Random filter generators shared by the test suites.

#include <cmath>
#include <random>
#include <string>

#include "geps/filter.hpp"

namespace geps::filter::testing {

/// The distinct expressions from the portal's job-status listing.
inline constexpr const char* kPortalCorpus[] = {
    "bx>2000&gotmean<100", "bx>50000&gotmean<6000", "bx>60000&gotmean<6000",
    "bx>504&levr<230",     "bx>1504&levr<1000",     "bx>1000&levr<100",
    "evr<10",              "bx<100",                "bx<10",
};

inline Expr random_comparison(std::mt19937_64& rng) {
  static const char* kVars[] = {"bx", "gotmean", "levr", "evr"};
  static const double kScale[] = {100000, 10000, 2000, 100};
  const auto v = rng() % 4;
  const auto op = static_cast<CompareOp>(rng() % 6);
  double literal;
  switch (rng() % 4) {
    case 0: literal = static_cast<double>(rng() % static_cast<std::uint64_t>(kScale[v])); break;
    case 1: literal = std::ldexp(static_cast<double>(rng() >> 11), -53) * kScale[v]; break;
    case 2: literal = -static_cast<double>(rng() % 1000) / 8.0; break;
    default: literal = std::ldexp(static_cast<double>(rng() >> 11), -53) * 1e-3; break;
  }
  return compare(kVars[v], op, literal);
}

/// Random AST with height <= max_depth, with Group nodes sprinkled in.
inline Expr random_expr(std::mt19937_64& rng, int max_depth) {
  if (max_depth <= 1 || rng() % 3 == 0) return random_comparison(rng);
  Expr e;
  switch (rng() % 5) {
    case 0:
    case 1: e = conjoin(random_expr(rng, max_depth - 1), random_expr(rng, max_depth - 1)); break;
    case 2:
    case 3: e = disjoin(random_expr(rng, max_depth - 1), random_expr(rng, max_depth - 1)); break;
    default: e = group(random_expr(rng, max_depth - 1)); break;
  }
  return e;
}

}  // namespace geps::filter::testing
