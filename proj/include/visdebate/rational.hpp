// Copyright 2026 The visdebate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace visdebate {

/// Exact accuracy values; rounding happens only when formatting.
using Rational = boost::multiprecision::cpp_rational;

/// "82.1" -> 821/10. Throws visdebate::Error on anything but [-]digits[.digits].
Rational rational_from_decimal(std::string_view text);

/// "n/d" (or "n") -> Rational.
Rational parse_rational(std::string_view text);
/// Canonical "n/d" form, "n" when the denominator is 1.
std::string to_fraction_string(const Rational& value);

/// Decimal with `digits` fractional digits, rounded half away from zero.
std::string format_fixed(const Rational& value, int digits);
/// `value` as a percentage, e.g. 0.7447 -> "74.47" for digits = 2.
std::string format_percent(const Rational& value, int digits);

double to_double(const Rational& value);

}  // namespace visdebate
