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

#include "visdebate/rational.hpp"

#include <cctype>

#include <fmt/format.h>

#include "visdebate/core.hpp"

namespace visdebate {

using boost::multiprecision::cpp_int;

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

cpp_int pow10(int n) {
  cpp_int p = 1;
  for (int i = 0; i < n; ++i) p *= 10;
  return p;
}

}  // namespace

Rational rational_from_decimal(std::string_view text) {
  const std::string original(text);
  bool negative = false;
  if (!text.empty() && text.front() == '-') {
    negative = true;
    text.remove_prefix(1);
  }
  std::string_view whole = text;
  std::string_view frac;
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    whole = text.substr(0, dot);
    frac = text.substr(dot + 1);
    if (!all_digits(frac)) throw Error(fmt::format("not a decimal: \"{}\"", original));
  }
  if (!all_digits(whole)) throw Error(fmt::format("not a decimal: \"{}\"", original));
  cpp_int digits(std::string(whole) + std::string(frac));
  Rational r(digits, pow10(static_cast<int>(frac.size())));
  return negative ? Rational(-r) : r;
}

Rational parse_rational(std::string_view text) {
  auto slash = text.find('/');
  auto parse_int = [&](std::string_view s) {
    std::string_view digits = s;
    if (!digits.empty() && digits.front() == '-') digits.remove_prefix(1);
    if (!all_digits(digits)) throw Error(fmt::format("not a fraction: \"{}\"", text));
    return cpp_int(std::string(s));
  };
  if (slash == std::string_view::npos) return Rational(parse_int(text));
  cpp_int den = parse_int(text.substr(slash + 1));
  if (den == 0) throw Error(fmt::format("zero denominator: \"{}\"", text));
  return Rational(parse_int(text.substr(0, slash)), den);
}

std::string to_fraction_string(const Rational& value) {
  const cpp_int num = boost::multiprecision::numerator(value);
  const cpp_int den = boost::multiprecision::denominator(value);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

std::string format_fixed(const Rational& value, int digits) {
  const cpp_int scale = pow10(digits);
  const bool negative = value < 0;
  const Rational magnitude = negative ? Rational(-value) : value;
  const Rational scaled = magnitude * scale;
  const cpp_int num = boost::multiprecision::numerator(scaled);
  const cpp_int den = boost::multiprecision::denominator(scaled);
  // Half away from zero: floor(x + 1/2) on the magnitude.
  const cpp_int rounded = (2 * num + den) / (2 * den);
  const cpp_int whole = rounded / scale;
  const cpp_int frac = rounded % scale;
  std::string out = (negative && rounded != 0 ? "-" : "") + whole.str();
  if (digits > 0) {
    std::string f = frac.str();
    out += "." + std::string(static_cast<std::size_t>(digits) - f.size(), '0') + f;
  }
  return out;
}

std::string format_percent(const Rational& value, int digits) {
  return format_fixed(value * 100, digits);
}

double to_double(const Rational& value) { return value.convert_to<double>(); }

}  // namespace visdebate
