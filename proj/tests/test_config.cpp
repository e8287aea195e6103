// Copyright 2026 The lflctr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sstream>

#include "doctest.h"
#include "lfl/config.hpp"

using namespace lfl;

namespace {

KeyValueConfig parse(const std::string& text) {
    std::istringstream in(text);
    return KeyValueConfig::parse(in);
}

}  // namespace

TEST_CASE("key=value parsing skips comments and blank lines") {
    const auto cfg = parse("# comment\n\n a = 1.5 \nname=hello world\nflag = true\nlist = 1, 2 ,3\n");
    CHECK(cfg.get_double("a", 0.0) == 1.5);
    CHECK(cfg.get_string("name", "") == "hello world");
    CHECK(cfg.get_bool("flag", false));
    CHECK(cfg.get_doubles("list") == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(cfg.get_uint("missing", 7) == 7);
}

TEST_CASE("unknown keys are named in the error") {
    const auto cfg = parse("alpha = 1\nbogus_key = 2\n");
    try {
        cfg.require_known({"alpha"});
        FAIL("expected an error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("bogus_key") != std::string::npos);
    }
}

TEST_CASE("malformed values are rejected") {
    CHECK_THROWS_AS(parse("no equals sign\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse("x = abc\n").get_double("x", 0.0), std::invalid_argument);
    CHECK_THROWS_AS(parse("x = -3\n").get_uint("x", 0), std::invalid_argument);
    CHECK_THROWS_AS(parse("x = 1.5\n").get_uint("x", 0), std::invalid_argument);
    CHECK_THROWS_AS(parse("x = maybe\n").get_bool("x", false), std::invalid_argument);
}

TEST_CASE("format_double round trips") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.125}) {
        CHECK(parse_double(format_double(v)) == v);
    }
}

TEST_CASE("split and trim") {
    CHECK(trim("  a b \t") == "a b");
    CHECK(split("a|b||c", '|') == std::vector<std::string>{"a", "b", "", "c"});
}
