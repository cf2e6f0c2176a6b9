#include <cstdio>
#include <fstream>

#include <gtest/gtest.h>

#include "sdnse/config.hpp"

using sdnse::ConfigError;
using sdnse::KeyValueConfig;

TEST(Config, ParsesSectionsCommentsAndQuotes) {
    const auto c = KeyValueConfig::parse(R"(
# leading comment
top = 4
[solver]
nu = 0.1        ; trailing comment
name = "taylor green"   # comment after quotes
steps = 200
flag = yes
list = [1, 2.5, -3]
spaced = 1 2 3
)",
                                         "t.ini");
    EXPECT_EQ(c.get_int("top"), 4);
    EXPECT_DOUBLE_EQ(c.get_double("solver.nu"), 0.1);
    EXPECT_EQ(c.get_string("solver.name"), "taylor green");
    EXPECT_EQ(c.get_int("solver.steps"), 200);
    EXPECT_TRUE(c.get_bool("solver.flag", false));
    EXPECT_EQ(c.get_doubles("solver.list", {}), (std::vector<double>{1, 2.5, -3}));
    EXPECT_EQ(c.get_doubles("solver.spaced", {}), (std::vector<double>{1, 2, 3}));
    EXPECT_EQ(c.get_double("solver.missing", 7.0), 7.0);
    EXPECT_EQ(c.sections(), std::vector<std::string>{"solver"});
    EXPECT_EQ(c.keys("solver").size(), 6u);
}

TEST(Config, ReportsBadValuesAndUnknownKeys) {
    const auto c = KeyValueConfig::parse("[a]\nx = 1.5abc\nn = 2.5\nb = maybe\n", "bad.ini");
    EXPECT_THROW(c.get_double("a.x"), ConfigError);
    EXPECT_THROW(c.get_int("a.n"), ConfigError);
    EXPECT_THROW(c.get_bool("a.b", false), ConfigError);
    EXPECT_THROW(c.get_string("a.none"), ConfigError);
    EXPECT_THROW(c.require_known({"a.x", "a.n"}), ConfigError);
    EXPECT_NO_THROW(c.require_known({"a.x", "a.n", "a.b"}));
    EXPECT_THROW(KeyValueConfig::parse("[a]\nx = 1\nx = 2\n", "dup.ini"), ConfigError);
    EXPECT_THROW(KeyValueConfig::load("/nonexistent/file.ini"), ConfigError);
}

TEST(Config, LoadsFromFile) {
    const std::string path = ::testing::TempDir() + "cfg_test.ini";
    {
        std::ofstream out(path);
        out << "[run]\nT = 2\n";
    }
    const auto c = KeyValueConfig::load(path);
    EXPECT_DOUBLE_EQ(c.get_double("run.T"), 2.0);
    EXPECT_EQ(c.origin(), path);
    std::remove(path.c_str());
}
