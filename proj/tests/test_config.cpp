#include <gtest/gtest.h>

#include "egoreg/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace egoreg;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string error_of(const std::string& text, const std::string& source = "t.yaml") {
    try {
        parse_config(text, source);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(Config, ShippedFilesRoundTrip) {
    int seen = 0;
    for (const auto& entry : fs::directory_iterator(EGOREG_CONFIG_DIR)) {
        if (entry.path().extension() != ".yaml") continue;
        ++seen;
        const RunConfig a = load_config(entry.path().string());
        const std::string once = serialize_config(a);
        const RunConfig b = parse_config(once, entry.path().string());
        EXPECT_EQ(serialize_config(b), once) << entry.path();
        EXPECT_EQ(a.scenario.duration, b.scenario.duration);
        EXPECT_EQ(a.scenario.quad_position, b.scenario.quad_position);
        EXPECT_EQ(a.controllers.eer.q1_diag, b.controllers.eer.q1_diag);
        EXPECT_EQ(a.controllers.gpm.weights.k1, b.controllers.gpm.weights.k1);
        EXPECT_EQ(a.controllers.bvp.thrust_offset, b.controllers.bvp.thrust_offset);
    }
    EXPECT_EQ(seen, 4);
}

TEST(Config, ShippedCase1Values) {
    const RunConfig c = load_config(std::string(EGOREG_CONFIG_DIR) + "/sim-case1.yaml");
    EXPECT_EQ(c.scenario.motion.kind, ScenarioKind::Case1);
    EXPECT_DOUBLE_EQ(c.scenario.duration, 20.0);
    EXPECT_DOUBLE_EQ(c.scenario.motion.speed, 3.0);
    EXPECT_EQ(c.scenario.quad_position, Vec3(-10, 0, 0.61));
    EXPECT_EQ(c.controllers.gpm.nodes, 7);
    EXPECT_DOUBLE_EQ(c.controllers.bvp.weights.k3, 50.0);
}

TEST(Config, DefaultsSurviveEmptyDocument) {
    const RunConfig c = parse_config("{}");
    EXPECT_EQ(serialize_config(c), serialize_config(default_config()));
}

TEST(Config, UnknownKeyNamesFileAndLine) {
    const std::string msg = error_of("scenario:\n  kind: case1\n  bogus: 1\n");
    EXPECT_NE(msg.find("t.yaml:3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("bogus"), std::string::npos) << msg;
    EXPECT_NE(error_of("nonsense: 1\n").find("nonsense"), std::string::npos);
}

TEST(Config, RangeAndTypeErrors) {
    EXPECT_NE(error_of("scenario:\n  duration_s: -5\n").find("duration_s"), std::string::npos);
    EXPECT_FALSE(error_of("scenario:\n  duration_s: abc\n").empty());
    EXPECT_FALSE(error_of("scenario:\n  kind: case9\n").empty());
    EXPECT_FALSE(error_of("eer:\n  q1_diag: [1, 2, 3]\n").empty());
    EXPECT_FALSE(error_of("gpm:\n  nodes: 0\n").empty());
    EXPECT_FALSE(error_of("scenario:\n  quad_position_m: [1, 2]\n").empty());
}

TEST(Config, MissingFile) { EXPECT_THROW(load_config("/nonexistent/x.yaml"), ConfigError); }
