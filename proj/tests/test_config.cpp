#include "hybridsense/config.hpp"

#include <gtest/gtest.h>

#include <sstream>
#include <string>

using namespace hybridsense;
using namespace hybridsense::config;

namespace {

AppConfig from_text(const std::string& text) {
    std::istringstream in(text);
    return from_ini(IniDocument::parse(in, "test.ini"));
}

std::string error_of(const std::string& text) {
    try {
        from_text(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST(Config, EmptyDocumentKeepsDefaults) {
    const auto c = from_text("");
    EXPECT_EQ(c.ai.T, 0.05);
    EXPECT_EQ(c.ai.T_c, 1.5);
    EXPECT_EQ(c.ai.N, 1e7);
    EXPECT_EQ(c.omrr.m, 2e-3);
    EXPECT_EQ(c.omrr.Q, 5e5);
    EXPECT_EQ(c.omrr.T_TM, 293.0);
    EXPECT_EQ(c.simulate.n_cycles, 256u);
    EXPECT_TRUE(c.peterson_table.empty());
}

TEST(Config, ParsesAllValueKinds) {
    const auto c = from_text(R"(
# comment
[interferometer]
T = 0.08      ; trailing comment
T_c = 2
[omrr]
f0_hz = 500
loss_model = velocity
[spectra]
mode = resonance
resonances_hz = 10, 20,30
[simulate]
seed = 18446744073709551615
correction = off
n_cycles = 32
)");
    EXPECT_EQ(c.ai.T, 0.08);
    EXPECT_EQ(c.ai.T_c, 2.0);
    EXPECT_NEAR(c.omrr.f0(), 500.0, 1e-12);
    EXPECT_EQ(c.omrr.loss_model, omrr::LossModel::velocity);
    EXPECT_EQ(c.spectra.mode, SpectraMode::resonance);
    EXPECT_EQ(c.spectra.resonances_hz, (std::vector<double>{10.0, 20.0, 30.0}));
    EXPECT_EQ(c.simulate.seed, 18446744073709551615ULL);
    EXPECT_FALSE(c.simulate.correction);
    EXPECT_EQ(c.simulate.n_cycles, 32u);
}

TEST(Config, ErrorsNameTheLine) {
    EXPECT_NE(error_of("[omrr]\nQ = 5e5\nmass = heavy\n").find("test.ini:3:"), std::string::npos);
    EXPECT_NE(error_of("[omrr]\n\nbogus = 1\n").find("test.ini:3: unknown key 'bogus'"), std::string::npos);
    EXPECT_NE(error_of("[nope]\nx = 1\n").find("test.ini:2:"), std::string::npos);
    EXPECT_NE(error_of("T = 1\n").find("test.ini:1: key outside"), std::string::npos);
    EXPECT_NE(error_of("[omrr]\nQ 5\n").find("test.ini:2: expected 'key = value'"), std::string::npos);
    EXPECT_NE(error_of("[omrr]\nQ = 1\nQ = 2\n").find("test.ini:3: duplicate"), std::string::npos);
    EXPECT_NE(error_of("[omrr\n").find("test.ini:1: malformed section"), std::string::npos);
    EXPECT_NE(error_of("[omrr]\nQ = -3\n").find("outside allowed range"), std::string::npos);
    EXPECT_NE(error_of("[simulate]\nn_cycles = 2.5\n").find("test.ini:2:"), std::string::npos);
    EXPECT_NE(error_of("[simulate]\ncorrection = maybe\n").find("on/off"), std::string::npos);
    EXPECT_NE(error_of("[spectra]\nmode = loud\n").find("readout|resonance"), std::string::npos);
    EXPECT_NE(error_of("[optimize]\nsigma_x_list = 1e-15, x\n").find("bad list element"), std::string::npos);
    EXPECT_NE(error_of("[interferometer]\nk_eff = 1e7\nwavelength = 1e-6\n").find("either"), std::string::npos);
    EXPECT_NE(error_of("[interferometer]\nT = 0.5\nT_c = 0.9\n").find("test.ini:3:"), std::string::npos);
}

TEST(Config, SnapshotRoundTrip) {
    auto c = from_text("[omrr]\nf0_hz = 777.5\n[optimize]\nsigma_x_list = 3e-15\n[paths]\npeterson_table = /x/y.txt\n");
    const auto text = to_ini(c);
    const auto again = from_text(text);
    EXPECT_EQ(to_ini(again), text);
    EXPECT_EQ(again.omrr.omega0, c.omrr.omega0);
    EXPECT_EQ(again.ai.k_eff, c.ai.k_eff);
    EXPECT_EQ(again.optimize.sigma_x_list, c.optimize.sigma_x_list);
    EXPECT_EQ(again.peterson_table, "/x/y.txt");
}

TEST(Config, ShippedDefaultFileMatchesBuiltIns) {
    const auto shipped = load(std::string(HYBRIDSENSE_SOURCE_DIR) + "/config/default.ini");
    AppConfig builtin;
    builtin.peterson_table = shipped.peterson_table;
    EXPECT_EQ(to_ini(shipped), to_ini(builtin));
}

TEST(Config, Grids) {
    const auto g = log_grid(1.0, 1000.0, 4);
    ASSERT_EQ(g.size(), 4u);
    EXPECT_EQ(g.front(), 1.0);
    EXPECT_EQ(g.back(), 1000.0);
    EXPECT_NEAR(g[1], 10.0, 1e-12);
    EXPECT_EQ(log_grid(5.0, 9.0, 1), (std::vector<double>{5.0}));
    EXPECT_EQ(linear_grid(0.0, 1.0, 3), (std::vector<double>{0.0, 0.5, 1.0}));
}

TEST(Config, ResonanceFrequencyKeepsItsShortForm) {
    for (double f : {1015.0, 0.1, 777.5, 1234.5678}) EXPECT_EQ(f0_hz_of(kTwoPi * f), f);
    EXPECT_NE(to_ini(from_text("[omrr]\nf0_hz = 1015\n")).find("f0_hz = 1015\n"), std::string::npos);
}
