#include "lampsde/config.hpp"
#include "lampsde/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace lampsde;

namespace {

std::string error_of(std::string_view text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Config, DefaultsMatchExperimentDesign) {
    ExperimentConfig cfg = parse_config("");
    EXPECT_EQ(cfg.model_spec().id(), ModelId::CIR);
    EXPECT_EQ(cfg.dt_ref, 0x1p-15);
    EXPECT_EQ(cfg.ladder, (std::vector<double>{0x1p-11, 0x1p-10, 0x1p-9, 0x1p-8}));
    EXPECT_EQ(cfg.n_paths, 1000u);
    EXPECT_EQ(cfg.p, 2.0);
}

TEST(Config, ParsesAllSections) {
    ExperimentConfig cfg = parse_config(R"(
# comment
[model]
id = WrightFisher
a = 1.5      ; trailing comment
b = 4
gamma = 0.5
y0 = 0.25

[grid]
T = 2
dt = 2^-6
dt_ref = 2^-12
ladder = 2^-8, 2^-7,0.015625

[scheme]
id = lbe
residual_tol = 1e-13
max_iter = 50
eta = 0.25
closed_form = false
metric = max-grid
p = 1.5

[montecarlo]
paths = 123
stream = 9
workers = 3

[output]
dir = results
formats = json
)");
    const auto& p = std::get<WrightFisherParams>(cfg.params);
    EXPECT_EQ(p.a, 1.5);
    EXPECT_EQ(p.b, 4.0);
    EXPECT_EQ(p.gamma, 0.5);
    EXPECT_EQ(cfg.y0, 0.25);
    EXPECT_EQ(cfg.horizon, 2.0);
    EXPECT_EQ(cfg.dt, 0x1p-6);
    EXPECT_EQ(cfg.ladder, (std::vector<double>{0x1p-8, 0x1p-7, 0x1p-6}));
    EXPECT_EQ(cfg.scheme, SchemeId::Lbe);
    EXPECT_EQ(cfg.solver.residual_tol, 1e-13);
    EXPECT_EQ(cfg.solver.max_iterations, 50);
    EXPECT_FALSE(cfg.solver.use_closed_form);
    EXPECT_EQ(cfg.metric, ErrorMetric::MaxGridLp);
    EXPECT_EQ(cfg.n_paths, 123u);
    EXPECT_EQ(cfg.stream, 9u);
    EXPECT_EQ(cfg.workers, 3);
    EXPECT_EQ(cfg.output_dir, "results");
    EXPECT_TRUE(cfg.wants_format("json"));
    EXPECT_FALSE(cfg.wants_format("csv"));
}

TEST(Config, RoundTripIsIdentity) {
    ExperimentConfig cfg;
    cfg.params = AitSahaliaParams{0.1, 0.2, 0.30000000000000004, 1.0 / 3.0, 0.7, 2.0, 1.5};
    cfg.y0 = 0.1 + 0.2;
    cfg.ladder = {0x1p-9, 1e-3, 0.1};
    cfg.solver.eta = 0.123456789012345678;
    cfg.output_dir = "out dir";
    cfg.formats = {"csv"};
    std::string text = serialize_config(cfg);
    ExperimentConfig back = parse_config(text);
    EXPECT_TRUE(back == cfg) << text;
    EXPECT_EQ(serialize_config(back), text);
    ExperimentConfig defaults;
    EXPECT_TRUE(parse_config(serialize_config(defaults)) == defaults);
}

TEST(Config, ErrorsNameLineAndField) {
    std::string e = error_of("[model]\nid = CIR\nkappa = fast\n");
    EXPECT_NE(e.find(":3:"), std::string::npos) << e;
    EXPECT_NE(e.find("kappa"), std::string::npos) << e;

    e = error_of("[grid]\nT = 1\n\nladder = 2^-x\n");
    EXPECT_NE(e.find(":4:"), std::string::npos) << e;
    EXPECT_NE(e.find("ladder"), std::string::npos) << e;

    e = error_of("[model]\nid = CIR\nalpha = 0.5\n");
    EXPECT_NE(e.find("unknown key"), std::string::npos) << e;
    EXPECT_NE(e.find(":3:"), std::string::npos) << e;

    EXPECT_NE(error_of("[colors]\nred = 1\n").find("unknown section"), std::string::npos);
    EXPECT_NE(error_of("kappa = 1\n").find("outside of any section"), std::string::npos);
    EXPECT_NE(error_of("[model\n").find("unterminated"), std::string::npos);
    EXPECT_NE(error_of("[model]\nkappa 1\n").find(":2:"), std::string::npos);
    EXPECT_NE(error_of("[model]\nkappa = 1\nkappa = 2\n").find("duplicate"), std::string::npos);
    EXPECT_NE(error_of("[grid]\ndt = -1\n").find("dt"), std::string::npos);
    EXPECT_NE(error_of("[scheme]\neta = 2\n").find("eta"), std::string::npos);
    EXPECT_NE(error_of("[scheme]\nid = rk4\n").find("rk4"), std::string::npos);
    EXPECT_NE(error_of("[montecarlo]\npaths = 0\n").find("paths"), std::string::npos);
    EXPECT_NE(error_of("[montecarlo]\npaths = 1.5\n").find("integer"), std::string::npos);
}

TEST(Config, OverridesReplaceFileValues) {
    ConfigDocument doc = ConfigDocument::parse("[model]\nid = CIR\nsigma = 0.5\n");
    doc.set_assignment("model.sigma=0.25");
    doc.set_assignment("montecarlo.paths = 7");
    ExperimentConfig cfg = interpret(doc);
    EXPECT_EQ(std::get<CIRParams>(cfg.params).sigma, 0.25);
    EXPECT_EQ(cfg.n_paths, 7u);
    EXPECT_THROW(doc.set_assignment("sigma=1"), ConfigError);
    EXPECT_THROW(doc.set_assignment("model.sigma"), ConfigError);
}

TEST(Config, ParseReal) {
    EXPECT_EQ(parse_real("2^-15"), 0x1p-15);
    EXPECT_EQ(parse_real(" 2^3 "), 8.0);
    EXPECT_EQ(parse_real("0.1"), 0.1);
    EXPECT_EQ(parse_real("+1e-3"), 1e-3);
    EXPECT_THROW(parse_real(""), ConfigError);
    EXPECT_THROW(parse_real("1.0x"), ConfigError);
    EXPECT_THROW(parse_real("2^"), ConfigError);
}
