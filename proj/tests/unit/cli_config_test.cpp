#include <fstream>

#include <gtest/gtest.h>

#include "run_config.hpp"

using namespace qdrift;
using namespace qdrift::cli;

TEST(CliConfig, ConfigFileOverridesDefaults) {
    RunConfig c;
    apply_config_json(c, nlohmann::json{{"alpha", 1}, {"payoff", "straddle"}, {"sigma_h_list", {0.1, 0.2}}});
    EXPECT_DOUBLE_EQ(c.alpha, 1.0);
    EXPECT_EQ(c.payoff, "straddle");
    EXPECT_EQ(c.sigma_h_list.size(), 2u);
    EXPECT_DOUBLE_EQ(c.sigma_s, 0.2);
}

TEST(CliConfig, SchemaRejectsUnknownKeysAndWrongTypes) {
    RunConfig c;
    EXPECT_THROW(apply_config_json(c, nlohmann::json{{"colour", "red"}}), ValidationError);
    EXPECT_THROW(apply_config_json(c, nlohmann::json{{"alpha", "one"}}), ValidationError);
    EXPECT_THROW(apply_config_json(c, nlohmann::json{{"grid_n", 1.5}}), ValidationError);
    EXPECT_THROW(apply_config_json(c, nlohmann::json{{"sigma_h_list", {"a"}}}), ValidationError);
    EXPECT_THROW(apply_config_json(c, nlohmann::json::array()), ValidationError);
}

TEST(CliConfig, SemanticValidation) {
    auto bad = [](auto mutate) {
        RunConfig c;
        mutate(c);
        return c;
    };
    EXPECT_NO_THROW(validate(RunConfig{}));
    EXPECT_THROW(validate(bad([](RunConfig& c) { c.sigma_h = 0.0; })), ValidationError);
    EXPECT_THROW(validate(bad([](RunConfig& c) { c.t = -1.0; })), ValidationError);
    EXPECT_THROW(validate(bad([](RunConfig& c) { c.lambda_min = -1.0; })), ValidationError);
    EXPECT_THROW(validate(bad([](RunConfig& c) {
                     c.lambda_min = 1.0;
                     c.lambda_max = -1.0;
                 })),
                 ValidationError);
    EXPECT_THROW(validate(bad([](RunConfig& c) { c.format = "png"; })), ValidationError);
    EXPECT_THROW(validate(bad([](RunConfig& c) { c.figure = 4; })), ValidationError);
}

TEST(CliConfig, ResolvedConfigIsRecorded) {
    RunConfig c;
    c.command = "transform";
    c.n = 257;
    const auto j = to_json(c);
    EXPECT_EQ(j.at("n"), 257);
    EXPECT_FALSE(j.contains("lambda_min"));
    EXPECT_FALSE(j.contains("figure"));
    EXPECT_EQ(j.at("sigma_s"), 0.2);
}

TEST(CliConfig, PotentialParsing) {
    RunConfig c;
    c.potential = "quadratic:0.5";
    EXPECT_DOUBLE_EQ(make_hamiltonian(c).potential(2.0), 2.0);
    c.potential = "linear:3";
    EXPECT_DOUBLE_EQ(make_hamiltonian(c).potential(2.0), 6.0);
    EXPECT_FALSE(make_hamiltonian(c).v_constant);
    c.potential = "linear:3x";
    EXPECT_THROW(make_hamiltonian(c), ValidationError);
    c.potential = "cubic:1";
    EXPECT_THROW(make_hamiltonian(c), ValidationError);
}

TEST(CliConfig, PayoffAndStateFactories) {
    RunConfig c;
    c.payoff = "digital";
    c.epsilon = 0.01;
    EXPECT_DOUBLE_EQ(make_payoff(c).epsilon, 0.01);
    c.payoff = "swaption";
    EXPECT_THROW(make_payoff(c), ValidationError);
    c.state = "/nonexistent/state.json";
    EXPECT_THROW(make_state(c), IoError);
}

TEST(CliConfig, ShippedSchemaListsTheSameKeys) {
    std::ifstream is(QDRIFT_SCHEMA_PATH);
    ASSERT_TRUE(is.good());
    nlohmann::json schema;
    is >> schema;
    const auto& props = schema.at("properties");
    EXPECT_EQ(props.size(), config_keys().size());
    for (const auto& [key, type] : config_keys()) EXPECT_TRUE(props.contains(key)) << key;
}
