#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "rfhydro/run_config.hpp"

using namespace rfhydro;
using nlohmann::json;

TEST_CASE("empty overrides give the defaults") {
  const auto c = config_from_json(json::object());
  CHECK(c.seed == 1);
  CHECK(c.methods.size() == 2);
  CHECK(c.subjects == 5);
  CHECK(c.sessions_per_class == 5);
  CHECK(c.session_seconds == 30.0);
  CHECK(c.cv_k == 5);
  CHECK(c.cv_split == SplitUnit::session);
  CHECK(c.roster == default_roster());
  CHECK(c.frame.n_subcarriers == 64);
  CHECK(c.filter.sg_window == 11);
  CHECK(config_to_json(c) == config_to_json(RunConfig{}));
  CHECK(c.data_root() == std::filesystem::path("rfhydro_out") / "data");
}

TEST_CASE("the full document round trips") {
  RunConfig c;
  c.seed = 77;
  c.methods = {Method::hbdm};
  c.cbdm.static_taps.push_back({0.01, -0.02});
  c.hydrated.heart_rate = {1.05, 1.2};
  c.classifiers.hyper.knn_medium = 7;
  c.classifiers.mlp.epochs = 12;
  c.roster = {"nn_wide", "lda"};
  const auto j = config_to_json(c);
  const auto back = config_from_json(j);
  CHECK(config_to_json(back) == j);
  CHECK(back.cbdm.static_taps == c.cbdm.static_taps);
  CHECK(back.classifiers.mlp.epochs == 12);
}

TEST_CASE("partial overrides merge into nested sections") {
  const auto c = config_from_json(json::parse(R"({
    "method": "CBDM",
    "dataset": {"subjects": 2},
    "scenarios": {"CBDM": {"drift_std": 0.5}},
    "classifiers": {"roster": ["knn_fine"], "hyperparameters": {"svm_c": 3.0}}
  })"));
  CHECK(c.methods == std::vector<Method>{Method::cbdm});
  CHECK(c.subjects == 2);
  CHECK(c.sessions_per_class == 5);
  CHECK(c.cbdm.drift_std == 0.5);
  CHECK(c.cbdm.static_taps.size() == 3);
  CHECK(c.roster == std::vector<std::string>{"knn_fine"});
  CHECK(c.classifiers.hyper.svm_c == 3.0);
  CHECK(c.classifiers.hyper.knn_fine == 1);
}

TEST_CASE("unknown keys are rejected at every level") {
  for (const char* text : {R"({"sed": 1})", R"({"dataset": {"subject": 3}})",
                           R"({"scenarios": {"CBDM": {"tap": []}}})",
                           R"({"classifiers": {"hyperparameters": {"knn_huge": 1000}}})",
                           R"({"profiles": {"thirsty": {}}})"}) {
    CAPTURE(text);
    CHECK_THROWS_AS(config_from_json(json::parse(text)), ConfigError);
  }
  try {
    config_from_json(json::parse(R"({"dataset": {"subject": 3}})"));
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("dataset.subject") != std::string::npos);
  }
}

TEST_CASE("invalid values are rejected") {
  for (const char* text : {R"({"dataset": {"subjects": 0}})", R"({"method": "XYZ"})",
                           R"({"cv": {"k": 1}})", R"({"cv": {"k": 30}})",
                           R"({"filter": {"sg_window": 10}})", R"({"link": {"noise_std": -1}})",
                           R"({"classifiers": {"roster": ["nope"]}})",
                           R"({"classifiers": {"roster": []}})", R"({"seed": "one"})",
                           R"({"frame": {"bits_per_frame": 100}})",
                           R"({"mlp": {"learning_rate": 0}})",
                           R"({"profiles": {"dehydrated": {"heart_rate_hz": [1.0, 1.7]}}})",
                           R"({"cv": {"split": "subject"}})", "[]"}) {
    CAPTURE(text);
    CHECK_THROWS_AS(config_from_json(json::parse(text)), ConfigError);
  }
}

TEST_CASE("method selection and generation requests") {
  CHECK(parse_methods("both").size() == 2);
  CHECK(parse_methods("HBDM") == std::vector<Method>{Method::hbdm});
  CHECK_THROWS_AS(parse_methods("neither"), ConfigError);
  RunConfig c;
  c.subjects = 3;
  c.noise_std = 0.1;
  const auto r = generate_request(c, Method::hbdm);
  CHECK(r.method == Method::hbdm);
  CHECK(r.subjects == 3);
  CHECK(r.noise_std == 0.1);
  CHECK(r.preset.static_taps.size() == 1);
  CHECK(r.echo.contains("scenario"));
}

TEST_CASE("config files load and bad files are reported") {
  const auto dir = std::filesystem::temp_directory_path() / "rfhydro_test_config";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "ok.json") << R"({"seed": 9})";
    std::ofstream(dir / "bad.json") << "{not json";
  }
  CHECK(load_config(dir / "ok.json").seed == 9);
  CHECK_THROWS_AS(load_config(dir / "bad.json"), ConfigError);
  CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
}
