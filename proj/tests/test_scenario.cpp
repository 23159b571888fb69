#include <doctest.h>

#include <filesystem>
#include <string>

#include "cascade/error.hpp"
#include "cascade/scenario.hpp"

using namespace cascade;

namespace {

const std::string kConfigDir = CASCADE_CONFIG_DIR;

const char* kMinimal = R"(model:
  modes: 2
  gamma: 0.2
  kerr: 0.2
solver:
  kind: linearized
sweep:
  n_last: [0.1, 0.5]
outputs: [g2]
)";

std::string config_error(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Config);
    return e.what();
  }
  FAIL("expected a configuration error");
  return {};
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

}  // namespace

TEST_CASE("Minimal configuration gets defaults") {
  const Scenario s = parse_scenario(kMinimal);
  CHECK(s.model.modes == 2);
  CHECK(s.model.gamma == 0.2);
  CHECK(s.model.kerr == 0.2);
  CHECK(s.model.delta == 0.0);
  CHECK(s.model.eta.empty());
  CHECK(s.seed == 0);
  CHECK(s.solver.kind == SolverKind::Linearized);
  CHECK(s.outputs == std::vector<OutputKind>{OutputKind::G2});
  REQUIRE(s.sweep.n_last.has_value());
  CHECK(s.sweep.n_last->points() == std::vector<double>{0.1, 0.5});
  CHECK_FALSE(s.sweep.delta.has_value());
  CHECK(s.duan_pair == std::pair{0, 1});

  const auto p = s.model.chain_params();
  CHECK(p.n_modes == 2);
  CHECK(p.perfect_chain());
}

TEST_CASE("Axis ranges") {
  AxisSpec a;
  a.from = -0.5;
  a.to = 0.5;
  a.count = 5;
  const auto pts = a.points();
  REQUIRE(pts.size() == 5);
  CHECK(pts.front() == -0.5);
  CHECK(pts[2] == 0.0);
  CHECK(pts.back() == 0.5);
}

TEST_CASE("Line-numbered configuration errors") {
  SUBCASE("wigner needs a full-quantum solver") {
    const std::string msg = config_error(R"(model:
  modes: 2
solver:
  kind: linearized
sweep:
  n_last: [0.1]
outputs: [g2, wigner]
)");
    CHECK(starts_with(msg, "line 7:"));
    CHECK(msg.find("wigner") != std::string::npos);
  }
  SUBCASE("unknown key") {
    const std::string msg = config_error(R"(model:
  modes: 2
  gama: 0.2
solver:
  kind: linearized
sweep:
  n_last: [0.1]
outputs: [g2]
)");
    CHECK(starts_with(msg, "line 3:"));
    CHECK(msg.find("gama") != std::string::npos);
  }
  SUBCASE("type mismatch") {
    const std::string msg = config_error(R"(model:
  modes: two
solver:
  kind: linearized
sweep:
  n_last: [0.1]
outputs: [g2]
)");
    CHECK(starts_with(msg, "line 2:"));
  }
  SUBCASE("unknown solver and output names") {
    CHECK(starts_with(config_error(R"(model: {modes: 1}
solver:
  kind: exact
sweep:
  n_last: [0.1]
outputs: [g2]
)"),
                      "line 3:"));
    CHECK(starts_with(config_error(R"(model: {modes: 1}
solver: {kind: linearized}
sweep:
  n_last: [0.1]
outputs: [g3]
)"),
                      "line 5:"));
  }
  SUBCASE("duan needs two modes") {
    CHECK(config_error(R"(model: {modes: 1, gamma: 1}
solver: {kind: linearized}
sweep: {n_last: [0.1]}
outputs: [duan]
)").find("line") != std::string::npos);
  }
  SUBCASE("empty sweep axis") {
    CHECK(config_error(R"(model: {modes: 1}
solver: {kind: linearized}
sweep: {n_last: []}
outputs: [g2]
)").find("line") != std::string::npos);
  }
  SUBCASE("trajectories need a perfect chain") {
    CHECK(starts_with(config_error(R"(model:
  modes: 2
  eta: [0.8]
solver: {kind: full-quantum-mcwf, truncation: 4}
sweep: {delta: [0.0]}
outputs: [g2]
)"),
                      "line 3:"));
  }
  SUBCASE("malformed document") {
    CHECK(config_error("model: [1, 2\n").find("line") != std::string::npos);
  }
}

TEST_CASE("Serialisation round trip") {
  const Scenario s = parse_scenario(kMinimal);
  CHECK(parse_scenario(serialize_scenario(s)) == s);
}

TEST_CASE("Shipped configurations validate and round-trip") {
  int seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(kConfigDir)) {
    if (entry.path().extension() != ".yaml") continue;
    ++seen;
    CAPTURE(entry.path().string());
    const Scenario s = load_scenario(entry.path().string());
    CHECK_NOTHROW(validate_scenario(s));
    const Scenario again = parse_scenario(serialize_scenario(s));
    CHECK(again == s);
    CHECK(serialize_scenario(again) == serialize_scenario(s));
  }
  CHECK(seen >= 8);

  const Scenario fig3 = load_scenario(kConfigDir + "/fig3_two_modes.yaml");
  CHECK(fig3.model.gamma == 0.2);
  CHECK(fig3.model.kerr == 0.2);
  CHECK(fig3.sweep.n_last->points().size() == 200);
  CHECK(fig3.sweep.delta->points().size() == 201);
}

TEST_CASE("Missing file is a configuration error") {
  try {
    load_scenario(kConfigDir + "/does-not-exist.yaml");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Config);
  }
}
