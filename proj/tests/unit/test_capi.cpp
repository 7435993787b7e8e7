#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <string>

#include "chainheat/chainheat.h"

namespace {

const char* kConfig = R"(scenario: verify_all
n: 12
force:
  1: [0.5, 0]
t_grid: [0.1]
initial:
  kind: mean_kick
)";

std::string examples_dir() {
  const char* d = std::getenv("CHAINHEAT_EXAMPLES");
  return d ? d : "configs";
}

}  // namespace

TEST_CASE("status names and version") {
  CHECK(std::strcmp(chainheat_status_name(CHAINHEAT_OK), "ok") == 0);
  CHECK(std::strcmp(chainheat_status_name(CHAINHEAT_ERR_CONFIG), "config") == 0);
  CHECK(std::strcmp(chainheat_status_name(static_cast<chainheat_status>(99)), "unknown") == 0);
  CHECK(std::strlen(chainheat_version()) > 0);
  CHECK(chainheat_last_error() != nullptr);
}

TEST_CASE("null arguments are rejected without crashing") {
  chainheat_config* c = nullptr;
  CHECK(chainheat_config_parse(nullptr, &c) == CHAINHEAT_ERR_NULL);
  CHECK(std::string(chainheat_last_error()).find("text") != std::string::npos);
  CHECK(chainheat_config_parse(kConfig, nullptr) == CHAINHEAT_ERR_NULL);
  CHECK(chainheat_config_set_seed(nullptr, 3) == CHAINHEAT_ERR_NULL);
  CHECK(chainheat_run_experiment(nullptr, nullptr) == CHAINHEAT_ERR_NULL);
  double d = 0;
  CHECK(chainheat_diffusivity(1.0, nullptr) == CHAINHEAT_ERR_NULL);
  CHECK(chainheat_report_passed(nullptr) == 0);
  CHECK(chainheat_report_metric_count(nullptr) == 0);
  CHECK(chainheat_report_json(nullptr) == nullptr);
  chainheat_config_free(nullptr);
  chainheat_report_free(nullptr);
  chainheat_string_free(nullptr);
  CHECK(chainheat_diffusivity(-1.0, &d) == CHAINHEAT_ERR_DOMAIN);
}

TEST_CASE("config errors map to status codes") {
  chainheat_config* c = nullptr;
  CHECK(chainheat_config_parse("n: 4\nwhat: 1\n", &c) == CHAINHEAT_ERR_CONFIG);
  CHECK(c == nullptr);
  CHECK(std::string(chainheat_last_error()).rfind("line 2", 0) == 0);
  CHECK(chainheat_config_load("/nonexistent.yaml", &c) == CHAINHEAT_ERR_IO);
  REQUIRE(chainheat_config_parse(kConfig, &c) == CHAINHEAT_OK);
  CHECK(chainheat_config_set_scenario(c, "warp") == CHAINHEAT_ERR_CONFIG);
  CHECK(chainheat_config_set_threads(c, 0) == CHAINHEAT_ERR_DOMAIN);
  chainheat_config_free(c);
}

TEST_CASE("closed forms through the C API") {
  double d = 0;
  REQUIRE(chainheat_diffusivity(1.0, &d) == CHAINHEAT_OK);
  CHECK(d == doctest::Approx((3 - std::sqrt(5.0)) / 2));
  chainheat_config* c = nullptr;
  REQUIRE(chainheat_config_parse(kConfig, &c) == CHAINHEAT_OK);
  double J = 0;
  REQUIRE(chainheat_asymptotic_current(c, &J) == CHAINHEAT_OK);
  CHECK(J == doctest::Approx(-0.0253087642).epsilon(1e-8));

  double t[2] = {0.1, 0.2}, jn[2], jt[2], gap[2];
  REQUIRE(chainheat_work_series(c, 16, t, 2, jn, jt, gap) == CHAINHEAT_OK);
  for (int i = 0; i < 2; ++i) {
    CHECK(jt[i] == doctest::Approx(J * t[i]));
    CHECK(gap[i] == doctest::Approx(std::abs(jn[i] - jt[i])));
  }
  CHECK(chainheat_work_series(c, 1, t, 2, jn, jt, gap) == CHAINHEAT_ERR_DOMAIN);
  CHECK(chainheat_work_series(c, 16, t, 2, nullptr, jt, gap) == CHAINHEAT_ERR_NULL);
  chainheat_config_free(c);
}

TEST_CASE("run a scenario and read the report") {
  chainheat_config* c = nullptr;
  REQUIRE(chainheat_config_load((examples_dir() + "/verify.yaml").c_str(), &c) == CHAINHEAT_OK);
  REQUIRE(chainheat_config_set_seed(c, 7) == CHAINHEAT_OK);
  REQUIRE(chainheat_config_set_threads(c, 2) == CHAINHEAT_OK);
  chainheat_report* r = nullptr;
  REQUIRE(chainheat_run_experiment(c, &r) == CHAINHEAT_OK);
  CHECK(chainheat_report_passed(r) == 1);
  size_t k = chainheat_report_metric_count(r);
  REQUIRE(k > 0);
  for (size_t i = 0; i < k; ++i) {
    const char* name = nullptr;
    double v = 0, tol = 0;
    int upper = -1, passed = -1;
    REQUIRE(chainheat_report_metric(r, i, &name, &v, &tol, &upper, &passed) == CHAINHEAT_OK);
    CHECK(name != nullptr);
    CHECK(passed == 1);
    CHECK((upper ? v <= tol : v >= tol));
  }
  CHECK(chainheat_report_metric(r, k, nullptr, nullptr, nullptr, nullptr, nullptr) == CHAINHEAT_ERR_DOMAIN);
  CHECK(chainheat_report_failure_count(r) == 0);
  CHECK(chainheat_report_failure(r, 0) == nullptr);
  CHECK(chainheat_report_wall_time(r) >= 0.0);
  char* copy = nullptr;
  REQUIRE(chainheat_report_json_copy(r, &copy) == CHAINHEAT_OK);
  CHECK(std::strcmp(copy, chainheat_report_json(r)) == 0);
  CHECK(std::string(copy).find("\"seed\": 7") != std::string::npos);
  chainheat_string_free(copy);
  chainheat_report_free(r);
  chainheat_config_free(c);
}
