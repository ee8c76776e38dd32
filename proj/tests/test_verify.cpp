#include <gtest/gtest.h>

#include <cmath>

#include <sstream>

#include "arcd/app.hpp"
#include "arcd/verify.hpp"

using namespace arcd;
namespace at = arcd::testing;

namespace {

// Reweighting with the beta factor left out of the normalizer.
std::vector<double> skip_denominator_factor(std::span<const double> e, std::span<const Bit> m, double beta) {
  double e_max = e[0];
  for (double x : e) e_max = std::max(e_max, x);
  double total = 0.0;
  for (double x : e) total += std::exp(x - e_max);
  std::vector<double> p(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) p[i] = (m[i] ? beta : 1.0) * std::exp(e[i] - e_max) / total;
  return p;
}

}  // namespace

TEST(Verify, AllCriteriaPass) {
  const auto results = verify::run_acceptance();
  ASSERT_EQ(results.size(), 10u);
  for (std::size_t i = 0; i < results.size(); ++i) {
    EXPECT_EQ(results[i].id, static_cast<int>(i) + 1);
    EXPECT_TRUE(results[i].passed) << verify::report_line(results[i]);
  }
}

TEST(Verify, InjectedReweightBugFailsOracleCriterion) {
  verify::Options opts;
  opts.reweight = skip_denominator_factor;
  EXPECT_FALSE(verify::attention_oracle(opts.reweight).passed);
}

TEST(Verify, ReportJson) {
  std::vector<verify::CriterionResult> rs = {{1, "a", true, "ok", 0.1}, {2, "b", false, "bad", 0.2}};
  const auto j = nlohmann::json::parse(verify::report_json(rs));
  EXPECT_EQ(j["total"], 2);
  EXPECT_EQ(j["failed"], 1);
  EXPECT_EQ(j["criteria"][1]["status"], "fail");
}

TEST(Verify, CommandExitCode) {
  std::ostringstream out;
  verify::Options opts;
  opts.reweight = skip_denominator_factor;
  EXPECT_EQ(cmd_verify(RunConfig{}, out, opts), exit_code::verification_failed);
  EXPECT_NE(out.str().find("FAIL  [3]"), std::string::npos);
}
