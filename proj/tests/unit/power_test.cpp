#include <gtest/gtest.h>

#include <random>

#include "hydrosim/power/power.hpp"

using namespace hydrosim;
using namespace hydrosim::power;

TEST(TotalPower, FieldBudget) {
  const LoadProfile p;
  EXPECT_NEAR(total_power(p), 1881.91, 1e-9);
  EXPECT_NEAR(total_power(p), 1882.0, 0.5);
  LoadProfile idle = p;
  idle.sampler_duty = 0.0;
  EXPECT_NEAR(total_power(idle), 1832.95, 1e-9);
  EXPECT_EQ(total_power({0, 0, 0, 0, 0, 0, 24}), 0.0);
}

TEST(Endurance, Examples) {
  EXPECT_NEAR(endurance(1920, 1882), 1.0202, 1e-4);
  EXPECT_NEAR(endurance(1920, 1882) * 60.0, 61.0, 1.0);
  EXPECT_EQ(endurance(1920, 1920), 1.0);
  EXPECT_NEAR(endurance(1920, 1782), 1.0774, 1e-4);
  try {
    endurance(1920, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonPositivePower);
  }
}

TEST(Endurance, TimesPowerIsEnergy) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(1, 5000);
  for (int i = 0; i < 1000; ++i) {
    const double E = u(rng), P = u(rng);
    EXPECT_NEAR(endurance(E, P) * P, E, 1e-9 * E);
  }
}

TEST(StepPower, Examples) {
  const PowerParams p;
  const PowerState full = full_state(p);
  EXPECT_EQ(step_power(full, 0.0, 0.0, 10.0, p).state.soc_Wh, full.soc_Wh);
  EXPECT_NEAR(full.soc_Wh - step_power(full, 1882.0, 0.0, 30.0, p).state.soc_Wh, 15.68, 0.005);
  EXPECT_NEAR(full.soc_Wh - step_power(full, 1882.0, 0.0, 30.0, p).state.soc_Wh, 1882.0 * 30 / 3600, 1e-9);
  EXPECT_EQ(step_power(full, 500.0, 500.0, 30.0, p).state.soc_Wh, full.soc_Wh);
  const auto s = step_power(full, 1882.0, 0.0, 30.0, p).state;
  EXPECT_NEAR(s.I, 1882.0 / s.V, 1e-12);
  EXPECT_LT(s.V, p.V_full);
}

TEST(StepPower, DepletesOnceAndStaysInRange) {
  const PowerParams p;
  PowerState s = full_state(p);
  const LoadProfile load;
  int depleted = 0;
  double t = 0.0, t_dep = -1.0;
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> solar(0.0, 100.0);
  double prev = s.soc_Wh;
  while (t < 5000.0) {
    const auto st = step_power(s, load, solar(rng), 0.5, p);
    s = st.state;
    t += 0.5;
    if (st.depleted_now) {
      ++depleted;
      t_dep = t;
    }
    EXPECT_LE(s.soc_Wh, prev);
    EXPECT_GE(s.soc_Wh, 0.0);
    EXPECT_LE(s.soc_Wh, p.E_use);
    prev = s.soc_Wh;
  }
  EXPECT_EQ(depleted, 1);
  EXPECT_GT(t_dep, 3600.0);
  EXPECT_EQ(s.V, p.V_empty);
}

TEST(StepPower, FullLoadDepletesNearEndurance) {
  const PowerParams p;
  PowerState s = full_state(p);
  const double load = total_power(LoadProfile{});
  double t = 0.0;
  while (!s.depleted) {
    s = step_power(s, load, 0.0, 0.02, p).state;
    t += 0.02;
  }
  EXPECT_NEAR(t, 3600.0 * endurance(p.E_use, load), 0.05);
  EXPECT_NEAR(t / 60.0, 61.0, 1.0);
}
