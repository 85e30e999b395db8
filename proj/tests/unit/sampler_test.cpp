#include <gtest/gtest.h>

#include <set>

#include "hydrosim/sampler/calibration.hpp"
#include "hydrosim/sampler/sampler.hpp"

using namespace hydrosim;
using namespace hydrosim::sampler;

namespace {

std::vector<SamplerEvent> run_for(SamplerState& st, double seconds, const FaultModel& f, CounterRng& rng,
                                  double dt = 0.02) {
  std::vector<SamplerEvent> all;
  const int n = static_cast<int>(std::lround(seconds / dt));
  for (int i = 0; i < n; ++i) {
    auto ev = step_sampler(st, dt, f, rng);
    all.insert(all.end(), ev.begin(), ev.end());
  }
  return all;
}

int count_kind(const std::vector<SamplerEvent>& ev, EventKind k) {
  return static_cast<int>(std::count_if(ev.begin(), ev.end(), [&](const auto& e) { return e.kind == k; }));
}

}  // namespace

TEST(MotorCommandCodec, Examples) {
  EXPECT_EQ(encode_motor_command({0, 0, Action::Stop}), (std::array<std::uint8_t, 3>{0, 0, 0}));
  EXPECT_EQ(encode_motor_command({5, 3, Action::Reverse}), (std::array<std::uint8_t, 3>{5, 3, 2}));
}

TEST(MotorCommandCodec, ExhaustiveRoundTripAndRejects) {
  int n = 0;
  for (std::uint8_t m = 0; m < 6; ++m)
    for (std::uint8_t k = 0; k < 4; ++k)
      for (std::uint8_t a = 0; a < 3; ++a) {
        const MotorCommand c{m, k, static_cast<Action>(a)};
        const auto bytes = encode_motor_command(c);
        EXPECT_EQ(decode_motor_command(bytes), c);
        ++n;
      }
  EXPECT_EQ(n, 72);
  const auto code = [](std::vector<std::uint8_t> b) {
    try {
      decode_motor_command(b);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::Io;
  };
  EXPECT_EQ(code({6, 0, 0}), Errc::OutOfRange);
  EXPECT_EQ(code({0, 4, 0}), Errc::OutOfRange);
  EXPECT_EQ(code({0, 0, 3}), Errc::OutOfRange);
  EXPECT_EQ(code({0, 0}), Errc::BadLength);
}

TEST(OutputTorque, GearStagesCompose) {
  SamplerParams p;
  EXPECT_EQ(p.gear_ratio(), 12.0);
  EXPECT_NEAR(output_torque(p), 5.4, 1e-12);
  p.gear_stages = {};
  EXPECT_EQ(output_torque(p), 0.45);
  EXPECT_EQ(SamplerParams{}.q_nominal(), 0.5);
}

TEST(SamplerState, LayoutAndLabels) {
  const SamplerState st;
  EXPECT_EQ(st.syringes.size(), 72u);
  EXPECT_EQ(st.motors.size(), 24u);
  std::set<std::string> labels;
  for (const auto& s : st.syringes) labels.insert(s.label);
  EXPECT_EQ(labels.size(), 72u);
  EXPECT_EQ(st.syringe(0, 2, 0).label, "A3_S1");
  EXPECT_EQ(st.syringe(3, 3, 2).label, "D4_S3");
  EXPECT_EQ(parse_motor_label("B2"), (std::pair<int, int>{1, 1}));
  EXPECT_THROW(parse_motor_label("G1"), Error);
  EXPECT_THROW(parse_motor_label("A5"), Error);
}

TEST(ApplyCommand, Examples) {
  SamplerState st;
  CounterRng rng(1);
  EXPECT_EQ(apply_command(st, {0, 0, Action::Stop}), CommandResult::Accepted);
  EXPECT_EQ(st.motor(0, 0).phase, Phase::Idle);
  EXPECT_EQ(apply_command(st, {0, 2, Action::Forward}), CommandResult::Accepted);
  EXPECT_EQ(st.motor(0, 2).phase, Phase::Filling);
  EXPECT_EQ(st.motor(0, 2).elapsed_in_cycle, 0.0);

  fail_expander(st, 1, 1);
  const MotorState before = st.motor(1, 1);
  EXPECT_EQ(apply_command(st, {1, 1, Action::Forward}), CommandResult::ExpanderUnresponsive);
  EXPECT_EQ(st.motor(1, 1).phase, before.phase);
  EXPECT_EQ(st.motor(1, 1).action, before.action);
  EXPECT_THROW(apply_command(st, {6, 0, Action::Stop}), Error);
}

TEST(StepSampler, NoActiveMotorsNoChange) {
  SamplerState st;
  CounterRng rng(1);
  const auto ev = run_for(st, 10.0, FaultModel::none(), rng);
  EXPECT_TRUE(ev.empty());
  for (const auto& s : st.syringes) EXPECT_EQ(s.volume, 0.0);
  for (const auto& m : st.motors) EXPECT_TRUE(m.home_switch);
}

TEST(StepSampler, FaultFreeCycleFillsAt05MlPerSecond) {
  SamplerState st;
  CounterRng rng(1);
  apply_command(st, {0, 2, Action::Forward});
  run_for(st, 45.0, FaultModel::none(), rng);
  for (int s = 0; s < 3; ++s) EXPECT_NEAR(st.syringe(0, 2, s).volume, 22.5, 1e-9);
  const auto ev = run_for(st, 45.0, FaultModel::none(), rng);
  ASSERT_EQ(count_kind(ev, EventKind::CycleComplete), 1);
  const auto done = *std::find_if(ev.begin(), ev.end(), [](const auto& e) { return e.kind == EventKind::CycleComplete; });
  EXPECT_NEAR(done.t, 90.0, 1e-9);
  for (int s = 0; s < 3; ++s) {
    EXPECT_EQ(st.syringe(0, 2, s).volume, 45.0);
    EXPECT_TRUE(st.syringe(0, 2, s).sealed);
    EXPECT_NEAR(st.syringe(0, 2, s).volume / (st.syringe(0, 2, s).t_end - st.syringe(0, 2, s).t_start), 0.5, 1e-9);
  }
  EXPECT_TRUE(st.motor(0, 2).home_switch);
  EXPECT_EQ(st.motor(0, 2).action, Action::Stop);
  // only the commanded motor's syringes changed
  int touched = 0;
  for (const auto& s : st.syringes) touched += s.volume > 0.0;
  EXPECT_EQ(touched, 3);
}

TEST(StepSampler, EveryMotorTakesNominalCycleWithoutFaults) {
  SamplerState st;
  CounterRng rng(1);
  for (std::uint8_t m = 0; m < 6; ++m)
    for (std::uint8_t k = 0; k < 4; ++k) apply_command(st, {m, k, Action::Forward});
  const auto ev = run_for(st, 91.0, FaultModel::none(), rng);
  EXPECT_EQ(count_kind(ev, EventKind::CycleComplete), 24);
  for (const auto& e : ev)
    if (e.kind == EventKind::CycleComplete) EXPECT_NEAR(e.t, 90.0, 1e-9);
  for (const auto& s : st.syringes) EXPECT_EQ(s.volume, 45.0);
}

TEST(StepSampler, LeakAfterSealIsLinear) {
  SamplerState st;
  CounterRng rng(1);
  FaultModel f;
  f.leak_prob = 1.0;
  f.leak_rate = 0.01;
  apply_command(st, {2, 0, Action::Forward});
  run_for(st, 90.0, f, rng);
  ASSERT_TRUE(st.syringe(2, 0, 0).sealed);
  run_for(st, 100.0, f, rng);
  for (int s = 0; s < 3; ++s) EXPECT_NEAR(st.syringe(2, 0, s).volume, 44.0, 1e-9);
  run_for(st, 10000.0, f, rng, 1.0);
  for (int s = 0; s < 3; ++s) EXPECT_EQ(st.syringe(2, 0, s).volume, 0.0);
}

TEST(StepSampler, SwitchFailureTimesOut) {
  SamplerState st;
  CounterRng rng(1);
  FaultModel f;
  f.switch_fail_prob = 1.0;
  apply_command(st, {0, 0, Action::Forward});
  const auto ev = run_for(st, 300.0, f, rng);
  ASSERT_EQ(count_kind(ev, EventKind::SwitchTimeout), 1);
  EXPECT_EQ(count_kind(ev, EventKind::CycleComplete), 0);
  const auto to = *std::find_if(ev.begin(), ev.end(), [](const auto& e) { return e.kind == EventKind::SwitchTimeout; });
  EXPECT_NEAR(to.t, st.params.max_travel_time, 1e-6);
  EXPECT_EQ(st.motor(0, 0).phase, Phase::Fault);
  EXPECT_FALSE(st.motor(0, 0).home_switch);
  EXPECT_EQ(st.syringe(0, 0, 0).volume, 45.0);
}

TEST(StepSampler, VolumesStayInBoundsUnderFaults) {
  SamplerState st;
  CounterRng rng(77);
  FaultModel f = FaultModel::calibrated();
  f.switch_fail_prob = 0.3;
  f.expander_fail_prob = 0.05;
  for (std::uint8_t m = 0; m < 6; ++m)
    for (std::uint8_t k = 0; k < 4; ++k) apply_command(st, {m, k, static_cast<Action>(1 + (m + k) % 2)});
  for (int i = 0; i < 20000; ++i) {
    step_sampler(st, 0.05, f, rng);
    if (i % 3000 == 0) bus_recovery(st);
    for (const auto& s : st.syringes) {
      ASSERT_GE(s.volume, 0.0);
      ASSERT_LE(s.volume, 45.0);
    }
    for (const auto& m : st.motors) {
      ASSERT_GE(m.travel, 0.0);
      ASSERT_LE(m.travel, 1.0);
    }
  }
}

TEST(EmergencyStop, LatchesAndFreezes) {
  SamplerState st;
  CounterRng rng(1);
  FaultModel f;
  f.leak_prob = 1.0;
  f.leak_rate = 0.5;
  for (std::uint8_t m = 0; m < 6; ++m)
    for (std::uint8_t k = 0; k < 4; ++k) apply_command(st, {m, k, Action::Forward});
  run_for(st, 10.0, f, rng);
  EXPECT_EQ(emergency_stop(st, true).size(), 1u);
  for (const auto& m : st.motors) EXPECT_EQ(m.action, Action::Stop);
  EXPECT_TRUE(emergency_stop(st, true).empty());
  const auto frozen = st.syringes;
  run_for(st, 30.0, f, rng);
  for (std::size_t i = 0; i < frozen.size(); ++i) EXPECT_EQ(st.syringes[i].volume, frozen[i].volume);
  EXPECT_EQ(apply_command(st, {0, 0, Action::Forward}), CommandResult::EStopLatched);
  emergency_stop(st, false);
  EXPECT_EQ(apply_command(st, {0, 0, Action::Forward}), CommandResult::Accepted);
  run_for(st, 1.0, f, rng);
  EXPECT_GT(st.syringe(0, 0, 0).volume, frozen[0].volume);
}

TEST(BusRecovery, DropsPendingAndResumes) {
  SamplerState st;
  CounterRng rng(1);
  EXPECT_TRUE(bus_recovery(st).empty());

  apply_command(st, {1, 2, Action::Forward});
  run_for(st, 30.0, FaultModel::none(), rng);
  fail_expander(st, 1, 2);
  const double travel = st.motor(1, 2).travel;
  run_for(st, 10.0, FaultModel::none(), rng);
  EXPECT_EQ(st.motor(1, 2).travel, travel);
  EXPECT_EQ(apply_command(st, {1, 2, Action::Stop}), CommandResult::ExpanderUnresponsive);

  const auto ev = bus_recovery(st);
  EXPECT_EQ(count_kind(ev, EventKind::Dropped), 1);
  EXPECT_EQ(count_kind(ev, EventKind::ExpanderRecovered), 1);
  EXPECT_TRUE(st.expander_responsive[st.motor_index(1, 2)]);
  EXPECT_TRUE(bus_recovery(st).empty());

  // the dropped Stop never applied: the cycle carries on from its travel
  const auto rest = run_for(st, 61.0, FaultModel::none(), rng);
  EXPECT_EQ(count_kind(rest, EventKind::CycleComplete), 1);
  EXPECT_EQ(st.syringe(1, 2, 0).volume, 45.0);
}

TEST(StatusReport, FreshAndBitmapRoundTrip) {
  SamplerState st;
  StatusReport r = status_report(st);
  ASSERT_EQ(r.motors.size(), 24u);
  for (const auto& m : r.motors) {
    EXPECT_EQ(m.action, Action::Stop);
    EXPECT_TRUE(m.home);
  }
  apply_command(st, {0, 2, Action::Forward});
  CounterRng rng(1);
  step_sampler(st, 0.1, FaultModel::none(), rng);
  r = status_report(st);
  EXPECT_EQ(std::count_if(r.motors.begin(), r.motors.end(), [](const auto& m) { return m.action != Action::Stop; }), 1);

  std::mt19937 g(2);
  for (int trial = 0; trial < 500; ++trial) {
    StatusReport x;
    for (int i = 0; i < 24; ++i) x.motors.push_back({i / 4, i % 4, static_cast<Action>(g() % 3), g() % 2 == 0, 0.0});
    EXPECT_EQ(motors_from_bitmap(status_bitmap(x)), x.motors);
  }
}

TEST(Calibration, FaultFreeHarnessIsExact) {
  const auto r = run_calibration(FaultModel::none(), 20, 1);
  EXPECT_NEAR(r.mean_fill_time, 90.0, 1e-6);
  EXPECT_EQ(r.mean_volume, 45.0);
}

TEST(Calibration, CalibratedModelNearFieldMeans) {
  const auto r = run_calibration(FaultModel::calibrated(), 2000, 5);
  EXPECT_NEAR(r.mean_fill_time, 150.88, 0.05 * 150.88);
  EXPECT_NEAR(r.mean_volume, 35.25, 0.05 * 35.25);
}
