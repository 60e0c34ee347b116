#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "folim/encoder.hpp"
#include "folim/limit.hpp"
#include "folim/sequence.hpp"
#include "folim/verify.hpp"

#include "json.hpp"

namespace folim {

struct SuiteOptions {
  SampleOptions sample;
  ColorFilter filter = ColorFilter::DropFill;  // second SFMTP pass
  int ball_radius = 2;                         // residuality
};

/// The checks that need only the machine, then the distribution and
/// residuality checks when `est` / `seq` are given, then one semipreserving
/// instance per index and mass transport with A = B = everything, unfiltered
/// and filtered.  Instances that do not exist are reported as skipped notes.
std::vector<CheckReport> run_suite(const LimitMachine& m, const SuiteOptions& opt,
                                   const MeasureEstimate* est = nullptr, const GraphSequence* seq = nullptr);

struct PipelineConfig {
  int k = 1;
  int depth = 3;
  int window = 2;
  double epsilon = 0.25;
  int radius = 3;         // marking
  double growth = 2.0;
  std::size_t mark_cap = 64;
  std::uint64_t node_budget = 2'000'000;
  SuiteOptions suite;
  std::string out;        // empty: nothing written

  /// InputError on a nonpositive bound.
  void validate() const;
};

struct PipelineReport {
  std::string halted_stage;  // empty when every stage ran
  std::string diagnostic;
  int exit_code = 0;         // 0 pass, 1 check failure, 2 input, 3 instability / timeout
  std::vector<CheckReport> reports;

  nlohmann::ordered_json to_json() const;
};

/// encode, mark, measure, build, verify.  Stage errors are caught and
/// reported with the stage name; nothing is thrown for them.
PipelineReport run_pipeline(const PipelineConfig& cfg, const std::vector<PlainGraph>& graphs);

/// Exit code for an exception escaping a stage.
int exit_code_for(const std::exception& e);

}  // namespace folim
