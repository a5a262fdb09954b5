#pragma once

#include <string>
#include <vector>

#include "nlsql/eval.hpp"
#include "nlsql/run_config.hpp"
#include "nlsql/trace.hpp"

namespace nlsql {

struct BenchOutcome {
    Report report;
    std::string output_dir;
    int ran = 0;
    int resumed = 0;  // questions skipped because a trace already existed
};

/// Runs every dataset example through the pipeline under a bounded worker
/// pool, writing one trace per question plus report.json and config.json
/// under config.output_dir. Idempotent: existing traces are reused.
BenchOutcome run_bench(const RunConfig& config);

/// Recomputes the report purely from a bench output directory (traces plus
/// the stored config echo). Byte-identical to the bench-time report.json.
Report report_from_traces(const std::string& output_dir);

/// Six component-toggle rows, the candidate-size sweep (pools 4..24) or the
/// selection-rounds sweep ({1,3,5,7}), each as a full bench run in its own
/// subdirectory.
std::vector<SweepRow> run_ablation(const RunConfig& config, const std::string& axis);

}  // namespace nlsql
