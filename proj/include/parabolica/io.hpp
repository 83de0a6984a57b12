#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "parabolica/continuation.hpp"
#include "parabolica/kepler.hpp"

namespace parabolica {

/// Full run configuration: problem, directions, schedule, solver options.
/// Parsing is strict; unknown keys are rejected.
struct RunConfig {
    CentreConfiguration problem;
    Vec3 xi_plus = Vec3::UnitX();
    Vec3 xi_minus = Vec3::UnitZ();
    double R = 0.0;                     // single-solve radius (0 = unset)
    std::vector<double> R_schedule;     // explicit schedule, or
    int schedule_count = 0;             // count of doublings from 10K
    SolverOptions solver;
    std::string out_dir = ".";
    int verbosity = 0;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& file);

/// Round-trip decimal formatting (17 significant digits).
std::string format_full(double x);

void write_trajectory_csv(const std::filesystem::path& file, const TrueTimeTrajectory& traj);
void write_arc_csv(const std::filesystem::path& file, const KeplerArc& arc);
void write_records_csv(const std::filesystem::path& file,
                       const std::vector<ContinuationRecord>& records);

std::string certificate_report(const PotentialConstants& constants);
std::string critical_point_report(const CriticalPoint& point);
std::string hypothesis_report_text(const HypothesisReport& report);
std::string scaling_report_text(const ScalingReport& report);
std::string diagnostics_report_text(const DiagnosticsReport& report);

/// Worker-count cap from PARABOLICA_THREADS (default: 1).
int thread_cap();

}  // namespace parabolica
