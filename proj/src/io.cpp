#include "parabolica/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace parabolica {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            throw ParseError("unknown key '" + it.key() + "' in " + where);
    }
}

Vec3 parse_vec3(const json& arr, const std::string& where) {
    if (!arr.is_array() || arr.size() != 3)
        throw ParseError(where + " must be an array of three numbers");
    return {arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>()};
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown_keys(j, {"alpha", "centres", "xi_plus", "xi_minus", "R", "schedule", "solver",
                            "out_dir", "verbosity"},
                        "config");
    RunConfig cfg;
    if (!j.contains("alpha") || !j.contains("centres"))
        throw ParseError("config requires 'alpha' and 'centres'");
    cfg.problem.alpha = j["alpha"].get<double>();
    for (const auto& c : j["centres"]) {
        reject_unknown_keys(c, {"pos", "mass"}, "centres[]");
        if (!c.contains("pos") || !c.contains("mass"))
            throw ParseError("each centre requires 'pos' and 'mass'");
        cfg.problem.centres.push_back(
            {parse_vec3(c["pos"], "centres[].pos"), c["mass"].get<double>()});
    }
    cfg.problem.validate();
    if (j.contains("xi_plus")) cfg.xi_plus = parse_vec3(j["xi_plus"], "xi_plus");
    if (j.contains("xi_minus")) cfg.xi_minus = parse_vec3(j["xi_minus"], "xi_minus");
    if (j.contains("R")) cfg.R = j["R"].get<double>();
    if (j.contains("schedule")) {
        const auto& s = j["schedule"];
        reject_unknown_keys(s, {"R_values", "count"}, "schedule");
        if (s.contains("R_values"))
            for (const auto& v : s["R_values"]) cfg.R_schedule.push_back(v.get<double>());
        if (s.contains("count")) cfg.schedule_count = s["count"].get<int>();
    }
    if (j.contains("solver")) {
        const auto& s = j["solver"];
        reject_unknown_keys(
            s, {"tol_grad", "max_iters", "n_nodes", "loop_size", "beta_schedule", "seed"},
            "solver");
        if (s.contains("tol_grad")) cfg.solver.tol_grad = s["tol_grad"].get<double>();
        if (s.contains("max_iters")) cfg.solver.max_iters = s["max_iters"].get<int>();
        if (s.contains("n_nodes")) cfg.solver.n_nodes = s["n_nodes"].get<int>();
        if (s.contains("loop_size")) cfg.solver.loop_size = s["loop_size"].get<int>();
        if (s.contains("beta_schedule")) {
            reject_unknown_keys(s["beta_schedule"], {"halvings"}, "solver.beta_schedule");
            cfg.solver.beta_halvings = s["beta_schedule"]["halvings"].get<int>();
        }
        if (s.contains("seed")) cfg.solver.seed = s["seed"].get<unsigned long long>();
    }
    if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("verbosity")) cfg.verbosity = j["verbosity"].get<int>();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ParseError("cannot open config file " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string format_full(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_trajectory_csv(const std::filesystem::path& file, const TrueTimeTrajectory& traj) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write " + file.string());
    out << "t,x,y,z,vx,vy,vz,h_residual\n";
    for (int j = 0; j < traj.size(); ++j) {
        out << format_full(traj.times[j]) << ',' << format_full(traj.positions(0, j)) << ','
            << format_full(traj.positions(1, j)) << ',' << format_full(traj.positions(2, j))
            << ',' << format_full(traj.velocities(0, j)) << ','
            << format_full(traj.velocities(1, j)) << ',' << format_full(traj.velocities(2, j))
            << ',' << format_full(traj.h_residual[j]) << '\n';
    }
}

void write_arc_csv(const std::filesystem::path& file, const KeplerArc& arc) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write " + file.string());
    out << "t,r,theta,x,y,energy_residual,angmom_residual\n";
    for (size_t i = 0; i < arc.samples.size(); ++i) {
        const auto& s = arc.samples[i];
        Vec2 p = arc.position(i);
        out << format_full(s.t) << ',' << format_full(s.r) << ',' << format_full(s.theta) << ','
            << format_full(p.x()) << ',' << format_full(p.y()) << ','
            << format_full(arc.energy_residual(i)) << ',' << format_full(arc.angmom_residual(i))
            << '\n';
    }
}

void write_records_csv(const std::filesystem::path& file,
                       const std::vector<ContinuationRecord>& records) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write " + file.string());
    out << "R,omega,action,min_radius,min_centre_distance,t_minus,t_plus,Delta,morse_index,"
           "boundary_error,max_energy_residual\n";
    for (const auto& r : records) {
        out << format_full(r.R) << ',' << format_full(r.omega) << ',' << format_full(r.action)
            << ',' << format_full(r.min_radius) << ','
            << format_full(r.min_centre_distances.minCoeff()) << ',' << format_full(r.t_minus)
            << ',' << format_full(r.t_plus) << ',' << format_full(r.Delta) << ','
            << r.morse_index << ',' << format_full(r.boundary_error) << ','
            << format_full(r.max_energy_residual) << '\n';
    }
}

std::string certificate_report(const PotentialConstants& c) {
    std::ostringstream os;
    os << "delta_star = " << format_full(c.delta_star) << "\n"
       << "K          = " << format_full(c.K) << "\n"
       << "C_minus    = " << format_full(c.C_minus) << "\n"
       << "C_plus     = " << format_full(c.C_plus) << "\n"
       << "certified inequalities (grid, worst margin):\n";
    for (const auto& e : c.certificate)
        os << "  " << e.inequality << "  " << e.grid_resolution << "  "
           << format_full(e.worst_margin) << "\n";
    return os.str();
}

namespace {

const char* status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::Converged: return "converged";
        case SolveStatus::NotConverged: return "not_converged";
        case SolveStatus::GeneralizedCandidate: return "generalized_candidate";
        case SolveStatus::IndexViolation: return "index_violation";
    }
    return "?";
}

}  // namespace

std::string critical_point_report(const CriticalPoint& p) {
    std::ostringstream os;
    os << "status            = " << status_name(p.status) << "\n"
       << "beta              = " << format_full(p.beta) << "\n"
       << "maupertuis_value  = " << format_full(p.maupertuis_value) << "\n"
       << "gradient_norm     = " << format_full(p.gradient_norm) << "\n"
       << "omega             = " << format_full(p.omega) << "\n"
       << "morse_index       = " << p.morse_index << "\n"
       << "min_centre_dist   = " << format_full(p.min_centre_distance) << "\n"
       << "iterations        = " << p.iterations << "\n"
       << "n_nodes           = " << p.path.n() << "\n";
    return os.str();
}

namespace {

std::string series_line(const char* name, const std::vector<double>& v) {
    std::ostringstream os;
    os << name << " =";
    for (double x : v) os << ' ' << format_full(x);
    os << '\n';
    return os.str();
}

}  // namespace

std::string hypothesis_report_text(const HypothesisReport& r) {
    std::ostringstream os;
    os << series_line("R", r.R_values) << series_line("min_radius", r.min_radius)
       << series_line("min_centre_distance", r.centre_floor) << series_line("width", r.width)
       << series_line("omega_gap", r.omega_gap) << series_line("cauchy_sup", r.cauchy)
       << series_line("cauchy_ratio", r.cauchy_ratio);
    os << "min_radius_bounded        = " << (r.min_radius_bounded ? "yes" : "NO") << '\n'
       << "centre_distances_floored  = " << (r.centre_distances_floored ? "yes" : "NO") << '\n'
       << "width_bounded             = " << (r.width_bounded ? "yes" : "NO") << '\n'
       << "cauchy_halving            = " << (r.cauchy_halving ? "yes" : "NO") << '\n'
       << "omega_gap_growing         = " << (r.omega_gap_growing ? "yes" : "NO") << '\n'
       << "hypotheses " << (r.ok() ? "HOLD" : "VIOLATED") << '\n';
    return os.str();
}

std::string scaling_report_text(const ScalingReport& r) {
    std::ostringstream os;
    os << "fitted_slope   = " << format_full(r.slope) << '\n'
       << "theory_slope   = " << format_full(r.theory_slope) << '\n'
       << "slope_rel_err  = " << format_full(r.slope_rel_err) << '\n'
       << "offset_band    = " << format_full(r.offset_band) << '\n'
       << series_line("offsets_vs_theory", r.offsets_vs_theory)
       << "offsets_non_growing = " << (r.offsets_non_growing ? "yes" : "NO") << '\n';
    return os.str();
}

std::string diagnostics_report_text(const DiagnosticsReport& r) {
    std::ostringstream os;
    os << "inequality, samples, worst_margin\n";
    for (const auto& m : r.margins)
        os << m.name << ", " << m.samples_checked << ", " << format_full(m.worst_margin) << '\n';
    os << "all margins >= -1e-8: " << (r.ok() ? "yes" : "NO") << '\n';
    return os.str();
}

int thread_cap() {
    const char* env = std::getenv("PARABOLICA_THREADS");
    if (!env) return 1;
    int v = std::atoi(env);
    return v > 0 ? v : 1;
}

}  // namespace parabolica
