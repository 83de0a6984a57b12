// Command-line front end: kepler closed-form arcs, single fixed-endpoint
// solves, and R-schedule continuation runs. Everything numeric is written
// with round-trip decimal formatting so reruns are bit-comparable.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "parabolica/io.hpp"

namespace fs = std::filesystem;
using namespace parabolica;

namespace {

constexpr int kExitUsage = 64;
constexpr int kExitNoSolution = 2;
constexpr int kExitNotConverged = 3;
constexpr int kExitCollision = 4;

struct KeplerFlags {
    double alpha = 1.0;
    double mu = 1.0;
    double theta1 = 0.0;
    double theta2 = kPi;
    int l = 0;
    double L = 200.0;
    int nodes = 4096;
    std::string out;
};

void write_kepler_summary(const fs::path& dir, const HomogeneousProblem& problem,
                          const KeplerArc& arc) {
    IndexCounters ic = index_counters(problem.alpha);
    std::ofstream out(dir / "summary.txt");
    out << "span          = " << format_full(entire_span(problem, arc.angular_momentum)) << "\n"
        << "c             = " << format_full(arc.angular_momentum) << "\n"
        << "action        = " << format_full(action_of_arc(arc)) << "\n"
        << "action_bound  = " << format_full(action_bound(problem)) << "\n"
        << "i_alpha       = " << ic.i << "\n"
        << "i_star_alpha  = " << ic.i_star << "\n";
}

int run_kepler(const std::string& sub, const KeplerFlags& f) {
    HomogeneousProblem problem{f.mu, f.alpha};
    problem.validate();
    if (sub == "span") {
        double c = 0.5 * problem.momentum_limit();
        std::cout << format_full(entire_span(problem, c)) << "\n";
        return 0;
    }
    if (sub == "index") {
        IndexCounters ic = index_counters(f.alpha);
        std::cout << "i = " << ic.i << "\n"
                  << "i_star = " << ic.i_star << "\n"
                  << "perpendicular_index(L=" << format_full(f.L) << ") = "
                  << perpendicular_index(problem, f.L, f.nodes) << "\n";
        return 0;
    }
    // shoot / action need an arc
    KeplerArc arc;
    try {
        arc = shoot(problem, f.theta1, f.theta2, f.l);
    } catch (const NoSolutionInClass& e) {
        std::cerr << "no solution in class: " << e.what() << "\n";
        return kExitNoSolution;
    }
    if (sub == "action") {
        std::cout << "action = " << format_full(action_of_arc(arc)) << "\n"
                  << "bound  = " << format_full(action_bound(problem)) << "\n";
    }
    if (!f.out.empty()) {
        fs::create_directories(f.out);
        write_arc_csv(fs::path(f.out) / "arc.csv", arc);
        write_kepler_summary(f.out, problem, arc);
    } else if (sub == "shoot") {
        std::cout << "c = " << format_full(arc.angular_momentum) << "\n";
    }
    return 0;
}

int run_solve(const std::string& config_file, double R_override, const std::string& out_override) {
    RunConfig cfg = load_run_config(config_file);
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (R_override > 0.0) cfg.R = R_override;
    if (!(cfg.R > 0.0)) {
        std::cerr << "no solve radius: set R in the config or pass --R\n";
        return kExitUsage;
    }
    CentreConfiguration problem = normalize(cfg.problem);
    PotentialConstants constants = certify_constants(problem);
    fs::create_directories(cfg.out_dir);
    std::ofstream(fs::path(cfg.out_dir) / "certificate.txt") << certificate_report(constants);

    ContinuationRecord rec;
    try {
        rec = solve_at_R(problem, cfg.xi_plus, cfg.xi_minus, cfg.R, cfg.solver, constants);
    } catch (const CollisionEncountered& e) {
        std::cerr << "collision at beta = 0: " << e.what() << "\n";
        return kExitCollision;
    }
    write_trajectory_csv(fs::path(cfg.out_dir) / "trajectory.csv", rec.trajectory);
    {
        std::ofstream out(fs::path(cfg.out_dir) / "record.txt");
        out << "R                  = " << format_full(rec.R) << "\n"
            << "omega              = " << format_full(rec.omega) << "\n"
            << "action             = " << format_full(rec.action) << "\n"
            << "min_radius         = " << format_full(rec.min_radius) << "\n"
            << "min_centre_dist    = " << format_full(rec.min_centre_distances.minCoeff()) << "\n"
            << "t_minus            = " << format_full(rec.t_minus) << "\n"
            << "t_plus             = " << format_full(rec.t_plus) << "\n"
            << "morse_index        = " << rec.morse_index << "\n"
            << "boundary_error     = " << format_full(rec.boundary_error) << "\n"
            << "max_h_residual     = " << format_full(rec.max_energy_residual) << "\n"
            << "polished           = " << (rec.polished ? "yes" : "no") << "\n";
    }
    std::ofstream(fs::path(cfg.out_dir) / "diagnostics.txt")
        << diagnostics_report_text(diagnostics(rec, problem, constants));

    if (rec.status == SolveStatus::GeneralizedCandidate) return kExitCollision;
    if (rec.status != SolveStatus::Converged) return kExitNotConverged;
    bool ok = rec.min_centre_distances.minCoeff() > 1e-3 && rec.morse_index <= 1;
    return ok ? 0 : kExitNotConverged;
}

int run_continue(const std::string& config_file, const std::string& out_override) {
    RunConfig cfg = load_run_config(config_file);
    if (!out_override.empty()) cfg.out_dir = out_override;
    CentreConfiguration problem = normalize(cfg.problem);
    PotentialConstants constants = certify_constants(problem);

    std::vector<double> schedule = cfg.R_schedule;
    if (schedule.empty()) {
        int count = cfg.schedule_count > 0 ? cfg.schedule_count : 3;
        double R = 10.0 * constants.K;
        for (int i = 0; i < count; ++i, R *= 2.0) schedule.push_back(R);
    }
    fs::create_directories(cfg.out_dir);
    std::ofstream(fs::path(cfg.out_dir) / "certificate.txt") << certificate_report(constants);

    ScheduleResult res = run_schedule(problem, cfg.xi_plus, cfg.xi_minus, schedule, cfg.solver,
                                      constants, /*throw_on_violation=*/false);
    write_records_csv(fs::path(cfg.out_dir) / "records.csv", res.records);
    for (size_t i = 0; i < res.records.size(); ++i)
        write_trajectory_csv(fs::path(cfg.out_dir) / ("trajectory_" + std::to_string(i) + ".csv"),
                             res.records[i].trajectory);
    std::ofstream(fs::path(cfg.out_dir) / "hypothesis_report.txt")
        << hypothesis_report_text(res.report);

    if (res.records.size() >= 3) {
        ScalingReport scaling = level_scaling(res.records, problem);
        std::ofstream(fs::path(cfg.out_dir) / "scaling_report.txt")
            << scaling_report_text(scaling);
    } else {
        std::ofstream(fs::path(cfg.out_dir) / "scaling_report.txt")
            << "level scaling skipped: need at least 3 records\n";
        std::cerr << "warning: level scaling skipped (schedule too short)\n";
    }
    try {
        AsymptoticFit fit =
            asymptotic_fit(res.records.back().trajectory, constants.K, res.records.back().R);
        std::ofstream out(fs::path(cfg.out_dir) / "asymptotic_fit.txt");
        out << "exponent   = " << format_full(fit.exponent) << "\n"
            << "prefactor  = " << format_full(fit.prefactor) << "\n"
            << "residual   = " << format_full(fit.residual) << "\n"
            << "direction  = [" << format_full(fit.direction_end.x()) << ", "
            << format_full(fit.direction_end.y()) << ", " << format_full(fit.direction_end.z())
            << "]\n";
    } catch (const InsufficientTail& e) {
        std::ofstream(fs::path(cfg.out_dir) / "asymptotic_fit.txt")
            << "tail fit skipped: " << e.what() << "\n";
    }
    return res.report.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"zero-energy N-centre trajectories with prescribed asymptotic directions"};
    app.require_subcommand(1);

    KeplerFlags kf;
    CLI::App* kepler_cmd = app.add_subcommand("kepler", "alpha-homogeneous arcs and indices");
    kepler_cmd->require_subcommand(1);
    std::vector<CLI::App*> kepler_subs;
    for (const char* name : {"span", "shoot", "action", "index"}) {
        CLI::App* sub = kepler_cmd->add_subcommand(name);
        sub->add_option("--alpha", kf.alpha, "homogeneity degree in [1,2)");
        sub->add_option("--mu", kf.mu, "attraction strength");
        sub->add_option("--theta1", kf.theta1, "start angle");
        sub->add_option("--theta2", kf.theta2, "end angle");
        sub->add_option("--l", kf.l, "rotation class");
        sub->add_option("--L", kf.L, "half-length for the index form");
        sub->add_option("--nodes", kf.nodes, "nodes for the index form");
        sub->add_option("--out", kf.out, "output directory");
        kepler_subs.push_back(sub);
    }

    std::string config_file, out_dir;
    double R = 0.0;
    CLI::App* solve_cmd = app.add_subcommand("solve", "fixed-endpoint solve at one radius");
    solve_cmd->add_option("--config", config_file, "JSON config file")->required();
    solve_cmd->add_option("--R", R, "endpoint radius");
    solve_cmd->add_option("--out", out_dir, "output directory");

    std::string cont_config, cont_out;
    CLI::App* cont_cmd = app.add_subcommand("continue", "R-schedule continuation run");
    cont_cmd->add_option("--config", cont_config, "JSON config file")->required();
    cont_cmd->add_option("--out", cont_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::cerr << app.help() << "\n" << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (kepler_cmd->parsed()) {
            for (size_t i = 0; i < kepler_subs.size(); ++i)
                if (kepler_subs[i]->parsed())
                    return run_kepler(kepler_subs[i]->get_name(), kf);
        }
        if (solve_cmd->parsed()) return run_solve(config_file, R, out_dir);
        if (cont_cmd->parsed()) return run_continue(cont_config, cont_out);
    } catch (const ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DomainError& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitUsage;
}
