// Command-line front end: single elliptic solves, convergence studies and
// backward Euler runs driven by a JSON config.

#include "dgline/study.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Interior-penalty DG solver for line-source problems"};
    app.require_subcommand(1);

    std::string out_dir = "out";
    unsigned threads = 0;
    bool vtk = true;
    app.add_option("--out-dir", out_dir, "Directory for CSV, VTK and metadata output")->capture_default_str();
    app.add_option("--threads", threads, "Worker threads (0: hardware concurrency)");
    app.add_flag("--vtk,!--no-vtk", vtk, "Write VTK solution files")->capture_default_str();

    std::string cfg_path;
    auto* elliptic = app.add_subcommand("solve-elliptic", "Solve the elliptic problem on every configured level");
    auto* parabolic = app.add_subcommand("solve-parabolic", "Backward Euler run on every configured level");
    auto* study = app.add_subcommand("study", "Convergence study with rate table");
    for (auto* sub : {elliptic, parabolic, study}) sub->add_option("config", cfg_path, "JSON config file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (threads > 0) dgline::set_thread_count(threads);
        const dgline::StudyConfig cfg = dgline::parse_config_file(cfg_path);
        dgline::RunOptions opt;
        opt.out_dir = out_dir;
        opt.vtk = vtk;
        opt.log = &std::cout;
        if (elliptic->parsed()) {
            dgline::run_elliptic(cfg, opt);
        } else if (study->parsed()) {
            if (!dgline::run_study(cfg, opt).ok()) return 2;
        } else {
            if (!dgline::run_parabolic(cfg, opt).ok()) return 2;
        }
        std::cout << "output written to " << out_dir << "\n";
    } catch (const dgline::SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
