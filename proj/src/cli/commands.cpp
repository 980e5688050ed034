#include "lactodyn/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "lactodyn/cli/config.hpp"
#include "lactodyn/errors.hpp"
#include "lactodyn/manifold.hpp"
#include "lactodyn/model.hpp"
#include "lactodyn/report.hpp"

namespace lactodyn::cli {

namespace {

namespace fs = std::filesystem;

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read '" + path.string() + "' for hashing");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 14];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return hex.str();
}

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write '" + path.string() + "'");
    return out;
}

struct ReportOptions {
    double t = 0.0;
    int n_periods = 0;     // 0: use the config
    double delta = 0.0;    // 0: use the config
    bool slice = false;
    double x_min = 1e-3, x_max = 50.0, v_min = 1e-3, v_max = 50.0;
    int points = 256;
    std::string csv;
};

EquilibriumReport frozen_report(const ScenarioConfig& cfg, double t) {
    const double f = cfg.F.build()(t);
    if (cfg.model == Model::TwoD) {
        const Params2D& p = cfg.params;
        const double j = cfg.J.build()(t);
        EquilibriumReport rep = equilibrium_2d(j, f, p);
        if (cfg.J.coupling != 0.0) {
            rep.point = frozen_equilibrium(cfg, t);
            const double jx = j + cfg.J.coupling * (rep.point[0] - cfg.J.x_ref);
            rep.residual_norm = stationarity_2d(State2D::from(rep.point), p, jx, f).norm();
            classify_2d(rep, p, cfg.J.coupling, f);
        }
        return rep;
    }
    const Params4D& p = cfg.params;
    const Eigen::Vector3d j{cfg.J0.build()(t), cfg.J1.build()(t), cfg.J2.build()(t)};
    EquilibriumReport rep = equilibrium_4d(j[0], j[1], j[2], f, p);
    const Eigen::Vector3d cpl{cfg.J0.coupling, cfg.J1.coupling, cfg.J2.coupling};
    if (!cpl.isZero()) {
        const Eigen::Vector3d ref{cfg.J0.x_ref, cfg.J1.x_ref, cfg.J2.x_ref};
        rep.point = frozen_equilibrium(cfg, t);
        const State4D s = State4D::from(rep.point);
        const Eigen::Vector3d jx = j + cpl.cwiseProduct(Eigen::Vector3d::Constant(s.x) - ref);
        rep.residual_norm = stationarity_4d(s, p, jx, f).norm();
        const Eigen::EigenSolver<Eigen::Matrix4d> solver(jacobian_4d(s, p, cpl, f), false);
        rep.eigenvalues.clear();
        for (int i = 0; i < 4; ++i) rep.eigenvalues.push_back(solver.eigenvalues()[i]);
        std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end(),
                  [](const auto& a, const auto& b) { return a.real() > b.real(); });
        rep.classification = classify(rep.eigenvalues);
        rep.stable = rep.eigenvalues.front().real() < 0.0;
    }
    return rep;
}

void require_2d(const ScenarioConfig& cfg, const std::string& command) {
    if (cfg.model != Model::TwoD) throw InvalidArgument(command + " supports the 2d model only");
}

// Computes the key-value report of one analysis command, writing the CSV
// sidecar when requested.
KeyValues compute_report(const std::string& command, const ScenarioConfig& cfg, const ReportOptions& opt) {
    if (command == "equilibrium") return report_equilibrium(frozen_report(cfg, opt.t));

    if (command == "manifold") {
        const Signal F = cfg.F.build();
        const double t_end = F.period() ? *F.period() : cfg.horizon;
        std::optional<std::ofstream> file;
        if (!opt.csv.empty()) file.emplace(open_output(opt.csv));
        std::vector<double> xs, vs;
        for (int i = 0; i < opt.points; ++i) {
            xs.push_back(opt.x_min + (opt.x_max - opt.x_min) * i / std::max(1, opt.points - 1));
            vs.push_back(opt.v_min + (opt.v_max - opt.v_min) * i / std::max(1, opt.points - 1));
        }
        if (cfg.model == Model::TwoD) {
            if (opt.slice && file) write_slice_csv_2d(*file, xs, F(opt.t), cfg.params);
            return report_mu(mu_bound_2d(opt.x_min, opt.x_max, 0.0, t_end, cfg.params, F, opt.points));
        }
        if (opt.slice && file) write_slice_csv_4d(*file, xs, vs, F(opt.t), cfg.params);
        return report_mu(
            mu_bound_4d(opt.x_min, opt.x_max, opt.v_min, opt.v_max, 0.0, t_end, cfg.params, F, std::min(opt.points, 64)));
    }

    if (command == "average") {
        require_2d(cfg, command);
        AveragingOptions aopt;
        aopt.integrator = cfg.integrator;
        const Signal F = cfg.F.build();
        const Control J = cfg.J.control();
        const AveragingReport avg = predict_periodic_orbit(cfg.period, cfg.params, F, J, aopt);
        ShootingOptions sopt;
        sopt.integrator = cfg.integrator;
        sopt.max_iterations = cfg.shooting_max_iterations;
        sopt.tol = cfg.shooting_tol;
        const PeriodicOrbitReport orbit =
            refine_periodic_orbit(Eigen::Vector2d(avg.predicted_initial), cfg.period, cfg.params, F, J, sopt);
        KeyValues kv = report_averaging(avg);
        const KeyValues more = report_orbit(orbit);
        kv.insert(kv.end(), more.begin(), more.end());
        return kv;
    }

    if (command == "dip") {
        const DipResult result = run_dip(cfg);
        if (!opt.csv.empty()) {
            std::ofstream file = open_output(opt.csv);
            write_dip_target_csv(file, result);
        }
        return report_dip(result.report);
    }

    if (command == "buffer") {
        const BufferingResult result = run_buffering(cfg, opt.n_periods > 0 ? opt.n_periods : cfg.n_periods);
        if (!opt.csv.empty()) {
            std::ofstream file = open_output(opt.csv);
            write_buffering_csv(file, result.report);
        }
        KeyValues kv = report_buffering(result.report);
        for (const KeyValues& part : {report_averaging(result.averaging), report_orbit(result.orbit)})
            for (const auto& [k, v] : part)
                if (k != "period") kv.emplace_back(k, v);
        return kv;
    }

    if (command == "sensitivity") {
        const SensitivityTable table = run_sensitivity_4d(cfg, opt.delta > 0.0 ? opt.delta : cfg.sensitivity_delta);
        if (!opt.csv.empty()) {
            std::ofstream file = open_output(opt.csv);
            write_sensitivity_csv(file, table);
        }
        return report_sensitivity(table);
    }
    throw InvalidArgument("unknown command '" + command + "'");
}

int simulate(const LoadedConfig& loaded, const std::string& model, const std::string& prefix, std::ostream& out) {
    ScenarioConfig cfg = loaded.config;
    if (model == "2d") cfg.model = Model::TwoD;
    if (model == "4d") cfg.model = Model::FourD;
    cfg.validate();
    const OdeProblem problem =
        cfg.model == Model::TwoD
            ? make_problem_2d(cfg.params, cfg.J.control(), cfg.F.build(), 0.0, cfg.horizon)
            : make_problem_4d(cfg.params, {cfg.J0.control(), cfg.J1.control(), cfg.J2.control()}, cfg.F.build(), 0.0,
                              cfg.horizon);
    const Trajectory traj = integrate(problem, 0.0, cfg.horizon, frozen_equilibrium(cfg, 0.0), cfg.integrator);

    const fs::path csv_path = prefix + ".csv";
    const fs::path manifest_path = prefix + ".manifest";
    {
        std::ofstream csv = open_output(csv_path);
        write_csv(csv, traj);
    }
    std::ofstream manifest = open_output(manifest_path);
    manifest << "# lactodyn run manifest\n";
    manifest << "# tool_version = " << kToolVersion << '\n';
    manifest << "# command = simulate\n";
    for (const fs::path& input : loaded.inputs)
        manifest << "# input = " << input.string() << " sha256=" << sha256_file(input) << '\n';
    manifest << "# output = " << csv_path.string() << " sha256=" << sha256_file(csv_path) << '\n';
    manifest << serialize_config(cfg);
    out << "samples = " << traj.size() << '\n';
    out << "accepted = " << traj.stats().accepted << '\n';
    out << "rejected = " << traj.stats().rejected << '\n';
    if (traj.stats().quadrant_exit_time)
        out << "quadrant_exit_time = " << format_number(*traj.stats().quadrant_exit_time) << '\n';
    out << "csv = " << csv_path.string() << '\n';
    out << "manifest = " << manifest_path.string() << '\n';
    return kOk;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw ParseError("input CSV has no column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    }
};

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) parts.push_back(item);
    if (!s.empty() && s.back() == ',') parts.emplace_back();
    return parts;
}

Table read_table(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read '" + path.string() + "'");
    Table table;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_commas(line);
        if (table.header.empty()) {
            table.header = cells;
            if (table.header.front() != "t") throw ParseError("schema mismatch: first column must be 't'", number);
            continue;
        }
        if (cells.size() != table.header.size())
            throw ParseError("schema mismatch: expected " + std::to_string(table.header.size()) + " columns", number);
        std::vector<double> row;
        for (const std::string& c : cells) {
            char* end = nullptr;
            const double v = std::strtod(c.c_str(), &end);
            if (c.empty() || *end != '\0') throw ParseError("schema mismatch: '" + c + "' is not a number", number);
            row.push_back(v);
        }
        table.rows.push_back(std::move(row));
    }
    if (table.header.empty()) throw ParseError("schema mismatch: empty input");
    return table;
}

int plotdata(const std::string& input, const std::string& kind, const std::string& config, const std::string& columns,
             const std::string& plane, std::ostream& out) {
    const Table table = read_table(input);
    auto emit = [&](const std::vector<std::size_t>& cols, const std::vector<std::string>& names,
                    const std::function<double(const std::vector<double>&)>& extra) {
        for (std::size_t i = 0; i < names.size(); ++i) out << (i ? "," : "") << names[i];
        out << '\n';
        for (const auto& row : table.rows) {
            for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << format_number(row[cols[i]]);
            if (extra) out << ',' << format_number(extra(row));
            out << '\n';
        }
    };
    if (kind == "timeseries") {
        std::vector<std::string> names{"t"};
        for (const std::string& c : split_commas(columns)) names.push_back(c);
        std::vector<std::size_t> cols;
        for (const std::string& n : names) cols.push_back(table.column(n));
        emit(cols, names, nullptr);
        return kOk;
    }
    if (kind == "phase") {
        const std::vector<std::string> names = split_commas(plane);
        if (names.size() != 2) throw ParseError("--plane takes two comma-separated columns");
        emit({table.column(names[0]), table.column(names[1])}, names, nullptr);
        return kOk;
    }
    if (kind == "manifold-overlay") {
        if (config.empty()) throw ParseError("manifold-overlay needs --config");
        const ScenarioConfig cfg = load_config(config).config;
        const Signal F = cfg.F.build();
        const std::size_t tc = table.column("t");
        const std::size_t xc = table.column("x");
        std::vector<std::size_t> cols(table.header.size());
        for (std::size_t i = 0; i < cols.size(); ++i) cols[i] = i;
        std::vector<std::string> names = table.header;
        names.push_back("phi");
        if (cfg.model == Model::TwoD) {
            emit(cols, names, [&](const std::vector<double>& r) { return phi_2d(r[xc], F(r[tc]), cfg.params); });
        } else {
            const std::size_t vc = table.column("v");
            emit(cols, names, [&](const std::vector<double>& r) { return phi_4d(r[xc], r[vc], F(r[tc]), cfg.params); });
        }
        return kOk;
    }
    throw ParseError("unknown plot kind '" + kind + "' (expected timeseries, phase or manifold-overlay)");
}

int exit_code_of(const std::exception_ptr& error, std::ostream& err) {
    try {
        std::rethrow_exception(error);
    } catch (const ParseError& e) {
        err << "error: parse: " << e.what() << '\n';
        return kUsage;
    } catch (const InvalidArgument& e) {
        err << "error: invalid argument: " << e.what() << '\n';
        return kUsage;
    } catch (const InfeasibleError& e) {
        err << "error: infeasible: " << e.what() << '\n';
        return kInfeasible;
    } catch (const DomainError& e) {
        err << "error: infeasible (pole): " << e.what() << '\n';
        return kInfeasible;
    } catch (const IntegrationError& e) {
        err << "error: integration failed: " << e.what() << '\n';
        return kIntegration;
    } catch (const ConditionError& e) {
        err << "error: averaging " << e.what() << '\n';
        return kCondition;
    } catch (const ConvergenceError& e) {
        err << "error: no convergence: " << e.what() << '\n';
        return kConvergence;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUnexpected;
    }
}

std::string replace_key(const std::string& resolved, const std::string& key, const std::string& value) {
    std::istringstream in(resolved);
    std::ostringstream out;
    std::string line;
    bool found = false;
    while (std::getline(in, line)) {
        if (line.rfind(key + " = ", 0) == 0) {
            line = key + " = " + value;
            found = true;
        }
        out << line << '\n';
    }
    if (!found) throw ParseError("sweep key '" + key + "' is not a resolved config key");
    return out.str();
}

int sweep(const LoadedConfig& loaded, const std::string& command, const std::string& key,
          const std::string& values, const std::string& out_dir, int jobs, const ReportOptions& opt,
          std::ostream& out) {
    const std::vector<std::string> list = split_commas(values);
    if (list.empty()) throw ParseError("--values is empty");
    const std::string base = serialize_config(loaded.config);
    std::vector<int> codes(list.size(), kOk);
    std::vector<std::string> messages(list.size());
    std::atomic<std::size_t> next{0};
    fs::create_directories(out_dir);

    auto worker = [&]() {
        for (std::size_t i = next++; i < list.size(); i = next++) {
            std::ostringstream diag;
            try {
                const ScenarioConfig cfg = parse_config(replace_key(base, key, list[i])).config;
                ReportOptions job = opt;
                if (!job.csv.empty()) job.csv = (fs::path(out_dir) / (command + "_" + std::to_string(i) + ".csv")).string();
                const KeyValues kv = compute_report(command, cfg, job);
                std::ofstream file = open_output(fs::path(out_dir) / (command + "_" + std::to_string(i) + ".txt"));
                file << "# " << key << " = " << list[i] << '\n';
                write_key_values(file, kv);
            } catch (...) {
                codes[i] = exit_code_of(std::current_exception(), diag);
                messages[i] = diag.str();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int j = 1; j < std::max(1, jobs); ++j) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    int overall = kOk;
    for (std::size_t i = 0; i < list.size(); ++i) {
        out << "job_" << i << " = " << key << '=' << list[i] << " exit=" << codes[i] << '\n';
        if (codes[i] != kOk && overall == kOk) overall = codes[i];
    }
    return overall;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Controlled fast-slow lactate kinetics: simulation and analysis"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    std::string config;
    ReportOptions opt;
    std::string model, prefix, kind, plane = "x,y", columns = "x", input, key, values, out_dir = "sweep", command;
    int jobs = 1;

    auto* sim = app.add_subcommand("simulate", "integrate the configured protocol from its frozen equilibrium");
    sim->add_option("config", config, "config file or scenario name")->required();
    sim->add_option("--model", model, "override the model")->check(CLI::IsMember({"2d", "4d"}));
    sim->add_option("--out", prefix, "output prefix for <prefix>.csv and <prefix>.manifest")->required();

    std::vector<CLI::App*> reports;
    for (const auto& [name, help, scenario] :
         std::vector<std::tuple<std::string, std::string, std::string>>{
             {"equilibrium", "frozen-input equilibrium with eigenvalues", "dip"},
             {"manifold", "critical-manifold attractiveness bound and slices", "dip"},
             {"average", "averaging prediction and shooting refinement", "buffer"},
             {"dip", "dip experiment report", "dip"},
             {"buffer", "periodic buffering / frequency-locking report", "buffer"},
             {"sensitivity", "4d quasi-stationary sign table", "sensitivity"}}) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("config", config, "config file or scenario name")->default_str(scenario);
        sub->add_option("--csv", opt.csv, "CSV sidecar path");
        reports.push_back(sub);
    }
    app.get_subcommand("equilibrium")->add_option("--t", opt.t, "time at which inputs are frozen");
    auto* man = app.get_subcommand("manifold");
    man->add_option("--t", opt.t, "time of the slice");
    man->add_flag("--slice", opt.slice, "write the manifold grid to --csv");
    man->add_option("--x-min", opt.x_min);
    man->add_option("--x-max", opt.x_max);
    man->add_option("--v-min", opt.v_min);
    man->add_option("--v-max", opt.v_max);
    man->add_option("--points", opt.points)->check(CLI::Range(2, 100000));
    app.get_subcommand("buffer")->add_option("--n-periods", opt.n_periods)->check(CLI::PositiveNumber);
    app.get_subcommand("sensitivity")->add_option("--delta", opt.delta)->check(CLI::PositiveNumber);

    auto* plot = app.add_subcommand("plotdata", "plot-ready columns from a trajectory CSV");
    plot->add_option("input", input, "trajectory CSV")->required();
    plot->add_option("--kind", kind)->required()->check(CLI::IsMember({"timeseries", "phase", "manifold-overlay"}));
    plot->add_option("--config", config, "config for manifold-overlay");
    plot->add_option("--columns", columns, "timeseries columns after t");
    plot->add_option("--plane", plane, "phase plane columns, e.g. x,v");

    auto* sw = app.add_subcommand("sweep", "one-parameter sweep of an analysis command");
    sw->add_option("config", config)->required();
    sw->add_option("--command", command)->required()->check(
        CLI::IsMember({"equilibrium", "manifold", "average", "dip", "buffer", "sensitivity"}));
    sw->add_option("--key", key, "resolved config key, e.g. params.C")->required();
    sw->add_option("--values", values, "comma-separated values")->required();
    sw->add_option("--out-dir", out_dir);
    sw->add_option("--jobs", jobs)->check(CLI::Range(1, 256));
    sw->add_option("--csv", opt.csv, "also write per-job CSV sidecars (any non-empty value)");

    auto* show = app.add_subcommand("config", "print the resolved configuration");
    show->add_option("config", config)->default_str("dip");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        if (name == "plotdata") return plotdata(input, kind, config, columns, plane, out);
        if (config.empty()) config = sub->get_option("config")->get_default_str();
        const LoadedConfig loaded = load_config(config);
        if (name == "simulate") return simulate(loaded, model, prefix, out);
        if (name == "config") {
            out << serialize_config(loaded.config);
            return kOk;
        }
        if (name == "sweep") return sweep(loaded, command, key, values, out_dir, jobs, opt, out);
        write_key_values(out, compute_report(name, loaded.config, opt));
        return kOk;
    } catch (...) {
        return exit_code_of(std::current_exception(), err);
    }
}

}  // namespace lactodyn::cli
