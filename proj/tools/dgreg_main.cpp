#include "dgreg/config.hpp"
#include "dgreg/convergence.hpp"
#include "dgreg/errors.hpp"
#include "dgreg/io.hpp"
#include "dgreg/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <random>
#include <regex>

using namespace dgreg;
using nlohmann::json;

namespace {

constexpr int exit_config = 2;
constexpr int exit_numeric = 3;

int fail(const char* kind, const std::string& message, int code) {
    json j;
    j["error"] = kind;
    j["message"] = message;
    j["exit_code"] = code;
    std::cerr << j.dump() << std::endl;
    return code;
}

ImageVolume load_any_image(const fs::path& p) {
    if (p.extension() == ".pgm") {
        return read_pgm(p);
    }
    return read_image(p);
}

MeshPtr mesh_for(const ImageVolume& img) {
    const auto e = img.extents();
    return GridMesh::build(e);
}

/// velocity_<k>.json files of a directory, ordered by k.
std::vector<fs::path> velocity_files(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw ConfigError("velocity directory not found: " + dir.string());
    }
    const std::regex pat("velocity_([0-9]+)\\.json");
    std::vector<std::pair<int, fs::path>> found;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::smatch m;
        const std::string name = entry.path().filename().string();
        if (std::regex_match(name, m, pat)) {
            found.emplace_back(std::stoi(m[1].str()), entry.path());
        }
    }
    if (found.empty()) {
        throw ConfigError("no velocity_<k>.json files in " + dir.string());
    }
    std::sort(found.begin(), found.end());
    std::vector<fs::path> out;
    for (auto& f : found) {
        out.push_back(f.second);
    }
    return out;
}

std::pair<DgScalarField, DgScalarField> prepare_images(const RunConfig& cfg, json& meta) {
    ImageVolume a = load_any_image(cfg.input);
    ImageVolume e = load_any_image(cfg.target);
    if (!a.same_shape(e)) {
        throw ConfigError("input and target images differ in shape");
    }
    if (cfg.normalize) {
        a = normalize_percentile(a, cfg.lo_percentile, cfg.hi_percentile);
        e = normalize_percentile(e, cfg.lo_percentile, cfg.hi_percentile);
    }
    if (cfg.affine_registration) {
        a = resample_image(a, read_affine(*cfg.affine_registration));
    }
    if (cfg.crop) {
        std::tie(a, e) = crop_and_pad(a, e, cfg.pad);
    }
    meta["dims"] = a.extents();
    meta["offset"] = std::vector<int>(a.offset.begin(), a.offset.begin() + a.dim);
    const MeshPtr mesh = mesh_for(a);
    return {voxel_image_to_dg(a, mesh), voxel_image_to_dg(e, mesh)};
}

int cmd_register(const std::string& config_path, bool quiet) {
    const RunConfig cfg = load_run_config(config_path);
    json meta;
    auto [phi_a, phi_e] = prepare_images(cfg, meta);
    fs::create_directories(cfg.output_dir);
    auto on_row = [&](const TraceRow& r) {
        if (!quiet) {
            std::fprintf(stderr, "stage %d iter %d objective %.6e l2 %.6e |g| %.3e\n", r.stage, r.iteration,
                         r.objective, r.l2, r.grad_norm);
        }
    };
    const RegistrationResult res = register_multistage(phi_a, phi_e, cfg.stages, on_row);
    write_trace_csv(cfg.output_dir / "trace.csv", res.trace);
    write_image(cfg.output_dir / "image_0.json", dg_to_voxel_image(res.images[0]));
    json stages = json::array();
    for (std::size_t i = 0; i < res.velocities.size(); ++i) {
        const std::string k = std::to_string(i + 1);
        write_field(cfg.output_dir / ("velocity_" + k + ".json"), res.velocities[i]);
        write_field(cfg.output_dir / ("state_" + k + ".json"), res.images[i + 1]);
        write_image(cfg.output_dir / ("image_" + k + ".json"), dg_to_voxel_image(res.images[i + 1]));
        const StageSummary& s = res.stages[i];
        stages.push_back({{"stage", i + 1},
                          {"status", to_string(s.status)},
                          {"iterations", s.iterations},
                          {"evaluations", s.evaluations},
                          {"delta", s.delta},
                          {"initial_objective", s.initial_objective},
                          {"final_objective", s.final_objective},
                          {"initial_l2", s.initial_l2},
                          {"final_l2", s.final_l2}});
    }
    meta["stages"] = stages;
    meta["seed"] = cfg.seed;
    std::ofstream(cfg.output_dir / "summary.json") << meta.dump(2) << "\n";
    std::cout << meta.dump() << std::endl;
    return 0;
}

int cmd_transport(const std::string& image_path, const std::string& velocity_path, int steps, double epsilon,
                  double final_time, const std::string& out) {
    const ImageVolume img = load_any_image(image_path);
    const MeshPtr mesh = mesh_for(img);
    TransportProblem p;
    p.mesh = mesh;
    p.velocity = read_cg_field(velocity_path, mesh);
    p.velocity.dirichlet_zero = true;
    p.steps = steps;
    p.epsilon = epsilon;
    p.final_time = final_time;
    const TransportResult r = solve_transport(voxel_image_to_dg(img, mesh), p);
    if (!out.empty()) {
        write_image(out, dg_to_voxel_image(r.final_state));
    }
    json j{{"cfl", r.cfl.number}, {"dt", r.cfl.dt}, {"h_min", r.cfl.h_min}, {"max_speed", r.cfl.max_speed},
           {"advisory", r.cfl.advisory}};
    std::cout << j.dump() << std::endl;
    return 0;
}

int cmd_transform(const std::string& mesh_path, const std::vector<std::string>& affines, const std::string& vdir,
                  const std::string& backend, int steps, const std::string& out, const std::string& vtk,
                  const std::string& report) {
    const SimplicialMesh mesh = read_mesh(mesh_path);
    if (affines.size() != 3) {
        throw ConfigError("--affines needs exactly three files");
    }
    const auto files = velocity_files(vdir);
    const MeshPtr grid = GridMesh::build(read_field_dims(files[0]));
    std::vector<CgVectorField> velocities;
    for (const auto& f : files) {
        velocities.push_back(read_cg_field(f, grid));
    }
    FlowOptions opt;
    opt.backend = parse_backend(backend);
    opt.steps_per_field = steps;
    const TransformResult r = transform_mesh(mesh, read_affine(affines[0]), read_affine(affines[1]), velocities,
                                             read_affine(affines[2]), opt);
    write_mesh(out, r.mesh);
    if (!vtk.empty()) {
        write_vtk(vtk, r.mesh, r.after.radius_ratio);
    }
    if (!report.empty()) {
        write_quality_json(report, r);
    }
    json j{{"min_ratio_before", r.before.min_ratio}, {"min_ratio_after", r.after.min_ratio},
           {"roughness_before", r.before.roughness}, {"roughness_after", r.after.roughness},
           {"inverted", r.inverted.size()}, {"clamped", r.clamped.size()}};
    std::cout << j.dump() << std::endl;
    return 0;
}

int cmd_gradcheck(const std::string& config_path, int dirs, const std::vector<double>& steps) {
    const RunConfig cfg = load_run_config(config_path);
    json meta;
    auto [phi_a, phi_e] = prepare_images(cfg, meta);
    const StageConfig& st = cfg.stages.front();
    ControlChain chain(phi_a.mesh, st.smoother());
    ObjectiveConfig oc;
    oc.gamma = st.gamma;
    oc.delta = st.delta.value_or(default_huber_delta(phi_e.coefficients));
    const ReducedObjective j(phi_a, phi_e, st.transport(), oc, chain);
    std::mt19937_64 rng(cfg.seed);
    auto draw = [&]() {
        std::vector<double> x(j.size());
        for (double& v : x) {
            v = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
        }
        return x;
    };
    std::vector<double> v_hat = draw();
    for (double& v : v_hat) {
        v *= 0.1;
    }
    json out = json::array();
    bool degraded = false;
    for (int k = 0; k < dirs; ++k) {
        const FdReport rep = fd_gradient_check(j, v_hat, draw(), steps);
        json rows = json::array();
        for (const FdRow& r : rep.rows) {
            rows.push_back({{"step", r.step}, {"fd", r.finite_difference}, {"adjoint", r.adjoint},
                            {"relative_error", r.relative_error}});
        }
        out.push_back({{"direction", k + 1}, {"min_error", rep.min_error}, {"degraded", rep.degraded}, {"rows", rows}});
        degraded = degraded || rep.degraded;
    }
    std::cout << json{{"epsilon", st.epsilon}, {"degraded", degraded}, {"directions", out}}.dump(2) << std::endl;
    return 0;
}

int cmd_convergence(const std::string& name, int levels, int base, double cfl, const std::string& out) {
    ConvergenceOptions o;
    o.levels = levels;
    o.base = base;
    o.cfl = cfl;
    const auto rows = convergence_study(name, o);
    std::string csv = "n,steps,dt,cfl,l2_error,order\n";
    for (const auto& r : rows) {
        csv += std::to_string(r.n) + ',' + std::to_string(r.steps) + ',' + format_double(r.dt) + ',' +
               format_double(r.cfl) + ',' + format_double(r.l2_error) + ',' + format_double(r.order) + '\n';
    }
    if (!out.empty()) {
        std::ofstream(out) << csv;
    }
    std::cout << csv;
    return 0;
}

int cmd_synth(const std::string& name, const std::vector<int>& dims, const std::string& out, std::uint64_t seed,
              const std::vector<int>& shift, double angle, bool pgm) {
    SyntheticParams p;
    for (std::size_t a = 0; a < shift.size() && a < 3; ++a) {
        p.shift[a] = shift[a];
    }
    p.angle = angle;
    const SyntheticPair pair = make_synthetic(name, dims, p, seed);
    fs::create_directories(out);
    write_image(fs::path(out) / "input.json", pair.input);
    write_image(fs::path(out) / "target.json", pair.target);
    if (pgm) {
        write_pgm(fs::path(out) / "input.pgm", pair.input);
        write_pgm(fs::path(out) / "target.pgm", pair.target);
    }
    json meta{{"case", name}, {"dims", dims}, {"seed", seed}};
    if (pair.translation) {
        meta["translation"] = std::vector<double>(pair.translation->begin(), pair.translation->begin() + static_cast<long>(dims.size()));
    }
    std::ofstream(fs::path(out) / "meta.json") << meta.dump(2) << "\n";
    std::cout << meta.dump() << std::endl;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DG transport image registration"};
    app.require_subcommand(1);

    std::string config;
    bool quiet = false;
    auto* reg = app.add_subcommand("register", "multi-stage registration from a JSON run config");
    reg->add_option("--config", config, "run config")->required();
    reg->add_flag("--quiet", quiet, "no per-iteration log");

    std::string image;
    std::string velocity;
    std::string out;
    int steps = 100;
    double epsilon = 1e-2;
    double final_time = 1.0;
    auto* tr = app.add_subcommand("transport", "single forward transport solve");
    tr->add_option("--image", image)->required();
    tr->add_option("--velocity", velocity)->required();
    tr->add_option("--steps", steps);
    tr->add_option("--epsilon", epsilon);
    tr->add_option("--final-time", final_time);
    tr->add_option("--out", out);

    std::string mesh_path;
    std::vector<std::string> affines;
    std::string vdir;
    std::string backend = "trace";
    std::string vtk;
    std::string report;
    int map_steps = 100;
    auto* tm = app.add_subcommand("transform-mesh", "move a mesh through affines and velocities");
    tm->add_option("--mesh", mesh_path)->required();
    tm->add_option("--affines", affines, "input, registration and target affines")->expected(3)->required();
    tm->add_option("--velocities", vdir, "directory with velocity_<k>.json")->required();
    tm->add_option("--backend", backend)->check(CLI::IsMember({"trace", "cg-transport"}));
    tm->add_option("--steps", map_steps);
    tm->add_option("--out", out)->required();
    tm->add_option("--vtk", vtk);
    tm->add_option("--report", report);

    int dirs = 5;
    std::vector<double> fd_steps{1e-3, 1e-4, 1e-5, 1e-6, 1e-7};
    auto* gc = app.add_subcommand("gradcheck", "finite-difference check of the adjoint gradient");
    gc->add_option("--config", config)->required();
    gc->add_option("--dirs", dirs)->check(CLI::PositiveNumber);
    gc->add_option("--steps", fd_steps);

    std::string conv_case = "rotate-blob";
    int levels = 4;
    int base = 16;
    double cfl = 0.2;
    auto* cv = app.add_subcommand("convergence", "order-of-accuracy table");
    cv->add_option("--case", conv_case);
    cv->add_option("--levels", levels);
    cv->add_option("--base", base);
    cv->add_option("--cfl", cfl);
    cv->add_option("--out", out);

    std::string synth_case;
    std::vector<int> dims;
    std::uint64_t seed = 0;
    std::vector<int> shift{3, 0, 0};
    double angle = 0.3;
    bool pgm = false;
    auto* sy = app.add_subcommand("synth", "write a synthetic image pair");
    sy->add_option("--case", synth_case)->required();
    sy->add_option("--dims", dims)->required()->expected(2, 3);
    sy->add_option("--out", out)->required();
    sy->add_option("--seed", seed);
    sy->add_option("--shift", shift)->expected(2, 3);
    sy->add_option("--angle", angle);
    sy->add_flag("--pgm", pgm, "also write 16-bit PGM files (2D)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what(), exit_config);
    }

    try {
        if (*reg) {
            return cmd_register(config, quiet);
        }
        if (*tr) {
            return cmd_transport(image, velocity, steps, epsilon, final_time, out);
        }
        if (*tm) {
            return cmd_transform(mesh_path, affines, vdir, backend, map_steps, out, vtk, report);
        }
        if (*gc) {
            return cmd_gradcheck(config, dirs, fd_steps);
        }
        if (*cv) {
            return cmd_convergence(conv_case, levels, base, cfl, out);
        }
        return cmd_synth(synth_case, dims, out, seed, shift, angle, pgm);
    } catch (const ConfigError& e) {
        return fail("config", e.what(), exit_config);
    } catch (const InvalidArgument& e) {
        return fail("invalid_argument", e.what(), exit_config);
    } catch (const OutOfDomain& e) {
        return fail("out_of_domain", e.what(), exit_config);
    } catch (const NumericBlowup& e) {
        return fail("numeric_blowup", e.what(), exit_numeric);
    } catch (const SolverError& e) {
        return fail("solver", e.what(), exit_numeric);
    } catch (const AssemblyError& e) {
        return fail("assembly", e.what(), exit_numeric);
    } catch (const fs::filesystem_error& e) {
        return fail("filesystem", e.what(), exit_config);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), 1);
    }
}
