// Command-line front end: scenario loading, experiment orchestration,
// persistence, and plot-ready CSV export.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cpi/analysis.hpp"
#include "cpi/correlation.hpp"
#include "cpi/imaging.hpp"
#include "cpi/io.hpp"
#include "cpi/manifest.hpp"
#include "cpi/parallel.hpp"
#include "cpi/speckle.hpp"
#include "cpi/version.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_precondition = 3;
constexpr int exit_io = 4;

struct GlobalArgs {
    std::string scenario_path;
    std::string out_dir = ".";
    std::string mask_spec;
    std::string mask_file;
    unsigned threads = 0;
    std::uint64_t seed = 20210715;
    std::vector<std::string> overrides;
    std::vector<std::string> argv_echo;
};

cpi::ScenarioConfig load_cfg(const GlobalArgs& g) {
    if (g.scenario_path.empty()) {
        throw cpi::ConfigError("no scenario file given (use --scenario)");
    }
    cpi::ScenarioConfig cfg = cpi::load_scenario(g.scenario_path);
    for (const auto& kv : g.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw cpi::ConfigError("--set expects key=value, got '" + kv + "'");
        }
        cpi::scenario_set_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
}

cpi::ApertureMask load_mask(const GlobalArgs& g) {
    if (!g.mask_spec.empty()) return cpi::parse_mask_spec(g.mask_spec);  // inline wins
    if (!g.mask_file.empty()) {
        std::ifstream in(g.mask_file);
        if (!in) throw cpi::IoError("cannot open mask file: " + g.mask_file);
        std::string line;
        while (std::getline(in, line)) {
            const auto h = line.find('#');
            if (h != std::string::npos) line = line.substr(0, h);
            const auto b = line.find_first_not_of(" \t\r\n");
            if (b == std::string::npos) continue;
            const auto e = line.find_last_not_of(" \t\r\n");
            return cpi::parse_mask_spec(line.substr(b, e - b + 1));
        }
        throw cpi::ConfigError("mask file has no spec line: " + g.mask_file);
    }
    throw cpi::ConfigError("no mask given (use --mask or --mask-file)");
}

std::string out_path(const GlobalArgs& g, const std::string& name) {
    std::filesystem::create_directories(g.out_dir);
    return g.out_dir + "/" + name;
}

cpi::RunManifest start_manifest(const GlobalArgs& g, const std::string& command,
                                const cpi::ScenarioConfig& cfg) {
    cpi::RunManifest m;
    m.command = command;
    m.args = g.argv_echo;
    m.scenario_text = cpi::serialize_scenario(cfg);
    m.scenario_hash = cpi::scenario_hash(cfg);
    m.seed = g.seed;
    m.stamp();
    return m;
}

void finish_manifest(cpi::RunManifest& m, const GlobalArgs& g, const std::string& command,
                     const std::vector<std::string>& outputs) {
    for (const auto& name : outputs) m.add_output(g.out_dir, name);
    cpi::save_manifest(m, out_path(g, command + ".manifest.json"));
}

cpi::PostprocessOptions parse_postprocess(const std::string& spec) {
    cpi::PostprocessOptions opt;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw cpi::ConfigError("--postprocess expects key=value items, got '" + item + "'");
        }
        const std::string key = item.substr(0, eq);
        const double v = std::stod(item.substr(eq + 1));
        if (key == "lowpass") {
            opt.lowpass_sigma = v;
        } else if (key == "threshold") {
            opt.threshold = v;
        } else {
            throw cpi::ConfigError("--postprocess: unknown key '" + key + "'");
        }
    }
    return opt;
}

// --- subcommand bodies ---

int cmd_gamma(const GlobalArgs& g, std::size_t na, std::size_t nb, const std::string& out) {
    const auto cfg = load_cfg(g);
    const auto mask = load_mask(g);
    auto m = start_manifest(g, "gamma", cfg);
    const auto plan = cpi::plan_tensor_grids(cfg, mask, na, nb);
    const auto tensor = cpi::gamma_map(cfg, mask, plan.grid_a, plan.grid_b);
    cpi::save_tensor(tensor, out_path(g, out));
    finish_manifest(m, g, "gamma", {out});
    std::printf("gamma: %zu x %zu tensor -> %s\n", tensor.grid_a.n, tensor.grid_b.n, out.c_str());
    return exit_ok;
}

int cmd_profile(const GlobalArgs& g, const std::string& tensor_path, const std::string& out,
                bool do_refocus) {
    const auto tensor = cpi::load_tensor(tensor_path);
    auto m = start_manifest(g, do_refocus ? "refocus" : "ghost", tensor.scenario);
    cpi::ImageProfile img = do_refocus ? cpi::refocus(tensor) : cpi::ghost_image(tensor);
    if (do_refocus && img.clipped_fraction > 0.05) {
        std::fprintf(stderr, "warning: %.1f%% of refocus samples fell outside the tensor grid\n",
                     100.0 * img.clipped_fraction);
    }
    cpi::profile_to_csv(img, out_path(g, out));
    finish_manifest(m, g, do_refocus ? "refocus" : "ghost", {out});
    std::printf("%s: %zu points -> %s\n", do_refocus ? "refocus" : "ghost", img.grid.n,
                out.c_str());
    return exit_ok;
}

int cmd_speckle(const GlobalArgs& g, std::size_t frames, std::size_t na, std::size_t nb,
                const std::string& stack_name, const std::string& tensor_name,
                const std::string& resume, const std::string& postprocess_spec) {
    const auto cfg = load_cfg(g);
    auto m = start_manifest(g, "speckle", cfg);

    cpi::FrameStack stack;
    if (!resume.empty()) {
        cpi::FrameStackReader reader(resume);
        stack = reader.read_all();
        std::printf("speckle: resumed %zu frames from %s\n", stack.n_frames, resume.c_str());
    } else {
        const auto mask = load_mask(g);
        const auto plan = cpi::PropagationPlan::make(cfg, mask, na, nb);
        stack = cpi::generate_frames(cfg, mask, plan, frames, g.seed);
        if (frames == 2) {
            std::fprintf(stderr, "warning: estimator on 2 frames is defined but high-variance\n");
        }
        cpi::save_frame_stack(stack, out_path(g, stack_name));
    }

    auto tensor = cpi::estimate_gamma(stack);
    if (!postprocess_spec.empty()) {
        tensor = cpi::postprocess(tensor, parse_postprocess(postprocess_spec));
    }
    cpi::save_tensor(tensor, out_path(g, tensor_name));
    std::vector<std::string> outs = {tensor_name};
    if (resume.empty()) outs.push_back(stack_name);
    finish_manifest(m, g, "speckle", outs);
    std::printf("speckle: %zu frames, estimated %zu x %zu tensor -> %s\n", stack.n_frames,
                tensor.grid_a.n, tensor.grid_b.n, tensor_name.c_str());
    return exit_ok;
}

int cmd_estimate(const GlobalArgs& g, const std::string& stack_path, const std::string& out,
                 const std::string& postprocess_spec) {
    cpi::FrameStackReader reader(stack_path);
    const auto stack = reader.read_all();
    auto m = start_manifest(g, "estimate", stack.scenario);
    auto tensor = cpi::estimate_gamma(stack);
    if (!postprocess_spec.empty()) {
        tensor = cpi::postprocess(tensor, parse_postprocess(postprocess_spec));
    }
    cpi::save_tensor(tensor, out_path(g, out));
    finish_manifest(m, g, "estimate", {out});
    std::printf("estimate: %zu frames -> %s\n", stack.n_frames, out.c_str());
    return exit_ok;
}

int cmd_vismap(const GlobalArgs& g, const std::string& modality_name, double d_min, double d_max,
               std::size_t d_steps, double z_min, double z_max, std::size_t z_steps, int nu,
               const std::string& out) {
    const auto cfg = load_cfg(g);
    const auto modality = cpi::modality_from_string(modality_name);
    if (!modality) throw cpi::ConfigError("unknown modality '" + modality_name + "'");
    if (d_steps < 1 || z_steps < 1) throw cpi::ConfigError("vismap: empty d or z range");
    auto m = start_manifest(g, "vismap", cfg);

    std::vector<double> ds(d_steps), zs(z_steps);
    for (std::size_t i = 0; i < d_steps; ++i) {
        ds[i] = d_steps == 1 ? d_min : d_min + (d_max - d_min) * double(i) / double(d_steps - 1);
    }
    for (std::size_t i = 0; i < z_steps; ++i) {
        zs[i] = z_steps == 1 ? z_min : z_min + (z_max - z_min) * double(i) / double(z_steps - 1);
    }
    cpi::ModalityOptions mopt;
    mopt.n_u_pixels = nu;
    const auto map = cpi::visibility_map(*modality, cfg, ds, zs, mopt);

    std::ofstream csv(out_path(g, out));
    if (!csv) throw cpi::IoError("cannot write map CSV");
    csv << "d,z_offset,modality,visibility,bound_z_min,bound_z_max\n";
    csv << std::setprecision(12);
    for (std::size_t id = 0; id < ds.size(); ++id) {
        double blo = std::numeric_limits<double>::quiet_NaN();
        double bhi = blo;
        if (*modality == cpi::Modality::cpi_refocused) {
            const auto bound =
                cpi::geometric_bound(cfg, cpi::make_slit_mask(2, 0.5 * ds[id], ds[id]));
            blo = bound.unbounded_low ? -std::numeric_limits<double>::infinity()
                                      : bound.z_min - cfg.z_a;
            bhi = bound.unbounded_high ? std::numeric_limits<double>::infinity()
                                       : bound.z_max - cfg.z_a;
        }
        for (std::size_t iz = 0; iz < zs.size(); ++iz) {
            csv << ds[id] << "," << zs[iz] - cfg.z_a << "," << modality_name << ","
                << map.at(id, iz) << "," << blo << "," << bhi << "\n";
        }
    }
    csv.close();
    finish_manifest(m, g, "vismap", {out});
    std::printf("vismap: %zu x %zu cells (%zu failed) -> %s\n", ds.size(), zs.size(),
                map.nan_cells, out.c_str());
    return exit_ok;
}

int cmd_dof(const GlobalArgs& g, const std::vector<double>& pitches, int nu,
            const std::string& out) {
    const auto cfg = load_cfg(g);
    auto m = start_manifest(g, "dof", cfg);
    cpi::DofOptions opt;
    opt.modality.n_u_pixels = nu;

    std::ofstream csv(out_path(g, out));
    if (!csv) throw cpi::IoError("cannot write DOF CSV");
    csv << "d,modality,z_min,z_max,dof,open_low,open_high,ratio_vs_standard,ratio_vs_pi\n";
    csv << std::setprecision(12);
    for (double d : pitches) {
        const auto rep = cpi::dof_report(cfg, d, opt);
        auto row = [&](const char* name, const cpi::ModalityDof& md) {
            csv << d << "," << name << "," << md.z_min << "," << md.z_max << "," << md.dof()
                << "," << md.open_low << "," << md.open_high << ","
                << rep.enhancement_vs_standard << "," << rep.enhancement_vs_plenoptic << "\n";
        };
        row("standard", rep.standard);
        row("standard-pi", rep.plenoptic);
        row("cpi-refocused", rep.cpi);
        std::printf("d = %7.1f um | dof: standard %6.2f mm, pi(%d) %6.2f mm, cpi %6.2f mm | "
                    "cpi/standard %.2f, cpi/pi %.2f\n",
                    d * 1e6, rep.standard.dof() * 1e3, nu, rep.plenoptic.dof() * 1e3,
                    rep.cpi.dof() * 1e3, rep.enhancement_vs_standard,
                    rep.enhancement_vs_plenoptic);
    }
    csv.close();
    finish_manifest(m, g, "dof", {out});
    return exit_ok;
}

int cmd_bound(const GlobalArgs& g) {
    const auto cfg = load_cfg(g);
    const auto mask = load_mask(g);
    auto m = start_manifest(g, "bound", cfg);
    const auto bound = cpi::geometric_bound(cfg, mask);
    const std::string out = "bound.csv";
    std::ofstream csv(out_path(g, out));
    csv << "z_min,z_max,unbounded_low,unbounded_high\n"
        << std::setprecision(12) << bound.z_min << "," << bound.z_max << ","
        << bound.unbounded_low << "," << bound.unbounded_high << "\n";
    csv.close();
    finish_manifest(m, g, "bound", {out});
    std::printf("geometric refocusing bound: z_b in [%s%.4f, %.4f%s] m\n",
                bound.unbounded_low ? "<" : "", bound.z_min, bound.z_max,
                bound.unbounded_high ? ">" : "");
    return exit_ok;
}

int cmd_verify(const std::vector<std::string>& manifests) {
    int bad = 0;
    for (const auto& path : manifests) {
        const auto m = cpi::load_manifest(path);
        const auto dir = std::filesystem::path(path).parent_path().string();
        const auto problems = cpi::verify_manifest(m, dir);
        if (problems.empty()) {
            std::printf("%s: ok (%zu outputs)\n", path.c_str(), m.outputs.size());
        } else {
            for (const auto& p : problems) std::printf("%s: %s\n", path.c_str(), p.c_str());
            ++bad;
        }
    }
    if (bad > 0) throw cpi::IoError("verification failed");
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"correlation plenoptic imaging toolkit"};
    app.set_version_flag("--version", std::string("cpi ") + cpi::version);
    app.require_subcommand(1);

    GlobalArgs g;
    for (int i = 0; i < argc; ++i) g.argv_echo.emplace_back(argv[i]);
    app.add_option("--scenario", g.scenario_path, "scenario file (key = value lines)");
    app.add_option("--out-dir", g.out_dir, "output directory");
    app.add_option("--threads", g.threads, "worker threads (0 = hardware)");
    app.add_option("--seed", g.seed, "random seed for Monte-Carlo commands");
    app.add_option("--set", g.overrides, "override a scenario key, e.g. --set z_b=113e-3");
    app.add_option("--mask", g.mask_spec, "inline mask spec, e.g. slits:n=3,a=99e-6,d=198e-6");
    app.add_option("--mask-file", g.mask_file, "file containing a mask spec line");

    std::size_t na = 0, nb = 0, frames = 1000;
    std::string out_tensor = "gamma.bin";
    std::string tensor_in, out_csv, stack_name = "frames.bin", tensor_name = "gamma_est.bin";
    std::string resume, postprocess_spec, modality_name = "cpi-refocused";
    double d_min = 28e-6, d_max = 280e-6, z_min = 46e-3, z_max = 142e-3;
    std::size_t d_steps = 7, z_steps = 25;
    int nu = 3;
    std::vector<double> pitches;
    std::vector<std::string> manifests;

    auto* sc_gamma = app.add_subcommand("gamma", "compute the analytic correlation tensor");
    sc_gamma->add_option("--na", na, "spatial-sensor pixels (0 = auto)");
    sc_gamma->add_option("--nb", nb, "angular-sensor pixels (0 = auto)");
    sc_gamma->add_option("--out", out_tensor, "tensor output file");

    auto* sc_refocus = app.add_subcommand("refocus", "refocus a stored tensor to a profile CSV");
    sc_refocus->add_option("--tensor", tensor_in, "tensor input file")->required();
    sc_refocus->add_option("--out", out_csv, "profile CSV")->default_val("refocus.csv");

    auto* sc_ghost = app.add_subcommand("ghost", "bucket-sum a stored tensor to a profile CSV");
    sc_ghost->add_option("--tensor", tensor_in, "tensor input file")->required();
    sc_ghost->add_option("--out", out_csv, "profile CSV")->default_val("ghost.csv");

    auto* sc_speckle = app.add_subcommand("speckle", "Monte-Carlo frames and estimated tensor");
    sc_speckle->add_option("--frames", frames, "number of frames");
    sc_speckle->add_option("--na", na, "spatial-sensor pixels")->default_val(128);
    sc_speckle->add_option("--nb", nb, "angular-sensor pixels")->default_val(64);
    sc_speckle->add_option("--out-stack", stack_name, "frame stack output");
    sc_speckle->add_option("--out-tensor", tensor_name, "estimated tensor output");
    sc_speckle->add_option("--resume", resume, "existing frame stack to re-estimate from");
    sc_speckle->add_option("--postprocess", postprocess_spec,
                           "Fourier cleanup, e.g. lowpass=2e5,threshold=0.01");

    auto* sc_estimate = app.add_subcommand("estimate", "estimate a tensor from a stored stack");
    sc_estimate->add_option("--stack", resume, "frame stack input")->required();
    sc_estimate->add_option("--out", tensor_name, "tensor output")->default_val("gamma_est.bin");
    sc_estimate->add_option("--postprocess", postprocess_spec, "Fourier cleanup options");

    auto* sc_vismap = app.add_subcommand("vismap", "visibility map over (d, z_b)");
    sc_vismap->add_option("--modality", modality_name,
                          "standard | standard-pi | cpi-refocused | cpi-coherent");
    sc_vismap->add_option("--d-min", d_min, "smallest pitch (m)");
    sc_vismap->add_option("--d-max", d_max, "largest pitch (m)");
    sc_vismap->add_option("--d-steps", d_steps, "pitch samples");
    sc_vismap->add_option("--z-min", z_min, "smallest z_b (m)");
    sc_vismap->add_option("--z-max", z_max, "largest z_b (m)");
    sc_vismap->add_option("--z-steps", z_steps, "z_b samples");
    sc_vismap->add_option("--nu", nu, "plenoptic N_u");
    sc_vismap->add_option("--out", out_csv, "map CSV")->default_val("vismap.csv");

    auto* sc_dof = app.add_subcommand("dof", "depth-of-field report per modality");
    sc_dof->add_option("--d", pitches, "double-slit pitch(es), meters");
    sc_dof->add_option("--nu", nu, "plenoptic N_u");
    sc_dof->add_option("--out", out_csv, "report CSV")->default_val("dof.csv");

    auto* sc_bound = app.add_subcommand("bound", "geometric perfect-refocusing interval");

    auto* sc_verify = app.add_subcommand("verify", "re-check output checksums of manifests");
    sc_verify->add_option("manifests", manifests, "manifest files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help, --version
        app.exit(e);
        return exit_config;
    }

    try {
        if (g.threads > 0) cpi::set_thread_count(g.threads);
        if (sc_gamma->parsed()) return cmd_gamma(g, na, nb, out_tensor);
        if (sc_refocus->parsed()) return cmd_profile(g, tensor_in, out_csv, true);
        if (sc_ghost->parsed()) return cmd_profile(g, tensor_in, out_csv, false);
        if (sc_speckle->parsed()) {
            return cmd_speckle(g, frames, na, nb, stack_name, tensor_name, resume,
                               postprocess_spec);
        }
        if (sc_estimate->parsed()) return cmd_estimate(g, resume, tensor_name, postprocess_spec);
        if (sc_vismap->parsed()) {
            return cmd_vismap(g, modality_name, d_min, d_max, d_steps, z_min, z_max, z_steps, nu,
                              out_csv);
        }
        if (sc_dof->parsed()) {
            if (pitches.empty()) pitches = {198e-6, 354e-6};
            return cmd_dof(g, pitches, nu, out_csv);
        }
        if (sc_bound->parsed()) return cmd_bound(g);
        if (sc_verify->parsed()) return cmd_verify(manifests);
    } catch (const cpi::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return exit_config;
    } catch (const cpi::PreconditionError& e) {
        std::fprintf(stderr, "precondition error: %s\n", e.what());
        return exit_precondition;
    } catch (const cpi::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return exit_io;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return exit_ok;
}
