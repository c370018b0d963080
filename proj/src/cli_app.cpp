#include "fsqd/cli_app.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fsqd/circuit.hpp"
#include "fsqd/dmrg.hpp"
#include "fsqd/errors.hpp"
#include "fsqd/exact.hpp"
#include "fsqd/model.hpp"
#include "fsqd/mpo.hpp"
#include "fsqd/mps.hpp"
#include "fsqd/rng.hpp"
#include "fsqd/serialize.hpp"
#include "fsqd/sparsity.hpp"
#include "fsqd/sqd.hpp"

namespace fsqd {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config plumbing

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
    if (j.is_null()) return;
    if (!j.is_object()) throw validation_error(std::string("config section '") + where + "' must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed) {
            if (it.key() == k) {
                ok = true;
                break;
            }
        }
        if (!ok) throw validation_error("config: unknown key '" + it.key() + "' in section " + where);
    }
}

template <typename T>
T get_or(const json& j, const char* key, T def) {
    if (!j.is_object() || !j.contains(key)) return def;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw validation_error(std::string("config: bad value for '") + key + "': " + e.what());
    }
}

json section(const json& root, const char* name) {
    if (!root.is_object() || !root.contains(name)) return json();
    return root.at(name);
}

struct ModelCfg {
    long n = 20;
    IsingParams p;
};

ModelCfg parse_model(const json& root) {
    const json m = section(root, "model");
    check_keys(m, {"n", "J", "hx", "hz"}, "model");
    ModelCfg c;
    c.n = get_or<long>(m, "n", 20);
    c.p.J = get_or<double>(m, "J", 1.0);
    c.p.hx = get_or<double>(m, "hx", 1.0);
    c.p.hz = get_or<double>(m, "hz", 0.05);
    if (c.n < 2) throw validation_error("config: model.n must be >= 2");
    return c;
}

json model_json(const ModelCfg& c) {
    return json{{"n", c.n}, {"J", c.p.J}, {"hx", c.p.hx}, {"hz", c.p.hz}};
}

struct DmrgCfg {
    DmrgConfig cfg;
    long reference_max_bond = 64;
};

DmrgCfg parse_dmrg(const json& root) {
    const json d = section(root, "dmrg");
    check_keys(d, {"max_bond", "n_sweeps", "convergence_tol", "lanczos_dim", "cutoff", "noise",
                   "reference_max_bond"},
               "dmrg");
    DmrgCfg c;
    c.cfg.max_bond = get_or<long>(d, "max_bond", 20);
    c.cfg.n_sweeps = get_or<long>(d, "n_sweeps", 20);
    c.cfg.convergence_tol = get_or<double>(d, "convergence_tol", 1e-12);
    c.cfg.lanczos_dim = get_or<long>(d, "lanczos_dim", 8);
    c.cfg.cutoff = get_or<double>(d, "cutoff", 1e-12);
    c.cfg.noise = get_or<double>(d, "noise", 0.0);
    c.reference_max_bond = get_or<long>(d, "reference_max_bond", 64);
    return c;
}

json dmrg_json(const DmrgCfg& c) {
    return json{{"max_bond", c.cfg.max_bond},       {"n_sweeps", c.cfg.n_sweeps},
                {"convergence_tol", c.cfg.convergence_tol}, {"lanczos_dim", c.cfg.lanczos_dim},
                {"cutoff", c.cfg.cutoff},           {"noise", c.cfg.noise},
                {"reference_max_bond", c.reference_max_bond}};
}

EncodeOptions parse_encoder(const json& root) {
    const json e = section(root, "encoder");
    check_keys(e, {"layers", "n_iters", "stall_tol", "env_bond_cap", "env_cutoff"}, "encoder");
    EncodeOptions c;
    c.layers = get_or<long>(e, "layers", 2);
    c.n_iters = get_or<long>(e, "n_iters", 2000);
    c.stall_tol = get_or<double>(e, "stall_tol", 1e-12);
    c.env_bond_cap = get_or<long>(e, "env_bond_cap", 0);
    c.env_cutoff = get_or<double>(e, "env_cutoff", 1e-14);
    return c;
}

json encoder_json(const EncodeOptions& c) {
    return json{{"layers", c.layers},
                {"n_iters", c.n_iters},
                {"stall_tol", c.stall_tol},
                {"env_bond_cap", c.env_bond_cap},
                {"env_cutoff", c.env_cutoff}};
}

ProtocolKind parse_kind(const std::string& s) {
    if (s == "sqd") return ProtocolKind::sqd;
    if (s == "fsqd-direct") return ProtocolKind::fsqd_direct;
    if (s == "fsqd-projected") return ProtocolKind::fsqd_projected;
    if (s == "fsqd-unitary-projector") return ProtocolKind::fsqd_unitary_projector;
    throw validation_error("config: unknown protocol type '" + s + "'");
}

const char* kind_name(ProtocolKind k) {
    switch (k) {
        case ProtocolKind::sqd: return "sqd";
        case ProtocolKind::fsqd_direct: return "fsqd-direct";
        case ProtocolKind::fsqd_projected: return "fsqd-projected";
        case ProtocolKind::fsqd_unitary_projector: return "fsqd-unitary-projector";
    }
    return "?";
}

struct ProtoCfg {
    ProtocolSpec spec;
    long operator_bond_cap = 50;
    int n_runs = 1;
    bool use_iterative = true;
    int extrapolation_order = 2;
    std::optional<double> e_ref;
};

ProtoCfg parse_protocol(const json& root, long n) {
    const json p = section(root, "protocol");
    check_keys(p,
               {"type", "shot_schedule", "max_states", "force_include_zero", "variance",
                "dense_eig_cap", "eig_tol", "square_bond_cap", "operator_bond_cap", "n_runs",
                "use_iterative_eigensolver", "extrapolation_order", "e_ref"},
               "protocol");
    ProtoCfg c;
    c.spec.kind = parse_kind(get_or<std::string>(p, "type", "sqd"));
    c.spec.shot_schedule = get_or<std::vector<long>>(
        p, "shot_schedule", {100, 200, 500, 1000, 2000, 5000, 10000, 20000, 50000, 100000});
    c.spec.max_states = get_or<long>(p, "max_states", n < 50 ? 5000 : 8000);
    c.spec.force_include_zero = get_or<bool>(p, "force_include_zero", true);
    const std::string vm = get_or<std::string>(p, "variance", "off");
    if (vm == "off") {
        c.spec.variance = VarianceMode::off;
    } else if (vm == "elements") {
        c.spec.variance = VarianceMode::elements;
    } else if (vm == "dense") {
        c.spec.variance = VarianceMode::dense;
    } else {
        throw validation_error("config: protocol.variance must be off|elements|dense");
    }
    c.spec.dense_eig_cap = get_or<long>(p, "dense_eig_cap", 1024);
    c.spec.eig_tol = get_or<double>(p, "eig_tol", 1e-8);
    c.spec.square_bond_cap = get_or<long>(p, "square_bond_cap", 200);
    c.operator_bond_cap = get_or<long>(p, "operator_bond_cap", 50);
    c.n_runs = get_or<int>(p, "n_runs", 1);
    c.use_iterative = get_or<bool>(p, "use_iterative_eigensolver", true);
    c.extrapolation_order = get_or<int>(p, "extrapolation_order", 2);
    if (p.is_object() && p.contains("e_ref")) c.e_ref = p.at("e_ref").get<double>();
    if (c.n_runs < 1) throw validation_error("config: protocol.n_runs must be >= 1");
    if (!c.use_iterative && c.spec.max_states > c.spec.dense_eig_cap) {
        throw validation_error(
            "config: protocol.max_states exceeds dense_eig_cap; enable use_iterative_eigensolver "
            "or lower the cap");
    }
    return c;
}

json protocol_json(const ProtoCfg& c) {
    json j{{"type", kind_name(c.spec.kind)},
           {"shot_schedule", c.spec.shot_schedule},
           {"max_states", c.spec.max_states},
           {"force_include_zero", c.spec.force_include_zero},
           {"variance", c.spec.variance == VarianceMode::off
                            ? "off"
                            : (c.spec.variance == VarianceMode::elements ? "elements" : "dense")},
           {"dense_eig_cap", c.spec.dense_eig_cap},
           {"eig_tol", c.spec.eig_tol},
           {"square_bond_cap", c.spec.square_bond_cap},
           {"operator_bond_cap", c.operator_bond_cap},
           {"n_runs", c.n_runs},
           {"use_iterative_eigensolver", c.use_iterative},
           {"extrapolation_order", c.extrapolation_order}};
    if (c.e_ref) j["e_ref"] = *c.e_ref;
    return j;
}

// ---------------------------------------------------------------------------
// Run directory helpers

struct Workspace {
    fs::path dir;
    std::string log;

    explicit Workspace(const std::string& out_dir) {
        if (out_dir.empty()) throw validation_error("--out-dir is required for this command");
        dir = fs::path(out_dir);
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw io_error("cannot create output directory: " + out_dir);
    }

    void note(const std::string& line) {
        log += line;
        log += '\n';
        std::cout << line << "\n";
    }

    std::string path(const char* name) const { return (dir / name).string(); }

    void finish(const json& snapshot) {
        write_text_file(path("config_snapshot.json"), snapshot.dump(2) + "\n");
        write_text_file(path("log.txt"), log);
    }
};

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::string text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw io_error("cannot parse config " + path + ": " + e.what());
    }
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_g17(*v) : std::string(""); }

// ---------------------------------------------------------------------------
// Shared pipeline steps

double reference_energy(const ModelCfg& mc, const DmrgCfg& dc, std::uint64_t seed, Workspace& ws) {
    if (mc.n <= kDenseMatrixCap) {
        const double e = dense_ground(mc.p, mc.n).first;
        ws.note("reference energy (exact): " + fmt_g17(e));
        return e;
    }
    DmrgConfig ref = dc.cfg;
    ref.max_bond = dc.reference_max_bond;
    ref.n_sweeps = std::max<long>(dc.cfg.n_sweeps, 24);
    const DmrgResult r = ground_state(ising_mpo(mc.p, mc.n), ref, derive_seed(seed, 999));
    ws.note("reference energy (bond " + std::to_string(ref.max_bond) + (r.converged ? ", converged" : ", sweep budget exhausted") +
            "): " + fmt_g17(r.energy));
    return r.energy;
}

DmrgResult run_dmrg(const MPO& h, const DmrgCfg& dc, std::uint64_t seed, Workspace& ws) {
    DmrgResult r = ground_state(h, dc.cfg, derive_seed(seed, 101));
    ws.note("dmrg: energy " + fmt_g17(r.energy) + " after " + std::to_string(r.sweep_log.size()) +
            " sweeps" + (r.converged ? "" : " (not converged)"));
    return r;
}

void write_sweep_csv(const Workspace& ws, const DmrgResult& r) {
    std::ostringstream os;
    os << "sweep,energy,max_discarded\n";
    for (const auto& s : r.sweep_log) {
        os << s.sweep << ',' << fmt_g17(s.energy) << ',' << fmt_g17(s.max_discarded) << '\n';
    }
    write_text_file(ws.path("sweeps.csv"), os.str());
}

void write_trajectory_csv(const Workspace& ws, const EncodeTrajectory& t, const char* name) {
    std::ostringstream os;
    os << "iteration,abs_f,infidelity_per_site\n";
    for (size_t i = 0; i < t.abs_f.size(); ++i) {
        os << (i + 1) << ',' << fmt_g17(t.abs_f[i]) << ',' << fmt_g17(t.infidelity_per_site[i]) << '\n';
    }
    write_text_file(ws.path(name), os.str());
}

// ---------------------------------------------------------------------------
// Subcommands

struct GlobalArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 1;
    int threads = 1;
};

int cmd_dmrg(const GlobalArgs& g) {
    Workspace ws(g.out_dir);
    const json cfg = load_config(g.config_path);
    check_keys(cfg, {"model", "dmrg", "encoder", "protocol", "sparsity"}, "<root>");
    const ModelCfg mc = parse_model(cfg);
    const DmrgCfg dc = parse_dmrg(cfg);

    const MPO h = ising_mpo(mc.p, mc.n);
    const DmrgResult r = run_dmrg(h, dc, g.seed, ws);
    save_mps(ws.path("state.mps"), r.state);
    write_sweep_csv(ws, r);
    ws.note("energy per site: " + fmt_g17(r.energy / static_cast<double>(mc.n)));

    json summary{{"command", "dmrg"},
                 {"n", mc.n},
                 {"energy", r.energy},
                 {"energy_per_site", r.energy / static_cast<double>(mc.n)},
                 {"converged", r.converged},
                 {"sweeps", r.sweep_log.size()},
                 {"max_bond_dim", r.state.max_bond_dim()}};
    write_text_file(ws.path("summary.json"), summary.dump(2) + "\n");
    ws.finish(json{{"seed", g.seed}, {"model", model_json(mc)}, {"dmrg", dmrg_json(dc)}});
    return 0;
}

int cmd_encode(const GlobalArgs& g, const std::string& target_path, long layers_override) {
    Workspace ws(g.out_dir);
    const json cfg = load_config(g.config_path);
    check_keys(cfg, {"model", "dmrg", "encoder", "protocol", "sparsity"}, "<root>");
    const ModelCfg mc = parse_model(cfg);
    const DmrgCfg dc = parse_dmrg(cfg);
    EncodeOptions ec = parse_encoder(cfg);
    if (layers_override > 0) ec.layers = layers_override;

    MPS target;
    if (!target_path.empty()) {
        target = load_mps(target_path);
        ws.note("target: loaded " + std::to_string(target.n) + "-site state");
    } else {
        const MPO h = ising_mpo(mc.p, mc.n);
        target = run_dmrg(h, dc, g.seed, ws).state;
    }
    normalize(target);
    const MPS input = product_state(zero_bitstring(target.n));

    BrickwallCircuit c = make_brickwall(target.n, ec.layers);
    const EncodeTrajectory traj = encode(c, target, input, ec);
    save_circuit(ws.path("filter.circuit"), c);
    write_text_file(ws.path("filter.circuit.txt"), circuit_to_text(c));
    write_trajectory_csv(ws, traj, "trajectory.csv");
    ws.note("encode: |f| " + fmt_g17(traj.final_abs_f) + " after " + std::to_string(traj.iterations) +
            " iterations" + (traj.stalled ? " (stalled)" : ""));
    ws.note("infidelity per site: " + fmt_g17(traj.infidelity_per_site.back()));

    json summary{{"command", "encode"},
                 {"n", target.n},
                 {"layers", ec.layers},
                 {"iterations", traj.iterations},
                 {"stalled", traj.stalled},
                 {"abs_f", traj.abs_f.back()},
                 {"final_abs_f", traj.final_abs_f},
                 {"infidelity_per_site", traj.infidelity_per_site.back()},
                 {"min_update_slack", traj.min_update_slack}};
    write_text_file(ws.path("summary.json"), summary.dump(2) + "\n");
    ws.finish(json{{"seed", g.seed}, {"model", model_json(mc)}, {"dmrg", dmrg_json(dc)},
                   {"encoder", encoder_json(ec)}});
    return 0;
}

int cmd_run(const GlobalArgs& g, const std::string& state_path, const std::string& protocol_override) {
    Workspace ws(g.out_dir);
    const json cfg = load_config(g.config_path);
    check_keys(cfg, {"model", "dmrg", "encoder", "protocol", "sparsity"}, "<root>");
    const ModelCfg mc = parse_model(cfg);
    const DmrgCfg dc = parse_dmrg(cfg);
    const EncodeOptions ec = parse_encoder(cfg);
    ProtoCfg pc = parse_protocol(cfg, mc.n);
    if (!protocol_override.empty()) pc.spec.kind = parse_kind(protocol_override);
    pc.spec.n_threads = g.threads;
    ws.note(std::string("protocol: ") + kind_name(pc.spec.kind));

    const MPO h = ising_mpo(mc.p, mc.n);
    MPS psi_g;
    if (!state_path.empty()) {
        psi_g = load_mps(state_path);
        if (psi_g.n != mc.n) throw validation_error("loaded state size does not match model.n");
        normalize(psi_g);
        ws.note("ground state: loaded, energy " + fmt_g17(expectation(psi_g, h)));
    } else {
        psi_g = run_dmrg(h, dc, g.seed, ws).state;
    }
    save_mps(ws.path("state.mps"), psi_g);
    const double e_ref = pc.e_ref ? *pc.e_ref : reference_energy(mc, dc, g.seed, ws);

    ProtocolContext ctx;
    ctx.e_ref = e_ref;
    ctx.params = &mc.p;

    MPO h_frame;
    MPS sampler;
    BrickwallCircuit filter;
    if (pc.spec.kind == ProtocolKind::sqd) {
        h_frame = h;
        sampler = psi_g;
    } else {
        filter = make_brickwall(mc.n, ec.layers);
        const MPS input = product_state(zero_bitstring(mc.n));
        const EncodeTrajectory traj = encode(filter, psi_g, input, ec);
        ws.note("filter encode: |f| " + fmt_g17(traj.final_abs_f) + ", infidelity/site " +
                fmt_g17(traj.infidelity_per_site.back()));
        save_circuit(ws.path("filter.circuit"), filter);
        write_trajectory_csv(ws, traj, "trajectory.csv");

        std::vector<double> discarded;
        h_frame = conjugate_by_circuit(h, filter, pc.operator_bond_cap, 1e-14, &discarded);
        double max_disc = 0.0;
        for (double d : discarded) max_disc = std::max(max_disc, d);
        ws.note("conjugated operator: max bond " + std::to_string(h_frame.max_bond_dim()) +
                ", max per-gate discarded weight " + fmt_g17(max_disc));

        MPS filtered = apply_circuit(filter, psi_g, true, 0, 1e-14);
        normalize(filtered);
        if (pc.spec.kind == ProtocolKind::fsqd_direct) {
            sampler = std::move(filtered);
        } else if (pc.spec.kind == ProtocolKind::fsqd_projected) {
            Projected pr = project_out_zero(filtered);
            ws.note("projection removed weight " + fmt_g17(pr.removed_weight));
            sampler = std::move(pr.state);
        } else {
            ProjectorEncodeResult pe = encode_projector_unitary(filtered, ec);
            ws.note("projector encode: |f| " + fmt_g17(pe.trajectory.final_abs_f) +
                    ", removed weight " + fmt_g17(pe.removed_weight));
            save_circuit(ws.path("projector.circuit"), pe.circuit);
            sampler = apply_circuit(pe.circuit, filtered, false, 0, 1e-14);
            normalize(sampler);
        }
        ctx.filter = &filter;
    }
    ctx.hamiltonian = &h_frame;
    ctx.sampler = &sampler;

    std::ostringstream csv;
    csv << "protocol,run,n_shots,n_states,energy,error,variance,anchor_energy\n";
    std::string jsonl;
    std::vector<EnergyPoint> first_run_points;
    std::vector<SampleCounts> final_counts(static_cast<size_t>(pc.n_runs));
    for (int r = 0; r < pc.n_runs; ++r) {
        const std::vector<EnergyPoint> pts =
            run_protocol(ctx, pc.spec, derive_seed(g.seed, 2000 + static_cast<std::uint64_t>(r)),
                         &final_counts[static_cast<size_t>(r)]);
        if (r == 0) first_run_points = pts;
        for (const auto& p : pts) {
            csv << kind_name(pc.spec.kind) << ',' << r << ',' << p.n_shots << ',' << p.n_states << ','
                << fmt_g17(p.energy) << ',' << fmt_g17(p.error) << ',' << fmt_opt(p.variance) << ','
                << fmt_g17(p.anchor_energy) << '\n';
            json row{{"protocol", kind_name(pc.spec.kind)}, {"run", r},
                     {"n_shots", p.n_shots},               {"n_states", p.n_states},
                     {"energy", p.energy},                 {"error", p.error},
                     {"anchor_energy", p.anchor_energy}};
            row["variance"] = p.variance ? json(*p.variance) : json();
            jsonl += row.dump();
            jsonl += '\n';
        }
        ws.note("run " + std::to_string(r) + ": final error " + fmt_g17(pts.back().error) + " at " +
                std::to_string(pts.back().n_shots) + " shots, subspace " +
                std::to_string(pts.back().n_states));
        if (pc.spec.kind != ProtocolKind::sqd &&
            pts.back().energy > pts.back().anchor_energy + 1e-9) {
            ws.note("warning: run " + std::to_string(r) +
                    " energy sits above the zero-string anchor");
        }
    }
    write_text_file(ws.path("results.csv"), csv.str());
    write_text_file(ws.path("results.jsonl"), jsonl);

    json fits;
    try {
        const DecayFit f = fit_decay_exponent(first_run_points, mc.n);
        fits["decay"] = json{{"tau", f.tau},
                             {"stderr", f.stderr_},
                             {"log_prefactor", f.log_prefactor},
                             {"points_used", f.points_used}};
        ws.note("decay fit: tau " + fmt_g17(f.tau) + " +- " + fmt_g17(f.stderr_));
    } catch (const validation_error&) {
        fits["decay"] = nullptr;
    }
    if (pc.spec.variance != VarianceMode::off) {
        std::vector<std::pair<double, double>> ve;
        for (const auto& p : first_run_points) {
            if (p.variance) ve.emplace_back(*p.variance, p.error);
        }
        try {
            const VarianceFit f = variance_extrapolate(ve, pc.extrapolation_order);
            fits["variance_extrapolation"] =
                json{{"intercept", f.intercept},          {"stderr", f.stderr_},
                     {"intercept_per_site", f.intercept / static_cast<double>(mc.n)},
                     {"order", f.order},                  {"points_used", f.points_used}};
            ws.note("variance extrapolation: error offset " + fmt_g17(f.intercept) + " +- " +
                    fmt_g17(f.stderr_));
        } catch (const validation_error&) {
            fits["variance_extrapolation"] = nullptr;
        }
    }
    if (mc.n <= kDenseStateCap && pc.n_runs >= 1) {
        // True target subspace: the most prominent states of the sampled
        // distribution itself.
        const DenseState ds = mps_to_dense(sampler);
        std::vector<long> idx(static_cast<size_t>(ds.amp.size()));
        for (long i = 0; i < ds.amp.size(); ++i) idx[static_cast<size_t>(i)] = i;
        std::sort(idx.begin(), idx.end(), [&](long a, long b) {
            const double wa = std::norm(ds.amp(a));
            const double wb = std::norm(ds.amp(b));
            return wa != wb ? wa > wb : a < b;
        });
        std::vector<Bitstring> target;
        for (long i = 0; i < std::min<long>(pc.spec.max_states, ds.amp.size()); ++i) {
            if (std::norm(ds.amp(idx[static_cast<size_t>(i)])) <= 0.0) break;
            target.push_back(index_to_bitstring(static_cast<std::uint64_t>(idx[static_cast<size_t>(i)]),
                                                mc.n));
        }
        if (!target.empty()) {
            const TargetFraction tf = target_fraction(target, final_counts);
            fits["target_fraction"] = json{{"mean", tf.mean},
                                           {"stddev", tf.stddev},
                                           {"target_states", target.size()},
                                           {"runs", pc.n_runs}};
            ws.note("target recovery fraction: " + fmt_g17(tf.mean) + " +- " + fmt_g17(tf.stddev));
        }
    }
    write_text_file(ws.path("fits.json"), fits.dump(2) + "\n");

    json summary{{"command", "run"},
                 {"protocol", kind_name(pc.spec.kind)},
                 {"n", mc.n},
                 {"e_ref", e_ref},
                 {"n_runs", pc.n_runs},
                 {"final_error", first_run_points.back().error},
                 {"final_n_states", first_run_points.back().n_states},
                 {"final_n_shots", first_run_points.back().n_shots}};
    write_text_file(ws.path("summary.json"), summary.dump(2) + "\n");
    ws.finish(json{{"seed", g.seed},
                   {"threads", g.threads},
                   {"model", model_json(mc)},
                   {"dmrg", dmrg_json(dc)},
                   {"encoder", encoder_json(ec)},
                   {"protocol", protocol_json(pc)}});
    return 0;
}

int cmd_sparsity(const GlobalArgs& g, const std::string& state_path, const std::string& weights_path,
                 const std::string& filter_path) {
    Workspace ws(g.out_dir);
    const json cfg = load_config(g.config_path);
    check_keys(cfg, {"model", "dmrg", "encoder", "protocol", "sparsity"}, "<root>");
    const ModelCfg mc = parse_model(cfg);
    const DmrgCfg dc = parse_dmrg(cfg);
    const json sp = section(cfg, "sparsity");
    check_keys(sp, {"eps", "eta", "rho_mode", "real_amplitudes"}, "sparsity");
    const std::vector<double> eps_list = get_or<std::vector<double>>(sp, "eps", {0.1});
    const double eta = get_or<double>(sp, "eta", 0.01);
    const bool real_amps = get_or<bool>(sp, "real_amplitudes", false);

    WeightDistribution wd;
    long n = mc.n;
    if (!weights_path.empty()) {
        if (!state_path.empty() || !filter_path.empty()) {
            throw validation_error("--weights cannot be combined with --state/--filter");
        }
        wd = weight_distribution(read_doubles(weights_path), n);
        ws.note("weights: " + std::to_string(wd.weights.size()) + " positive entries loaded");
    } else {
        MPS psi;
        if (!state_path.empty()) {
            psi = load_mps(state_path);
            n = psi.n;
            ws.note("state: loaded " + std::to_string(n) + "-site state");
        } else {
            const MPO h = ising_mpo(mc.p, mc.n);
            psi = run_dmrg(h, dc, g.seed, ws).state;
        }
        normalize(psi);
        if (!filter_path.empty()) {
            const BrickwallCircuit c = load_circuit(filter_path);
            psi = apply_circuit(c, psi, true, 0, 1e-14);
            normalize(psi);
            ws.note("applied filter adjoint from " + fs::path(filter_path).filename().string());
        }
        if (n > kDenseStateCap) {
            throw validation_error("sparsity analysis of a state needs n <= 24");
        }
        wd = weight_distribution_from_dense(mps_to_dense(psi));
    }

    const LorenzCurve lc = lorenz(wd);
    const double omg = gini_complement(wd);
    ws.note("gini: " + fmt_g17(1.0 - omg) + "  (1-G " + fmt_g17(omg) + ")");
    ws.note("effective prominent states log2((1-G) 2^n): " +
            fmt_g17(static_cast<double>(n) + std::log2(omg)));

    double rho = 0.0;
    std::string rho_mode = get_or<std::string>(sp, "rho_mode", n <= kDenseMatrixCap ? "exact" : "term_bound");
    {
        const MPO h = ising_mpo(mc.p, n);
        if (rho_mode == "exact") {
            rho = spectral_norm(h, NormMode::exact_small);
        } else if (rho_mode == "term_bound") {
            rho = spectral_norm(h, NormMode::term_bound);
        } else {
            throw validation_error("config: sparsity.rho_mode must be exact|term_bound");
        }
    }
    ws.note("spectral norm (" + rho_mode + "): " + fmt_g17(rho));

    std::ostringstream rep;
    rep << "sites: " << n << "\n";
    rep << "positive support: " << wd.weights.size() << "\n";
    rep << "gini: " << fmt_g17(1.0 - omg) << "\n";
    rep << "gini_complement: " << fmt_g17(omg) << "\n";
    rep << "log2_prominent_states: " << fmt_g17(static_cast<double>(n) + std::log2(omg)) << "\n";
    rep << "spectral_norm: " << fmt_g17(rho) << " (" << rho_mode << ")\n";
    rep << "eta: " << fmt_g17(eta) << "\n";
    for (double eps : eps_list) {
        const ResourceBound tb = theorem_bounds(lc, eps, rho, eta, real_amps);
        const ResourceBound cb = corollary_bounds(omg, wd.n_states, eps, rho, eta, real_amps);
        rep << "eps " << fmt_g17(eps) << ": eps_tilde " << fmt_g17(tb.eps_tilde) << " states "
            << fmt_g17(tb.n_r) << " shots " << fmt_g17(tb.n_s) << " coupon "
            << fmt_g17(coupon_collector_shots(tb.n_r)) << " gini_states " << fmt_g17(cb.n_r)
            << " gini_shots " << fmt_g17(cb.n_s) << (tb.degenerate ? " (degenerate)" : "") << "\n";
        ws.note("eps " + fmt_g17(eps) + ": sufficient states " + fmt_g17(tb.n_r) + ", shots " +
                fmt_g17(tb.n_s));
    }
    write_text_file(ws.path("report.txt"), rep.str());

    std::ostringstream lz;
    lz << "x,L\n0,0\n";
    const size_t stride = std::max<size_t>(1, lc.w.size() / 4096);
    const double zero_states = wd.zero_states;
    for (size_t j = 0; j < lc.w.size(); j += stride) {
        const double x = (zero_states + static_cast<double>(j + 1)) / wd.n_states;
        lz << fmt_g17(x) << ',' << fmt_g17(lc.cum[j]) << '\n';
    }
    if ((lc.w.size() - 1) % stride != 0) {
        lz << fmt_g17(1.0) << ',' << fmt_g17(lc.cum.back()) << '\n';
    }
    write_text_file(ws.path("lorenz.csv"), lz.str());

    json summary{{"command", "sparsity"},
                 {"n", n},
                 {"positive_support", wd.weights.size()},
                 {"gini", 1.0 - omg},
                 {"gini_complement", omg},
                 {"spectral_norm", rho}};
    write_text_file(ws.path("summary.json"), summary.dump(2) + "\n");
    ws.finish(json{{"seed", g.seed},
                   {"model", model_json(mc)},
                   {"sparsity", json{{"eps", eps_list}, {"eta", eta}, {"rho_mode", rho_mode},
                                     {"real_amplitudes", real_amps}}}});
    return 0;
}

int cmd_oracle_check(const GlobalArgs& g, long n, int trials) {
    if (n < 2 || n > 10) throw validation_error("oracle-check supports 2 <= n <= 10");
    if (trials < 1) throw validation_error("oracle-check needs at least one trial");
    IsingParams p;
    const MPO h = ising_mpo(p, n);
    int failures = 0;
    auto report = [&](const char* name, double dev, double tol) {
        const bool ok = dev <= tol;
        if (!ok) ++failures;
        std::cout << (ok ? "ok" : "FAIL") << ": " << name << " (deviation " << fmt_g17(dev)
                  << ", tolerance " << fmt_g17(tol) << ")\n";
    };

    const RowMat hd = dense_hamiltonian(p, n);
    report("operator matrix matches the explicit Hamiltonian", (mpo_to_dense(h) - hd).cwiseAbs().maxCoeff(),
           1e-12);

    Xoshiro256pp rng(derive_seed(g.seed, 7));
    double dev_expect = 0.0, dev_elements = 0.0, dev_circuit = 0.0, dev_conjugate = 0.0;
    for (int t = 0; t < trials; ++t) {
        MPS psi = random_mps(n, 8, rng);
        normalize(psi);
        const DenseState dv = mps_to_dense(psi);
        const double e_mps = expectation(psi, h);
        const double e_dense = std::real(dv.amp.dot(apply_dense_hamiltonian(p, n, dv.amp)));
        dev_expect = std::max(dev_expect,
                              std::abs(e_mps - e_dense) / std::max(1.0, std::abs(e_dense)));

        for (int k = 0; k < 10; ++k) {
            const auto i = static_cast<long>(rng.below(1ULL << n));
            const auto j = static_cast<long>(rng.below(1ULL << n));
            const cplx lhs = product_matrix_element(h, index_to_bitstring(static_cast<std::uint64_t>(i), n),
                                                    index_to_bitstring(static_cast<std::uint64_t>(j), n));
            dev_elements = std::max(dev_elements, std::abs(lhs - hd(i, j)));
        }

        BrickwallCircuit c = make_brickwall(n, 2);
        for (auto& gate : c.gates) gate.u = random_unitary(4, rng);
        const MPS applied = apply_circuit(c, psi, false, 0, 1e-14);
        const DenseState lhs = mps_to_dense(applied);
        const DenseState rhs = dense_apply_circuit(c, dv, false);
        dev_circuit = std::max(dev_circuit, (lhs.amp - rhs.amp).cwiseAbs().maxCoeff());

        const MPO hp = conjugate_by_circuit(h, c, 0, 0.0);
        Eigen::VectorXcd v(1L << n);
        for (long k = 0; k < v.size(); ++k) v(k) = cplx(rng.normal(), rng.normal());
        v /= v.norm();
        const DenseState rot = dense_apply_circuit(c, DenseState{n, v}, false);
        const double q_dense = std::real(rot.amp.dot(apply_dense_hamiltonian(p, n, rot.amp)));
        const double q_mpo = std::real(v.dot(apply_mpo_dense(hp, v)));
        dev_conjugate = std::max(dev_conjugate, std::abs(q_dense - q_mpo) / std::max(1.0, std::abs(q_dense)));
    }
    report("state expectation matches the dense oracle", dev_expect, 1e-10);
    report("configuration matrix elements match the dense oracle", dev_elements, 1e-12);
    report("circuit application matches the dense oracle", dev_circuit, 1e-9);
    report("conjugated operator matches the dense oracle", dev_conjugate, 1e-9);

    std::cout << (failures == 0 ? "all oracle checks passed" : "oracle checks FAILED") << "\n";
    return failures == 0 ? 0 : 3;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    try {
        CLI::App app{"filtered sample-based subspace diagnostics"};
        app.require_subcommand(1);
        GlobalArgs g;
        app.add_option("--config", g.config_path, "JSON configuration file");
        app.add_option("--seed", g.seed, "base random seed");
        app.add_option("--threads", g.threads, "worker threads for matrix assembly")
            ->check(CLI::PositiveNumber);
        app.add_option("--out-dir", g.out_dir, "output directory for run artifacts");
        app.fallthrough();

        auto* dmrg_cmd = app.add_subcommand("dmrg", "variational ground-state search");

        auto* encode_cmd = app.add_subcommand("encode", "fit a brick-wall circuit to a state");
        std::string target_path;
        long layers_override = 0;
        encode_cmd->add_option("--target", target_path, "MPS file to encode (default: run dmrg)");
        encode_cmd->add_option("--layers", layers_override, "override encoder.layers");

        auto* run_cmd = app.add_subcommand("run", "sample, select and diagonalize");
        std::string state_path, protocol_override;
        run_cmd->add_option("--state", state_path, "ground-state MPS file (default: run dmrg)");
        run_cmd->add_option("--protocol", protocol_override,
                            "sqd | fsqd-direct | fsqd-projected | fsqd-unitary-projector");

        auto* sparsity_cmd = app.add_subcommand("sparsity", "weight concentration analysis");
        std::string sp_state, sp_weights, sp_filter;
        sparsity_cmd->add_option("--state", sp_state, "MPS file to analyze");
        sparsity_cmd->add_option("--weights", sp_weights, "raw weight file (doubles)");
        sparsity_cmd->add_option("--filter", sp_filter, "circuit whose adjoint is applied first");

        auto* oracle_cmd = app.add_subcommand("oracle-check", "compare against dense references");
        long oc_n = 8;
        int oc_trials = 3;
        oracle_cmd->add_option("--n", oc_n, "system size (2..10)");
        oracle_cmd->add_option("--trials", oc_trials, "number of random trials");

        try {
            app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            const int code = app.exit(e);
            return code == 0 ? 0 : 2;
        }

        if (dmrg_cmd->parsed()) return cmd_dmrg(g);
        if (encode_cmd->parsed()) return cmd_encode(g, target_path, layers_override);
        if (run_cmd->parsed()) return cmd_run(g, state_path, protocol_override);
        if (sparsity_cmd->parsed()) return cmd_sparsity(g, sp_state, sp_weights, sp_filter);
        if (oracle_cmd->parsed()) return cmd_oracle_check(g, oc_n, oc_trials);
        return 2;
    } catch (const validation_error& e) {
        std::cerr << "error (invalid input): " << e.what() << "\n";
        return 2;
    } catch (const numerical_error& e) {
        std::cerr << "error (numerical): " << e.what() << "\n";
        return 3;
    } catch (const io_error& e) {
        std::cerr << "error (io): " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace fsqd
