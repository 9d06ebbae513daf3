#include "homloop_cli/commands.hpp"

#include "homloop/assumptions.hpp"
#include "homloop/dichotomy.hpp"
#include "homloop/errors.hpp"
#include "homloop/loopmap.hpp"
#include "homloop/melnikov.hpp"
#include "homloop/scaling.hpp"
#include "homloop_cli/output.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>

namespace homloop::cli {

namespace {

constexpr const char* kVersion = "1.0.0";

ojson point(const Point2& p) { return ojson::array({p.x1, p.x2}); }

ojson rates_json(const RateConstants& r) {
    return ojson{{"sigma_fwd", r.sigma_fwd},         {"sigma_fwd_plus", r.sigma_fwd_plus},
                 {"sigma_fwd_minus", r.sigma_fwd_minus}, {"sigma_bwd", r.sigma_bwd},
                 {"sigma_bwd_plus", r.sigma_bwd_plus}, {"sigma_bwd_minus", r.sigma_bwd_minus},
                 {"Sigma_fwd", r.Sigma_fwd},         {"Sigma_fwd_plus", r.Sigma_fwd_plus},
                 {"Sigma_bwd", r.Sigma_bwd},         {"Sigma_bwd_minus", r.Sigma_bwd_minus},
                 {"sigma_lo", r.sigma_lo},           {"sigma_hi", r.sigma_hi},
                 {"lambda_lo", r.lambda_lo},         {"lambda_hi", r.lambda_hi},
                 {"mu0", r.mu0},                     {"sigma_fb", r.sigma_fb},
                 {"c_mu", r.c_mu}};
}

/// Everything derived from the configuration that every subcommand shares.
struct Session {
    const ExperimentConfig& cfg;
    std::string command;
    PiecewiseSystem sys;
    Homoclinic gamma;
    RateConstants rates;
    ParameterCascade cascade;
    std::unique_ptr<LeafAnchors> anchors;

    Session(const ExperimentConfig& c, std::string cmd, std::ostream& log, bool verbose)
        : cfg(c), command(std::move(cmd)), sys(c.build_system()), gamma(homoclinic_orbit(sys)),
          rates(rate_constants(gamma.spectrum())) {
        CascadeOptions co;
        co.beta_floor = c.session.beta_floor;
        co.log_varpi_cap = c.session.log_varpi_cap;
        co.beta = c.session.beta;
        const ParameterCascade first = make_cascade(rates, sys.epsilon(), c.session.mu, co);
        const VarpiPolicy vp = varpi_policy(sys, gamma, dichotomy_data(sys), first.mu2, co.log_varpi_cap);
        co.log_varpi_required = vp.required;
        cascade = make_cascade(rates, sys.epsilon(), c.session.mu, co);
        if (verbose) {
            log << "[homloop] system " << sys.name() << ", epsilon " << format_double(sys.epsilon()) << ", beta "
                << format_double(cascade.beta) << ", delta " << format_double(cascade.delta) << ", |ln varpi| "
                << format_double(cascade.log_varpi) << "\n";
        }
    }

    const LeafAnchors& leaf_anchors() {
        if (!anchors) anchors = std::make_unique<LeafAnchors>(sys, gamma, cascade.log_varpi, anchor_options());
        return *anchors;
    }

    [[nodiscard]] AnchorOptions anchor_options() const {
        AnchorOptions a;
        a.tol = cfg.tolerances;
        return a;
    }

    [[nodiscard]] ojson provenance() const {
        const auto& t = cfg.tolerances;
        const auto& k = cascade;
        return ojson{
            {"tool", "homloop"},
            {"version", kVersion},
            {"subcommand", command},
            {"config", std::filesystem::path(cfg.source).filename().string()},
            {"system", sys.name()},
            {"perturbation", sys.perturbation().label},
            {"epsilon", sys.epsilon()},
            {"seed", cfg.session.seed},
            {"grid", {{"d", cfg.grid.d}, {"tau", cfg.grid.tau}}},
            {"tolerances",
             {{"rtol", t.rtol},
              {"atol", t.atol},
              {"crossing", t.crossing},
              {"transversality_floor", t.transversality_floor},
              {"h_max", t.h_max}}},
            {"cascade",
             {{"beta", k.beta},
              {"varpi", k.varpi},
              {"log_varpi", k.log_varpi},
              {"log_varpi_required", k.log_varpi_required},
              {"varpi_capped", k.varpi_capped},
              {"delta", k.delta},
              {"mu", k.mu},
              {"mu0", k.mu0},
              {"c_mu", k.c_mu},
              {"mu1", k.mu1},
              {"mu2", k.mu2},
              {"sigma_fb", k.sigma_fb}}},
        };
    }
};

std::string out_path(const RunOptions& opt, const ExperimentConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(opt.out_dir);
    return (std::filesystem::path(opt.out_dir) / (cfg.output.prefix + name)).string();
}

void emit(const RunOptions& opt, const ExperimentConfig& cfg, const std::string& name, const std::string& text,
          std::ostream& log) {
    const std::string path = out_path(opt, cfg, name);
    write_file(path, text);
    if (opt.verbose) log << "[homloop] wrote " << path << "\n";
}

// ---------------------------------------------------------------- classify

int cmd_classify(Session& s, const RunOptions& opt, std::ostream& log) {
    const SaddleSpectrum& spec = s.gamma.spectrum();
    const AssumptionReport a = classify_scenario(s.sys, spec, s.gamma);
    ojson j;
    j["provenance"] = s.provenance();
    j["assumptions"] = {{"f0_ok", a.f0_ok},
                        {"f1_ok", a.f1_ok},
                        {"f2_ok", a.f2_ok},
                        {"g_ok", a.g_ok},
                        {"k_transversality", a.k_transversality},
                        {"scenario", to_string(a.scenario)},
                        {"sliding_near_origin", a.sliding_near_origin},
                        {"probe_distance", a.probe_distance},
                        {"v_u_plus_inside", a.v_u_plus_inside},
                        {"v_s_minus_inside", a.v_s_minus_inside}};
    j["spectrum"] = {{"lambda_s_plus", spec.lambda_s_plus}, {"lambda_u_plus", spec.lambda_u_plus},
                     {"lambda_s_minus", spec.lambda_s_minus}, {"lambda_u_minus", spec.lambda_u_minus},
                     {"v_s_plus", point(spec.v_s_plus)},     {"v_u_plus", point(spec.v_u_plus)},
                     {"v_s_minus", point(spec.v_s_minus)},   {"v_u_minus", point(spec.v_u_minus)},
                     {"eigen_residual", spec.eigen_residual}};
    j["rates"] = rates_json(s.rates);
    j["homoclinic"] = {{"gamma0", point(s.gamma.gamma0())},
                       {"analytic", s.gamma.analytic()},
                       {"diameter", s.gamma.diameter()},
                       {"shooting_mismatch", s.gamma.shooting_mismatch()}};
    emit(opt, s.cfg, "classify.json", dump_json(j), log);
    return 0;
}

// ---------------------------------------------------------------- melnikov

int cmd_melnikov(Session& s, const RunOptions& opt, std::ostream& log) {
    const Melnikov mel(s.sys, s.gamma);
    const MelnikovProfile prof = mel.profile(default_alpha_grid(s.sys, s.cfg.grid.alpha_points));
    CsvTable csv({"alpha", "M"});
    csv.set_provenance(s.provenance());
    for (std::size_t k = 0; k < prof.alphas.size(); ++k) csv.add_row({prof.alphas[k], prof.values[k]});
    emit(opt, s.cfg, "melnikov_profile.csv", csv.str(), log);

    ojson j;
    j["provenance"] = s.provenance();
    j["period"] = prof.period ? ojson(*prof.period) : ojson(nullptr);
    j["horizon_minus"] = prof.horizon_minus;
    j["horizon_plus"] = prof.horizon_plus;
    auto zeros = [](const std::vector<MelnikovZero>& zs) {
        ojson a = ojson::array();
        for (const auto& z : zs) a.push_back({{"alpha", z.alpha}, {"slope", z.slope}});
        return a;
    };
    j["zeros"] = zeros(prof.zeros);
    j["degenerate_zeros"] = zeros(prof.degenerate);
    int status = 0;
    if (!s.cfg.grid.epsilon.empty()) {
        const SplittingReport r = splitting_check(s.sys, s.gamma, s.cfg.grid.tau, s.cfg.grid.epsilon,
                                                  s.cascade.log_varpi, s.anchor_options());
        ojson samples = ojson::array();
        for (const auto& x : r.samples) {
            samples.push_back({{"tau", x.tau},
                               {"epsilon", x.epsilon},
                               {"splitting", x.splitting},
                               {"melnikov", x.melnikov},
                               {"ratio", x.ratio},
                               {"near_zero", x.near_zero},
                               {"sign_ok", x.sign_ok}});
        }
        j["splitting"] = {{"samples", samples},
                          {"predicted_constant", r.predicted_constant},
                          {"ratio_min", r.ratio_min},
                          {"ratio_max", r.ratio_max},
                          {"relative_spread", r.relative_spread},
                          {"signs_ok", r.signs_ok},
                          {"ratio_ok", r.ratio_ok},
                          {"pass", r.pass()}};
        if (!r.pass()) status = 2;
    }
    emit(opt, s.cfg, "melnikov_zeros.json", dump_json(j), log);
    return status;
}

// ------------------------------------------------------------------ leaves

int cmd_leaves(Session& s, const RunOptions& opt, std::ostream& log) {
    const LeafAnchors& a = s.leaf_anchors();
    const LoopMap map(a, s.cascade.delta);
    CsvTable csv({"tau", "P_s_x", "P_s_y", "P_u_x", "P_u_y", "pi_s_x", "pi_s_y", "pi_u_x", "pi_u_y", "splitting",
                  "P_s_extrapolation_error", "P_u_extrapolation_error"});
    csv.set_provenance(s.provenance());
    for (double tau : s.cfg.grid.tau) {
        const AnchorPoint ps = a.anchor(Leaf::Stable, AnchorSection::L0, tau);
        const AnchorPoint pu = a.anchor(Leaf::Unstable, AnchorSection::L0, tau);
        const Point2 qs = a.pi_s(tau), qu = a.pi_u(tau);
        csv.add_row({tau, ps.point.x1, ps.point.x2, pu.point.x1, pu.point.x2, qs.x1, qs.x2, qu.x1, qu.x2,
                     map.chart().directed_distance(pu.point, ps.point), ps.extrapolation_error,
                     pu.extrapolation_error});
    }
    emit(opt, s.cfg, "anchors.csv", csv.str(), log);
    return 0;
}

// ---------------------------------------------------------------- barriers

ojson curve_json(const BarrierCurve& c) {
    ojson j{{"name", c.name}, {"field", c.field == 1 ? "f_a" : "f_b"}, {"points", c.points.size()},
            {"P", point(c.P)}, {"Q", point(c.Q)}};
    j["R"] = c.R ? point(*c.R) : ojson(nullptr);
    j["O"] = c.O ? point(*c.O) : ojson(nullptr);
    return j;
}

int cmd_barriers(Session& s, const RunOptions& opt, std::ostream& log) {
    const BarrierSet b = build_barriers(s.sys, s.cascade.beta, s.cfg.session.mu, s.leaf_anchors());
    CsvTable csv({"curve", "index", "x1", "x2"});
    csv.set_provenance(s.provenance());
    for (const BarrierCurve* c : {&b.z_fwd_in, &b.z_fwd_out, &b.z_bwd_in, &b.z_bwd_out}) {
        for (std::size_t k = 0; k < c->points.size(); ++k)
            csv.add_row({c->name, static_cast<std::int64_t>(k), c->points[k].x1, c->points[k].x2});
    }
    emit(opt, s.cfg, "barriers.csv", csv.str(), log);

    ojson j;
    j["provenance"] = s.provenance();
    j["beta"] = b.beta;
    j["mu"] = b.mu;
    j["epsilon"] = b.epsilon;
    j["kappa"] = b.kappa;
    j["orientation"] = b.orientation;
    j["gamma0"] = point(b.gamma0);
    j["w"] = point(b.w);
    j["D_bar"] = {{"fwd_in", b.D_bar_fwd_in}, {"fwd_out", b.D_bar_fwd_out}, {"bwd_in", b.D_bar_bwd_in},
                  {"bwd_out", b.D_bar_bwd_out}};
    j["curves"] = ojson::array({curve_json(b.z_fwd_in), curve_json(b.z_fwd_out), curve_json(b.z_bwd_in),
                                curve_json(b.z_bwd_out)});
    ojson bands = ojson::array();
    for (const auto& c : b.bands)
        bands.push_back({{"name", c.name}, {"value", c.value}, {"lo", c.lo}, {"hi", c.hi}, {"ok", c.ok()}});
    j["bands"] = bands;
    ojson flow = ojson::array();
    for (const auto& f : b.flow)
        flow.push_back({{"curve", f.curve}, {"samples", f.samples}, {"violations", f.violations}, {"worst", f.worst}});
    j["flow"] = flow;
    j["geometry"] = {{"containment_radius", b.containment_radius},
                     {"max_distance_fwd", b.max_distance_fwd},
                     {"max_distance_bwd", b.max_distance_bwd},
                     {"min_distance_to_gamma", b.min_distance_to_gamma},
                     {"simple", b.simple},
                     {"disjoint", b.disjoint}};
    j["bands_ok"] = b.bands_ok();
    j["flow_ok"] = b.flow_ok();
    j["geometry_ok"] = b.geometry_ok();
    j["pass"] = b.pass();
    emit(opt, s.cfg, "barriers.json", dump_json(j), log);
    return b.pass() ? 0 : 2;
}

// -------------------------------------------------------------------- loop

std::vector<LoopResult> run_batch(Session& s, const RunOptions& opt, bool keep_failures,
                                  std::shared_ptr<const BarrierSet> barriers = nullptr) {
    LoopOptions lo;
    lo.tol = s.cfg.tolerances;
    const LoopMap map(s.leaf_anchors(), s.cascade.delta, std::move(barriers), lo);
    return loop_batch(map, s.cfg.grid.d, s.cfg.grid.tau, s.cfg.grid.forward, s.cfg.grid.backward, opt.threads,
                      keep_failures);
}

int cmd_loop(Session& s, const RunOptions& opt, std::ostream& log) {
    std::shared_ptr<const BarrierSet> barriers;
    if (s.cfg.session.containment) {
        barriers = std::make_shared<const BarrierSet>(
            build_barriers(s.sys, s.cascade.beta, s.cfg.session.mu, s.leaf_anchors()));
    }
    const auto batch = run_batch(s, opt, true, barriers);
    CsvTable csv({"d", "tau", "direction", "T_half", "T_one", "D_half", "D_one", "T1", "T2", "T3", "T4", "D1", "D2",
                  "D3", "D4", "sup_dev_first_half", "sup_dev_second_half", "status"});
    csv.set_provenance(s.provenance());
    bool all_ok = true;
    for (const auto& r : batch) {
        all_ok = all_ok && r.status == "ok";
        csv.add_row({r.d, r.tau, to_string(r.direction), r.T_half, r.T_one, r.D_half, r.D_one, r.segment_times[0],
                     r.segment_times[1], r.segment_times[2], r.segment_times[3], r.segment_disps[0],
                     r.segment_disps[1], r.segment_disps[2], r.segment_disps[3], r.sup_dev_first_half,
                     r.sup_dev_second_half, r.status});
    }
    emit(opt, s.cfg, "loops.csv", csv.str(), log);
    return all_ok ? 0 : 1;
}

// ----------------------------------------------------------------- scaling

int cmd_scaling(Session& s, const RunOptions& opt, std::ostream& log) {
    const auto batch = run_batch(s, opt, false);
    const ScalingReport rep = fit_exponents(batch, s.rates, s.cfg.session.mu);
    const DeviationReport km = deviation_suite(batch, s.rates, s.cfg.session.mu);

    ojson j;
    j["provenance"] = s.provenance();
    j["d_grid"] = rep.d_grid;
    j["tau_grid"] = rep.tau_grid;
    j["theory"] = rates_json(rep.theory);
    j["mu_used"] = rep.mu_used;
    for (const auto& f : rep.fits) {
        j["fitted_" + f.name] = {{"slope", f.fit.slope},         {"half_width", f.fit.half_width},
                                 {"std_error", f.fit.std_error}, {"intercept", f.fit.intercept},
                                 {"n", f.fit.n},                 {"theory", f.theory},
                                 {"mu_effective", f.mu_effective}, {"pass", f.pass}};
    }
    ojson spread = ojson::object();
    for (const auto& [name, v] : rep.tau_spread) spread[name] = v;
    j["tau_spread"] = spread;
    ojson entries = ojson::array();
    for (const auto& e : km.entries) {
        entries.push_back({{"d", e.d},
                           {"tau", e.tau},
                           {"direction", to_string(e.direction)},
                           {"dev_first", e.dev_first},
                           {"dev_second", e.dev_second},
                           {"bound", e.bound},
                           {"ok", e.ok()}});
    }
    j["deviations"] = {{"entries", entries}, {"violations", km.violations}, {"worst_margin", km.worst_margin},
                      {"pass", km.pass()}};
    j["pass"] = rep.pass() && km.pass();
    emit(opt, s.cfg, "scaling.json", dump_json(j), log);
    return rep.pass() && km.pass() ? 0 : 2;
}

// --------------------------------------------------------------- stability

int cmd_stability(Session& s, const RunOptions& opt, std::ostream& log) {
    const StabilityProbe p = dulac_probe(s.sys, s.gamma, s.cfg.session.n_loops, s.cfg.session.d0, s.cascade.log_varpi);
    ojson j;
    j["provenance"] = s.provenance();
    j["div_at_origin_plus"] = p.div_at_origin_plus;
    j["div_at_origin_minus"] = p.div_at_origin_minus;
    j["div_integral_along_gamma"] = p.div_integral_along_gamma;
    j["prediction"] = to_string(p.prediction);
    j["d0"] = p.d0;
    j["displacements"] = p.displacements;
    j["loops_completed"] = p.loops_completed;
    j["escaped"] = p.escaped;
    j["empirical_contraction"] = p.empirical_contraction;
    j["consistent"] = p.consistent;
    j["note"] = p.note;
    emit(opt, s.cfg, "stability.json", dump_json(j), log);
    return p.consistent ? 0 : 2;
}

using Handler = std::function<int(Session&, const RunOptions&, std::ostream&)>;

const std::map<std::string, Handler>& handlers() {
    static const std::map<std::string, Handler> h = {
        {"classify", cmd_classify}, {"melnikov", cmd_melnikov}, {"leaves", cmd_leaves},     {"barriers", cmd_barriers},
        {"loop", cmd_loop},         {"scaling", cmd_scaling},   {"stability", cmd_stability},
    };
    return h;
}

}  // namespace

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"classify", "melnikov", "leaves", "barriers",
                                                "loop",     "scaling",  "stability"};
    return names;
}

int run_command(const std::string& name, const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log) {
    const auto it = handlers().find(name);
    if (it == handlers().end()) throw Error(ErrorCode::DegenerateInput, "unknown subcommand '" + name + "'");
    const auto t0 = std::chrono::steady_clock::now();
    Session s(cfg, name, log, opt.verbose);
    const int status = it->second(s, opt, log);
    if (opt.verbose) {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        log << "[homloop] " << name << " finished in " << secs << " s with status " << status << "\n";
    }
    return status;
}

}  // namespace homloop::cli
