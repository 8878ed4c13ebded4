#include "lagmc/report.hpp"

#include "lagmc/estimate.hpp"
#include "lagmc/forms.hpp"
#include "lagmc/manufactured.hpp"
#include "lagmc/pipeline.hpp"
#include "lagmc/solver.hpp"
#include "lagmc/suites.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#ifndef LAGMC_VERSION
#define LAGMC_VERSION "unknown"
#endif

namespace lagmc {

namespace fs = std::filesystem;

std::string version_string() { return LAGMC_VERSION; }

namespace {

constexpr double kIdentityTol = 1e-9;
constexpr double kExactTol = 1e-12;
constexpr double kOrderBand = 0.3;

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string num(double v) { return format_number(v); }

class Writer {
public:
    explicit Writer(ReportBundle& b) : bundle_(b) { fs::create_directories(b.directory); }

    void table(const std::string& file, const std::string& module, const std::string& content) {
        write(file, content);
        bundle_.tables.push_back({file, module, to_string(bundle_.command)});
    }

    void field(const std::string& file, const GridField& f, bool binary) {
        const std::string path = partial(file);
        write_field_file(path, f, binary);
        written_.push_back(file);
        bundle_.fields.push_back(file);
    }

    void write(const std::string& file, const std::string& content) {
        std::ofstream os(partial(file), std::ios::binary);
        os << content;
        if (!os) throw Error("cannot write " + partial(file));
        written_.push_back(file);
    }

    void commit() {
        for (const auto& f : written_) fs::rename(partial(f), fs::path(bundle_.directory) / f);
    }

private:
    std::string partial(const std::string& file) const { return (fs::path(bundle_.directory) / (file + ".partial")).string(); }
    ReportBundle& bundle_;
    std::vector<std::string> written_;
};

struct Context {
    const RunConfig& cfg;
    ReportBundle& bundle;
    Writer& out;
    std::ostringstream summary;

    int n() const { return *cfg.n; }
    std::uint64_t seed() const { return bundle.seed; }

    void check(bool ok, const std::string& what) {
        summary << (ok ? "PASS " : "FAIL ") << what << "\n";
        if (!ok) bundle.failures.push_back(what);
    }
    void finding(const std::string& what) {
        summary << "NOTE " << what << "\n";
        bundle.findings.push_back(what);
    }
};

SolveOptions solve_options(const RunConfig& c) {
    SolveOptions o;
    if (c.tol) o.tol = *c.tol;
    if (c.max_iter) o.max_iter = *c.max_iter;
    if (c.mode && *c.mode == "convex") o.mode = SolveMode::ConvexInitialized;
    if (c.linear) o.linear = *c.linear == "direct" ? LinearSolver::Direct : *c.linear == "iterative" ? LinearSolver::Iterative : LinearSolver::Auto;
    return o;
}

CatalogParams catalog_params(const RunConfig& c) {
    CatalogParams p;
    if (c.theta) p.theta = *c.theta;
    return p;
}

Catalog catalog_of(const RunConfig& c) { return *catalog_from_string(*c.catalog); }

Grid grid_of(const RunConfig& c, int points) { return Grid::cube(*c.n, c.lo.value_or(-1.0), c.hi.value_or(1.0), points); }

struct Setup {
    Grid grid;
    PhaseSpec phi;
    GridField boundary;
    std::optional<ManufacturedProblem> mp;
};

Setup setup(const RunConfig& c, int points) {
    const Grid g = grid_of(c, points);
    const int n = *c.n;
    switch (*c.kind) {
        case PhaseKind::Catalog: {
            ManufacturedProblem mp = manufactured_problem(catalog_of(c), g, catalog_params(c));
            PhaseSpec phi = mp.phi;
            GridField b = mp.u_exact;
            return {g, std::move(phi), std::move(b), std::move(mp)};
        }
        case PhaseKind::Constant: {
            PhaseSpec phi = PhaseSpec::constant(n, *c.value);
            return {g, phi, mean_phase_boundary(g, phi), std::nullopt};
        }
        case PhaseKind::Expression: {
            const Expression e = Expression::parse(*c.expression, n);
            PhaseSpec phi = PhaseSpec::make(n, [e](std::span<const double> x) { return e(x); }, *c.lipschitz, g);
            return {g, phi, mean_phase_boundary(g, phi), std::nullopt};
        }
        case PhaseKind::Kink: {
            PhaseSpec phi = kink_phase(n, *c.theta, *c.slope, g);
            return {g, phi, mean_phase_boundary(g, phi), std::nullopt};
        }
    }
    throw InvalidArgument("unknown phase kind");
}

void run_solve(Context& ctx) {
    const RunConfig& c = ctx.cfg;
    Setup s = setup(c, *c.points);
    const SolveOptions opts = solve_options(c);
    SolveResult r = [&] {
        try {
            return newton_solve(s.grid, s.phi, s.boundary, opts);
        } catch (const SolveFailure& e) {
            std::ostringstream h;
            h << "iteration,residual_inf\n";
            for (std::size_t i = 0; i < e.history().size(); ++i) h << i << ',' << num(e.history()[i]) << '\n';
            ctx.out.table("solve_history.csv", "pde_solver", h.str());
            ctx.out.field("best.lmf", e.best(), false);
            throw;
        }
    }();
    std::ostringstream h;
    h << "iteration,residual_inf\n";
    for (std::size_t i = 0; i < r.report.residual_history.size(); ++i) h << i << ',' << num(r.report.residual_history[i]) << '\n';
    ctx.out.table("solve_history.csv", "pde_solver", h.str());
    std::ostringstream t;
    t << "n,points,iterations,final_residual_inf,damping_events,hessian_sup,osc,error_inf\n";
    const std::string err = s.mp ? num(max_abs_difference(r.u, s.mp->u_exact)) : "";
    t << ctx.n() << ',' << *c.points << ',' << r.report.iterations << ',' << num(r.report.final_residual_inf) << ','
      << r.report.damping_events << ',' << num(r.report.hessian_sup) << ',' << num(r.report.osc) << ',' << err << '\n';
    ctx.out.table("solve.csv", "pde_solver", t.str());
    const bool binary = c.format && *c.format == "binary";
    ctx.out.field(binary ? "solution.lmb" : "solution.lmf", r.u, binary);
    ctx.check(r.report.final_residual_inf <= opts.tol, "Newton residual " + num(r.report.final_residual_inf) + " <= tol");
    if (!r.report.wall_notes.empty()) ctx.finding(r.report.wall_notes);
}

void run_verify_forms(Context& ctx) {
    const RunConfig& c = ctx.cfg;
    const auto samples = static_cast<std::size_t>(c.samples.value_or(100000));
    const double theta = c.forms_theta.value_or(0.3);
    std::ostringstream r1;
    r1 << "n,coeff,samples,in_band,disagreements,psd\n";
    for (double coeff : {1.25, 1.125}) {
        const RankOneSuite s = rank_one_suite(ctx.n(), coeff, samples, ctx.seed());
        r1 << s.n << ',' << num(s.coeff) << ',' << s.samples << ',' << s.in_band << ',' << s.disagreements << ',' << s.psd_count << '\n';
        ctx.check(s.disagreements == 0, "rank-one criterion matches eigen oracle, coeff " + num(coeff));
    }
    ctx.out.table("rank_one.csv", "jacobi_forms", r1.str());
    std::ostringstream t;
    t << "n,family,A,theta,samples,accepted,proposed,worst_margin,oracle_disagreements,ok\n";
    for (const FormsSuiteRow& row : forms_suite(ctx.n(), samples, ctx.seed(), theta)) {
        const CertifyResult& r = row.result;
        t << row.n << ',' << to_string(row.family) << ',' << num(row.A) << ',' << num(row.theta) << ',' << samples << ','
          << r.accepted << ',' << r.proposed << ',' << num(r.worst_margin) << ',' << r.oracle_disagreements << ','
          << (r.ok ? 1 : 0) << '\n';
        ctx.check(r.ok && r.worst_margin >= -1e-9, std::string(to_string(row.family)) + " certified at A = " + num(row.A));
    }
    ctx.out.table("forms.csv", "jacobi_forms", t.str());
}

FormConstants with_overrides(FormConstants k, const RunConfig& c) {
    if (c.A) k.A = *c.A;
    if (c.C) k.C_big = *c.C;
    if (c.eps) k.eps = *c.eps;
    if (c.delta) k.delta = *c.delta;
    if (c.mu) k.mu = *c.mu;
    k.validate();
    return k;
}

void run_jacobi(Context& ctx) {
    const RunConfig& c = ctx.cfg;
    Setup s = setup(c, *c.points);
    const ManufacturedProblem& mp = *s.mp;
    std::ostringstream t;
    t << "variant,n,points,nodes,min_margin,min_scaled_margin,violations,A,C,calibrated_C\n";
    auto emit = [&](const JacobiReport& r) {
        t << to_string(r.variant) << ',' << ctx.n() << ',' << *c.points << ',' << r.nodes_checked << ',' << num(r.min_margin)
          << ',' << num(r.min_scaled_margin) << ',' << r.violation_count << ',' << num(r.constants.A) << ','
          << num(r.constants.C_big) << ',' << num(r.calibrated_C) << '\n';
        if (r.violation_count > 0)
            ctx.finding(std::string(to_string(r.variant)) + ": " + std::to_string(r.violation_count) +
                        " nodes below the margin floor with C = " + num(r.constants.C_big) + "; recalibrated C = " + num(r.calibrated_C));
        ctx.check(std::isfinite(r.calibrated_C), std::string(to_string(r.variant)) + " Jacobi inequality certified (C = " + num(r.calibrated_C) + ")");
    };
    bool any = false;
    if (mp.min_eigenvalue >= 0.0) {
        emit(jacobi_report(mp, s.grid, with_overrides(FormConstants::convex(ctx.n(), certified_A_convex(ctx.n())), c), JacobiVariant::Convex));
        any = true;
    }
    const double theta = std::min(c.theta.value_or(0.2), mp.min_phase_margin);
    if (theta > 0.0) {
        const FormConstants k = FormConstants::supercritical(ctx.n(), theta, certified_A_supercritical(ctx.n(), theta));
        emit(jacobi_report(mp, s.grid, with_overrides(k, c), JacobiVariant::Supercritical));
        any = true;
    }
    if (!any) throw InvalidArgument("problem is neither convex nor supercritical; no Jacobi inequality applies");
    ctx.out.table("jacobi.csv", "estimate_harness", t.str());
}

void run_identities(Context& ctx) {
    const RunConfig& c = ctx.cfg;
    const auto samples = static_cast<std::size_t>(c.samples.value_or(10000));
    const int n = ctx.n();
    std::ostringstream t;
    t << "n,samples,max_product_residual,max_trace_residual,max_abs_c,structure_order_failures,structure_sigma_failures\n";
    const IdentitySuite id = identity_suite(n, samples, ctx.seed());
    StructureSuite st;
    if (n >= 3) st = structure_suite(n, samples, ctx.seed());
    t << n << ',' << samples << ',' << num(id.max_product_residual) << ',' << num(id.max_trace_residual) << ','
      << num(id.max_abs_c) << ',' << st.order_failures << ',' << st.sigma_failures << '\n';
    ctx.out.table("identities.csv", "spectral_core", t.str());
    ctx.check(id.max_product_residual <= kIdentityTol, "complex product identity residual " + num(id.max_product_residual));
    ctx.check(id.max_trace_residual <= kIdentityTol, "inverse metric trace expansion residual " + num(id.max_trace_residual));
    ctx.check(id.max_abs_c <= 2.0 * n, "|c_k| <= 2n");
    if (n >= 3) ctx.check(st.order_failures == 0 && st.sigma_failures == 0, "ordering and sigma signs on supercritical spectra");

    const std::vector<int> grids = c.refine ? *c.refine : std::vector<int>{*c.points};
    std::ostringstream d;
    d << "k,points,discrete_residual,analytic_residual,discrete_order,analytic_order\n";
    for (int k = 1; k <= n; ++k) {
        double prev_d = 0.0, prev_a = 0.0, prev_h = 0.0;
        for (int p : grids) {
            Setup s = setup(c, p);
            const double rd = divergence_identity_check(s.mp->u_exact, k);
            const double ra = divergence_identity_check(s.mp->u, s.grid, k);
            const double h = s.grid.spacing(0);
            std::string od, oa;
            if (prev_h > 0.0) {
                const double l = std::log(prev_h / h);
                od = num(std::log(prev_d / rd) / l);
                oa = num(std::log(prev_a / ra) / l);
                if (k >= 2) {
                    ctx.check(std::abs(std::log(prev_d / rd) / l - 2.0) <= kOrderBand,
                              "divergence identity k = " + std::to_string(k) + " discrete order at " + std::to_string(p) + " points: " + od);
                }
            }
            if (k == 1) ctx.check(rd <= kExactTol, "divergence identity k = 1 exact at " + std::to_string(p) + " points");
            d << k << ',' << p << ',' << num(rd) << ',' << num(ra) << ',' << od << ',' << oa << '\n';
            prev_d = rd;
            prev_a = ra;
            prev_h = h;
        }
    }
    ctx.out.table("divergence.csv", "estimate_harness", d.str());
}

void run_approx(Context& ctx) {
    const RunConfig& c = ctx.cfg;
    Setup s = setup(c, *c.points);
    PipelineOptions o;
    o.alpha = c.alpha.value_or(0.5);
    o.seed = ctx.seed();
    if (c.dense_samples) o.dense_samples = static_cast<std::size_t>(*c.dense_samples);
    o.solve = solve_options(c);
    const PipelineReport rep = run_pipeline(s.phi, s.grid, *c.K, s.boundary, o);
    std::ostringstream t;
    write_pipeline_csv(t, rep);
    ctx.out.table("pipeline.csv", "approximation_pipeline", t.str());
    std::ostringstream cal;
    cal << "k,delta,c_cmp,sandwich_violation,diff_to_next\n";
    for (const auto& r : rep.rows)
        cal << r.k << ',' << num(r.delta) << ',' << num(r.c_cmp) << ',' << num(r.sandwich_violation) << ',' << num(r.diff_to_next) << '\n';
    ctx.out.table("pipeline_calibration.csv", "approximation_pipeline", cal.str());

    bool contract = true, sandwich = true, monotone = true;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        const auto& r = rep.rows[i];
        contract = contract && r.phik_err <= 1.0 / r.k;
        sandwich = sandwich && r.sandwich_ok;
        if (i > 0) monotone = monotone && r.diff_to_ref <= rep.rows[i - 1].diff_to_ref;
        if (r.k >= 8) {
            lo = std::min(lo, r.hess_sup);
            hi = std::max(hi, r.hess_sup);
        }
    }
    ctx.check(contract, "mollification contract |phi_k - phi| <= 1/k");
    ctx.check(sandwich, "sandwich holds for every consecutive pair");
    ctx.check(monotone, "|u_k - u_ref| nonincreasing");
    if (hi > 0.0) ctx.check((hi - lo) / hi <= 0.05, "interior Hessian spread for k >= 8: " + num((hi - lo) / hi));
    for (const auto& f : rep.findings) ctx.finding(f);
    ctx.finding("Hoelder quotient at the finest k: " + num(rep.rows.back().holder));
}

void run_refine(Context& ctx) {
    const RunConfig& c = ctx.cfg;
    const HessianBoundTable t = hessian_bound_study(catalog_of(c), ctx.n(), *c.refine, c.lo.value_or(-1.0), c.hi.value_or(1.0),
                                                    catalog_params(c), solve_options(c));
    std::ostringstream os;
    os << "points,h,hess0,exact0,osc,lip,theta,iterations\n";
    for (const auto& r : t.rows)
        os << r.points << ',' << num(r.h) << ',' << num(r.hess0) << ',' << num(r.exact0) << ',' << num(r.osc) << ','
           << num(r.lip) << ',' << num(r.theta) << ',' << r.iterations << '\n';
    ctx.out.table("refine.csv", "estimate_harness", os.str());
    ctx.check(t.stable, "|D^2u(0)| spread over the two finest grids: " + num(t.spread));

    const double A = c.A.value_or(certified_A_convex(ctx.n()));
    std::ostringstream mv;
    mv << "points,A,radius,point_value,ball_average,ratio,volume,gradient_integral,phase_gradient_integral\n";
    for (int p : *c.refine) {
        Setup s = setup(c, p);
        const SolveResult r = newton_solve(s.grid, s.phi, s.boundary, solve_options(c));
        const double radius = 0.5 * s.grid.inradius();
        if (radius > s.grid.inradius() - 2.0 * s.grid.spacing(0)) continue;
        const MeanValueReport m = mean_value_monitor(r.u, s.phi, A, radius);
        mv << p << ',' << num(A) << ',' << num(radius) << ',' << num(m.point_value) << ',' << num(m.ball_average) << ','
           << num(m.ratio) << ',' << num(m.volume) << ',' << num(m.gradient_integral) << ',' << num(m.phase_gradient_integral) << '\n';
    }
    ctx.out.table("mean_value.csv", "estimate_harness", mv.str());
}

}  // namespace

ReportBundle run(const RunConfig& config) {
    ReportBundle b;
    b.command = *config.command;
    b.seed = config.seed.value_or(1);
    b.directory = config.out.value_or(std::string("lagmc-out/") + to_string(b.command));
    const std::string canonical = emit_config(config);
    // The output location is not part of what was computed.
    RunConfig hashed = config;
    hashed.out.reset();
    b.config_hash = fnv1a(emit_config(hashed));
    Writer out(b);
    Context ctx{config, b, out, {}};
    out.write("config.ini", canonical);
    auto manifest = [&](const std::string& status) {
        std::ostringstream m;
        m << "version = " << version_string() << "\n";
        m << "command = " << to_string(b.command) << "\n";
        m << "config_hash = fnv1a64:" << hex64(b.config_hash) << "\n";
        m << "seed = " << b.seed << "\n";
        m << "status = " << status << "\n";
        for (const auto& t : b.tables) m << "table = " << t.file << " module=" << t.module << " suite=" << t.suite << "\n";
        for (const auto& f : b.fields) m << "field = " << f << "\n";
        return m.str();
    };
    try {
        switch (b.command) {
            case Command::Solve: run_solve(ctx); break;
            case Command::VerifyForms: run_verify_forms(ctx); break;
            case Command::Jacobi: run_jacobi(ctx); break;
            case Command::Identities: run_identities(ctx); break;
            case Command::Approx: run_approx(ctx); break;
            case Command::Refine: run_refine(ctx); break;
        }
    } catch (const std::exception& e) {
        ctx.summary << "ERROR " << e.what() << "\n";
        out.write("summary.txt", ctx.summary.str());
        out.write("manifest.txt", manifest("error"));
        throw;
    }
    b.summary = ctx.summary.str();
    out.write("summary.txt", b.summary);
    out.write("manifest.txt", manifest(b.passed() ? "pass" : "fail"));
    out.commit();
    return b;
}

}  // namespace lagmc
