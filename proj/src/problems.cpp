#include "lierc/problems.hpp"

#include <chrono>
#include <cmath>
#include <functional>

namespace lierc {

namespace {

// Internal time scaling: s = t / T, dynamics multiplied by T. Conditioning of
// the monomial bases is much better on [0, 1].
PolynomialVector scale_dynamics(const PolynomialVector& f, double T,
                                const std::vector<std::string>& tx_vars) {
    PolynomialVector out;
    for (const auto& p : f.entries)
        out.entries.push_back(p.with_vars(tx_vars).scale_var(0, T) * T);
    return out;
}

struct ScaledSystem {
    PolynomialVector f0;
    std::vector<PolynomialVector> channels;
    BsaSet lie_domain;  // [0,1] x X over tx vars, with the redundant ball
    std::vector<std::string> tx;
};

ScaledSystem scale_system(const SystemSpec& spec, bool add_ball = true) {
    ScaledSystem s;
    s.tx = spec.tx_vars;
    s.f0 = scale_dynamics(spec.f0, spec.T, s.tx);
    for (const auto& ch : spec.channels) s.channels.push_back(scale_dynamics(ch, spec.T, s.tx));

    // domain [0,1] x X with an explicit ball bound to keep the description
    // Archimedean regardless of the X shape
    s.lie_domain.vars = s.tx;
    auto t = Polynomial::variable(s.tx, s.tx[0]);
    s.lie_domain.inequalities.push_back(t * (Polynomial::constant(s.tx, 1.0) - t));
    BsaSet xdesc = spec.X.descriptors(spec.state_vars);
    for (const auto& g : xdesc.inequalities) s.lie_domain.inequalities.push_back(g.with_vars(s.tx));

    if (add_ball) {
        double R2 = 1.0;
        for (int i = 0; i < spec.n; ++i)
            R2 += std::max(spec.X.lo[i] * spec.X.lo[i], spec.X.hi[i] * spec.X.hi[i]);
        Polynomial ball = Polynomial::constant(s.tx, R2) - t * t;
        for (int i = 0; i < spec.n; ++i) {
            auto xi = Polynomial::variable(s.tx, s.tx[i + 1]);
            ball -= xi * xi;
        }
        s.lie_domain.inequalities.push_back(ball);
    }
    return s;
}

// Lie data of the unknown v: base and channel PolyLins, linear in v's columns.
void lie_polylin(const UnknownPoly& v, const ScaledSystem& sys, PolyLin& base,
                 std::vector<PolyLin>& channels) {
    base = PolyLin(sys.tx);
    channels.assign(sys.channels.size(), PolyLin(sys.tx));
    for (std::size_t j = 0; j < v.basis.size(); ++j) {
        Polynomial mono = Polynomial::monomial(sys.tx, v.basis[j], 1.0);
        auto lt = lie_terms(mono, sys.f0, sys.channels);
        const int col = v.offset + static_cast<int>(j);
        base.add_col_times_poly(col, lt.base);
        for (std::size_t l = 0; l < sys.channels.size(); ++l)
            channels[l].add_col_times_poly(col, lt.per_channel[l]);
    }
}

// gamma >= v(0, x) on X0; point sets take a single scalar row.
void emit_initial_bound(SosAssembler& as, const SystemSpec& spec, const UnknownPoly& v,
                        int gamma_col) {
    PolyLin v0(v.vars);
    for (std::size_t j = 0; j < v.basis.size(); ++j)
        if (v.basis[j][0] == 0)
            v0.add_col_times_mono(v.offset + static_cast<int>(j), v.basis[j], 1.0);

    Eigen::VectorXd pt;
    if (spec.X0.is_point(&pt)) {
        ConicProblem& prob = as.mutable_problem();
        const int slack = prob.add_block(VarCone::Nonneg, 1, "init_slack");
        const int row = prob.add_row(0.0, "init");
        prob.add_entry(row, gamma_col, 1.0);
        std::vector<double> at(v.vars.size(), 0.0);
        for (int i = 0; i < pt.size(); ++i) at[1 + i] = pt[i];
        for (std::size_t j = 0; j < v.basis.size(); ++j) {
            const double mv = Polynomial::monomial(v.vars, v.basis[j], 1.0).eval(at);
            if (mv != 0.0) prob.add_entry(row, v.offset + static_cast<int>(j), -mv);
        }
        prob.add_entry(row, slack, -1.0);
        return;
    }
    BsaSet dom;
    dom.vars = v.vars;
    for (const auto& g : spec.X0.inequalities) dom.inequalities.push_back(g.with_vars(v.vars));
    for (const auto& h : spec.X0.equalities) dom.equalities.push_back(h.with_vars(v.vars));
    PolyLin expr(v.vars);
    expr.add_col_times_mono(gamma_col, MultiIndex(v.vars.size(), 0), 1.0);
    expr.add_scaled(v0, -1.0);
    as.require_wsos("init", expr, dom);
}

PolyLin eval_at_time(const UnknownPoly& v, double tval) {
    PolyLin out(v.vars);
    for (std::size_t j = 0; j < v.basis.size(); ++j) {
        MultiIndex alpha = v.basis[j];
        const int tp = alpha[0];
        alpha[0] = 0;
        out.add_col_times_mono(v.offset + static_cast<int>(j), alpha, std::pow(tval, tp));
    }
    return out;
}

BsaSet lift_to(const BsaSet& s, const std::vector<std::string>& vars) {
    BsaSet out;
    out.vars = vars;
    for (const auto& g : s.inequalities) out.inequalities.push_back(g.with_vars(vars));
    for (const auto& h : s.equalities) out.equalities.push_back(h.with_vars(vars));
    out.matrix_inequalities = s.matrix_inequalities;
    for (auto& M : out.matrix_inequalities)
        for (auto& row : M.entries)
            for (auto& e : row) e = e.with_vars(vars);
    return out;
}

UnknownPoly add_state_poly(SosAssembler& as, const std::string& id, int deg,
                           const std::vector<std::string>& tx) {
    // polynomial in x only, hosted over the tx variable list
    UnknownPoly out;
    out.vars = tx;
    for (const auto& alpha : monomials_up_to(static_cast<int>(tx.size()), deg))
        if (alpha[0] == 0) out.basis.push_back(alpha);
    out.offset = as.mutable_problem().add_block(VarCone::Free,
                                                static_cast<int>(out.basis.size()), id);
    return out;
}

void finalize(BuiltProgram& bp, SosAssembler& as) {
    bp.largest_block = as.largest_block_side();
    bp.grams = as.grams();
    bp.row_groups = as.row_groups();
    bp.problem = as.take_problem();
}

}  // namespace

double region_moment(const StateRegion& X, const MultiIndex& alpha) {
    const int n = static_cast<int>(X.lo.size());
    if (!X.is_ball) {
        double m = 1.0;
        for (int i = 0; i < n; ++i) {
            const int k = alpha[i];
            m *= (std::pow(X.hi[i], k + 1) - std::pow(X.lo[i], k + 1)) / (k + 1);
        }
        return m;
    }
    // ball: expand around the center; central moments of the unit ball scaled
    // by R^{|beta|+n}, zero for odd exponents
    std::function<double(int, MultiIndex&)> rec = [&](int pos, MultiIndex& beta) -> double {
        if (pos == n) {
            double degsum = 0;
            for (int i = 0; i < n; ++i) degsum += beta[i];
            for (int i = 0; i < n; ++i)
                if (beta[i] % 2 == 1) return 0.0;
            // surface integral of u^beta over S^{n-1}: 2 prod Gamma((b_i+1)/2) / Gamma((n+|b|)/2)
            double lg = std::log(2.0);
            for (int i = 0; i < n; ++i) lg += std::lgamma((beta[i] + 1.0) / 2.0);
            lg -= std::lgamma((n + degsum) / 2.0);
            const double surface = std::exp(lg);
            return surface * std::pow(X.radius, degsum + n) / (degsum + n);
        }
        double acc = 0.0;
        double binom = 1.0;
        for (int k = 0; k <= alpha[pos]; ++k) {
            if (k > 0) binom = binom * (alpha[pos] - k + 1) / k;
            beta[pos] = k;
            const double centerpow = std::pow(X.center[pos], alpha[pos] - k);
            acc += binom * centerpow * rec(pos + 1, beta);
        }
        beta[pos] = 0;
        return acc;
    };
    MultiIndex beta(n, 0);
    return rec(0, beta);
}

BuiltProgram build_peak(const SystemSpec& spec, const Polynomial& p, const SosTemplate& tmpl) {
    BuiltProgram bp;
    bp.kind = ProblemKind::Peak;
    bp.tx_vars = spec.tx_vars;
    bp.T = spec.T;
    bp.L = spec.L();

    ScaledSystem sys = scale_system(spec, tmpl.add_ball);
    SosAssembler as(sys.tx);
    bp.gamma_col = as.add_free_scalar("gamma");
    bp.v = as.add_unknown_poly("v", tmpl.v_deg());

    PolyLin base;
    std::vector<PolyLin> channels;
    lie_polylin(bp.v, sys, base, channels);

    LieData shape;
    shape.base = Polynomial(sys.tx);
    shape.per_channel.assign(spec.L(), Polynomial(sys.tx));
    shape.domain = sys.lie_domain;
    auto rsys = robustify(shape, spec.W);
    emit_robust_system(as, rsys, tmpl, base, channels);

    // v >= p on [0,1] x X
    PolyLin cost = bp.v.poly();
    cost.add_poly(p.with_vars(sys.tx), -1.0);
    as.require_wsos("cost", cost, sys.lie_domain);

    emit_initial_bound(as, spec, bp.v, bp.gamma_col);
    as.add_objective(bp.gamma_col, 1.0);
    finalize(bp, as);
    return bp;
}

BuiltProgram build_peak_vertex(const SystemSpec& spec, const Polynomial& p,
                               const SosTemplate& tmpl, const Polytope& P) {
    BuiltProgram bp;
    bp.kind = ProblemKind::Peak;
    bp.tx_vars = spec.tx_vars;
    bp.T = spec.T;
    bp.L = spec.L();

    ScaledSystem sys = scale_system(spec, tmpl.add_ball);
    SosAssembler as(sys.tx);
    bp.gamma_col = as.add_free_scalar("gamma");
    bp.v = as.add_unknown_poly("v", tmpl.v_deg());

    PolyLin base;
    std::vector<PolyLin> channels;
    lie_polylin(bp.v, sys, base, channels);

    auto vlist = vertices(P);
    if (vlist.empty()) throw SdrError("build_peak_vertex: no vertices");
    for (std::size_t k = 0; k < vlist.size(); ++k) {
        PolyLin lie = base;
        for (int l = 0; l < spec.L(); ++l) lie.add_scaled(channels[l], vlist[k][l]);
        as.require_wsos("lie_vertex" + std::to_string(k), -lie, sys.lie_domain);
    }

    PolyLin cost = bp.v.poly();
    cost.add_poly(p.with_vars(sys.tx), -1.0);
    as.require_wsos("cost", cost, sys.lie_domain);
    emit_initial_bound(as, spec, bp.v, bp.gamma_col);
    as.add_objective(bp.gamma_col, 1.0);
    finalize(bp, as);
    return bp;
}

BuiltProgram build_distance(const SystemSpec& spec, const SosTemplate& tmpl) {
    if (!spec.Xu) throw SdrError("build_distance: no unsafe set configured");
    BuiltProgram bp;
    bp.kind = ProblemKind::Distance;
    bp.tx_vars = spec.tx_vars;
    bp.T = spec.T;
    bp.L = spec.L();

    ScaledSystem sys = scale_system(spec, tmpl.add_ball);
    SosAssembler as(sys.tx);
    bp.gamma_col = as.add_free_scalar("gamma");
    bp.v = as.add_unknown_poly("v", tmpl.v_deg());
    bp.phi = add_state_poly(as, "phi", tmpl.v_deg(), sys.tx);

    PolyLin base;
    std::vector<PolyLin> channels;
    lie_polylin(bp.v, sys, base, channels);
    LieData shape;
    shape.base = Polynomial(sys.tx);
    shape.per_channel.assign(spec.L(), Polynomial(sys.tx));
    shape.domain = sys.lie_domain;
    emit_robust_system(as, robustify(shape, spec.W), tmpl, base, channels);

    // v(t,x) >= phi(x) on [0,1] x X
    PolyLin vm = bp.v.poly();
    vm.add_scaled(bp.phi.poly(), -1.0);
    as.require_wsos("v_ge_phi", vm, sys.lie_domain);

    // phi(x) >= -c(x,y) over X x Y with c the squared euclidean metric
    std::vector<std::string> xy = spec.state_vars;
    for (const auto& sv : spec.state_vars) xy.push_back(sv + "_u");
    BsaSet dom_xy;
    dom_xy.vars = xy;
    BsaSet xdesc = spec.X.descriptors(spec.state_vars);
    for (const auto& g : xdesc.inequalities) dom_xy.inequalities.push_back(g.with_vars(xy));
    for (const auto& g : spec.Xu->inequalities) {
        Polynomial gy = g;  // rename x_i -> x_i_u
        // rebuild over xy with shifted names
        Polynomial lifted(xy);
        for (const auto& [alpha, c] : g.terms()) {
            MultiIndex beta(xy.size(), 0);
            for (std::size_t i = 0; i < alpha.size(); ++i) beta[spec.n + i] = alpha[i];
            lifted += Polynomial::monomial(xy, beta, c);
        }
        dom_xy.inequalities.push_back(lifted);
    }
    for (const auto& h : spec.Xu->equalities) {
        Polynomial lifted(xy);
        for (const auto& [alpha, c] : h.terms()) {
            MultiIndex beta(xy.size(), 0);
            for (std::size_t i = 0; i < alpha.size(); ++i) beta[spec.n + i] = alpha[i];
            lifted += Polynomial::monomial(xy, beta, c);
        }
        dom_xy.equalities.push_back(lifted);
    }

    PolyLin phixy(xy);
    for (std::size_t j = 0; j < bp.phi.basis.size(); ++j) {
        MultiIndex beta(xy.size(), 0);
        for (int i = 0; i < spec.n; ++i) beta[i] = bp.phi.basis[j][1 + i];
        phixy.add_col_times_mono(bp.phi.offset + static_cast<int>(j), beta, 1.0);
    }
    Polynomial c_metric(xy);
    for (int i = 0; i < spec.n; ++i) {
        auto d = Polynomial::variable(xy, xy[i]) - Polynomial::variable(xy, xy[spec.n + i]);
        c_metric += d * d;
    }
    phixy.add_poly(c_metric, 1.0);  // phi + c >= 0
    as.require_wsos("phi_vs_unsafe", phixy, dom_xy);

    emit_initial_bound(as, spec, bp.v, bp.gamma_col);
    as.add_objective(bp.gamma_col, 1.0);
    finalize(bp, as);
    return bp;
}

namespace {

BuiltProgram build_set_program(const SystemSpec& spec, const SosTemplate& tmpl, bool roa) {
    BuiltProgram bp;
    bp.kind = roa ? ProblemKind::Roa : ProblemKind::Reach;
    bp.tx_vars = spec.tx_vars;
    bp.T = spec.T;
    bp.L = spec.L();

    ScaledSystem sys = scale_system(spec, tmpl.add_ball);
    SosAssembler as(sys.tx);
    bp.v = as.add_unknown_poly("v", tmpl.v_deg());
    bp.phi = add_state_poly(as, "phi", tmpl.v_deg(), sys.tx);

    PolyLin base;
    std::vector<PolyLin> channels;
    lie_polylin(bp.v, sys, base, channels);
    LieData shape;
    shape.base = Polynomial(sys.tx);
    shape.per_channel.assign(spec.L(), Polynomial(sys.tx));
    shape.domain = sys.lie_domain;
    emit_robust_system(as, robustify(shape, spec.W), tmpl, base, channels);

    BsaSet domX;
    domX.vars = sys.tx;
    BsaSet xdesc = spec.X.descriptors(spec.state_vars);
    for (const auto& g : xdesc.inequalities) domX.inequalities.push_back(g.with_vars(sys.tx));

    if (!roa) {
        // v(0,.) <= 0 on X0; phi + v(1,.) >= 1 on X; phi >= 0 on X
        BsaSet dom0 = lift_to(spec.X0, sys.tx);
        as.require_wsos("v0_nonpos", -eval_at_time(bp.v, 0.0), dom0);
        PolyLin terminal = bp.phi.poly();
        terminal.add_scaled(eval_at_time(bp.v, 1.0), 1.0);
        terminal.add_poly(Polynomial::constant(sys.tx, -1.0));
        as.require_wsos("terminal", terminal, domX);
    } else {
        if (!spec.XT) throw SdrError("build_roa: no goal set configured");
        // v(1,.) >= 0 on XT; phi >= 1 + v(0,.) on X; phi >= 0 on X
        BsaSet domT = lift_to(*spec.XT, sys.tx);
        as.require_wsos("vT_nonneg", eval_at_time(bp.v, 1.0), domT);
        PolyLin initial = bp.phi.poly();
        initial.add_scaled(eval_at_time(bp.v, 0.0), -1.0);
        initial.add_poly(Polynomial::constant(sys.tx, -1.0));
        as.require_wsos("initial", initial, domX);
    }
    as.require_wsos("phi_nonneg", bp.phi.poly(), domX);

    for (std::size_t j = 0; j < bp.phi.basis.size(); ++j) {
        MultiIndex alpha(spec.n, 0);
        for (int i = 0; i < spec.n; ++i) alpha[i] = bp.phi.basis[j][1 + i];
        as.add_objective(bp.phi.offset + static_cast<int>(j), region_moment(spec.X, alpha));
    }
    finalize(bp, as);
    return bp;
}

}  // namespace

BuiltProgram build_reach(const SystemSpec& spec, const SosTemplate& tmpl) {
    return build_set_program(spec, tmpl, false);
}

BuiltProgram build_roa(const SystemSpec& spec, const SosTemplate& tmpl) {
    return build_set_program(spec, tmpl, true);
}

DegreeOutcome extract_outcome(const BuiltProgram& built, const ConicSolution& sol, int degree) {
    DegreeOutcome out;
    out.degree = degree;
    out.status = sol.status;
    out.seconds = sol.solve_seconds;
    out.iterations = sol.iterations;
    out.largest_block = built.largest_block;
    if (!sol.usable()) {
        out.bound = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    out.bound = sol.objective;
    if (built.kind == ProblemKind::Distance)
        out.bound = std::sqrt(std::max(0.0, -sol.objective));
    out.v = built.v.value(sol.x).scale_var(0, 1.0 / built.T);
    if (!built.phi.basis.empty()) out.phi = built.phi.value(sol.x);
    if (built.gamma_col >= 0) out.gamma = sol.x[built.gamma_col];
    return out;
}

BoundReport sweep(const SystemSpec& spec, ProblemKind kind, const Polynomial* objective,
                  const std::vector<int>& degrees, const SweepOptions& opts) {
    if (degrees.empty() || !std::is_sorted(degrees.begin(), degrees.end()))
        throw SdrError("sweep: degrees must be nonempty ascending");
    BoundReport report;
    report.kind = kind;
    for (int d : degrees) {
        SosTemplate tmpl = opts.base_template;
        tmpl.degree = d;
        BuiltProgram built;
        switch (kind) {
            case ProblemKind::Peak: built = build_peak(spec, *objective, tmpl); break;
            case ProblemKind::Distance: built = build_distance(spec, tmpl); break;
            case ProblemKind::Reach: built = build_reach(spec, tmpl); break;
            case ProblemKind::Roa: built = build_roa(spec, tmpl); break;
        }
        ConicSolution sol;
        try {
            sol = solve(built.problem, opts.solver, opts.backend);
        } catch (const std::exception&) {
            sol.status = SolveStatus::NumericalError;
        }
        report.outcomes.push_back(extract_outcome(built, sol, d));
    }

    // monotonicity audit over usable degrees: peak/reach/roa minimize, the
    // distance bound (a value of -gamma mapped through sqrt) is nondecreasing
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (const auto& o : report.outcomes) {
        if (o.status != SolveStatus::Optimal && o.status != SolveStatus::SlowProgress) continue;
        if (!std::isnan(prev)) {
            const bool ok = (kind == ProblemKind::Distance) ? (o.bound >= prev - 1e-5)
                                                            : (o.bound <= prev + 1e-5);
            if (!ok) report.monotone = false;
        }
        prev = o.bound;
    }

    if (opts.cross_check) {
        auto emp = empirical_extremum(spec, kind, objective, opts.n_traj, opts.seed);
        report.has_empirical = true;
        report.empirical = emp.value;
        report.empirical_trajectories = emp.trajectories;
    }
    return report;
}

}  // namespace lierc
