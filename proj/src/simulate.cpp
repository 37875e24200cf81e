#include "lierc/simulate.hpp"

#include <algorithm>
#include <cmath>

namespace lierc {

StateRegion StateRegion::box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    StateRegion r;
    r.lo = lo;
    r.hi = hi;
    return r;
}

StateRegion StateRegion::ball(const Eigen::VectorXd& center, double radius) {
    StateRegion r;
    r.is_ball = true;
    r.center = center;
    r.radius = radius;
    r.lo = center.array() - radius;
    r.hi = center.array() + radius;
    return r;
}

BsaSet StateRegion::descriptors(const std::vector<std::string>& vars) const {
    if (is_ball) {
        Eigen::VectorXd c = center;
        return BsaSet::ball(vars, c, radius);
    }
    return BsaSet::box(vars, lo, hi);
}

Eigen::VectorXd SystemSpec::dynamics(double t, const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& w) const {
    std::vector<double> pt(n + 1);
    pt[0] = t;
    for (int i = 0; i < n; ++i) pt[1 + i] = x[i];
    Eigen::VectorXd dx(n);
    for (int i = 0; i < n; ++i) {
        double v = f0[i].eval(pt);
        for (int l = 0; l < L(); ++l) v += w[l] * channels[l][i].eval(pt);
        dx[i] = v;
    }
    return dx;
}

std::vector<Eigen::VectorXd> hit_and_run(const Polytope& P, int count, std::uint64_t seed) {
    auto [center, radius] = chebyshev_center(P);
    if (radius <= 1e-12) throw SdrError("hit_and_run: polytope has empty interior");
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int L = P.L();

    Eigen::VectorXd x = center;
    std::vector<Eigen::VectorXd> out;
    out.reserve(count);
    const int burn = 64, thin = 4;
    int accepted = 0;
    while (static_cast<int>(out.size()) < count) {
        Eigen::VectorXd d(L);
        for (int i = 0; i < L; ++i) d[i] = gauss(rng);
        const double dn = d.norm();
        if (dn < 1e-14) continue;
        d /= dn;
        double tlo = -std::numeric_limits<double>::infinity();
        double thi = std::numeric_limits<double>::infinity();
        for (int r = 0; r < P.faces(); ++r) {
            const double gd = P.gamma.row(r).dot(d);
            const double slack = P.h[r] - P.gamma.row(r).dot(x);
            if (std::abs(gd) < 1e-14) {
                if (slack < -1e-12) tlo = 1, thi = 0;  // outside (should not happen)
                continue;
            }
            const double bound = slack / gd;
            if (gd > 0)
                thi = std::min(thi, bound);
            else
                tlo = std::max(tlo, bound);
        }
        if (!(thi >= tlo) || !std::isfinite(thi) || !std::isfinite(tlo)) continue;
        x += (tlo + unif(rng) * (thi - tlo)) * d;
        ++accepted;
        if (accepted > burn && accepted % thin == 0) out.push_back(x);
    }
    return out;
}

Eigen::VectorXd extreme_input(const SdrSet& W, const Eigen::VectorXd& theta) {
    return support_point(W, theta).first;
}

InputSampler::InputSampler(const SdrSet& W, std::uint64_t seed, int pool) : W_(W) {
    if (W.L == 0) {
        pool_ = {Eigen::VectorXd::Zero(0)};
        return;
    }
    // polytope fast path: a single Nonnegative block without lift or equalities
    if (!W.has_lift() && !W.equalities && W.blocks.size() == 1 &&
        W.blocks[0].cone.kind == ConeKind::Nonnegative) {
        Polytope P;
        P.gamma = -W.blocks[0].A;
        P.h = W.blocks[0].e;
        pool_ = hit_and_run(P, pool, seed);
        return;
    }
    mix_mode_ = true;
    auto slater = check_slater(W);
    if (slater.kind == SlaterResult::Kind::Singleton) {
        pool_ = {slater.w};
        mix_mode_ = false;
        return;
    }
    if (slater.kind != SlaterResult::Kind::SlaterPoint)
        throw SdrError("input sampler: W has no interior point");
    interior_ = slater.w;
    std::mt19937_64 rng(seed ^ 0xdeadbeefULL);
    std::normal_distribution<double> gauss;
    const int n_ext = std::max(pool / 4, 16);
    for (int k = 0; k < n_ext; ++k) {
        Eigen::VectorXd theta(W.L);
        for (int i = 0; i < W.L; ++i) theta[i] = gauss(rng);
        if (theta.norm() < 1e-12) continue;
        theta.normalize();
        pool_.push_back(extreme_input(W_, theta));
    }
}

Eigen::VectorXd InputSampler::draw(std::mt19937_64& rng) const {
    std::uniform_int_distribution<std::size_t> pick(0, pool_.size() - 1);
    if (!mix_mode_) return pool_[pick(rng)];
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double lam = unif(rng);
    return lam * pool_[pick(rng)] + (1.0 - lam) * interior_;
}

namespace {

// Dormand-Prince 5(4) tableau
const double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
const double kC[7] = {0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
const double kB5[7] = {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84, 0};
const double kB4[7] = {5179.0 / 57600, 0,           7571.0 / 16695, 393.0 / 640,
                       -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

bool in_region(const StateRegion& X, const Eigen::VectorXd& x) {
    if (X.is_ball) return (x - X.center).norm() <= X.radius + 1e-12;
    return (x.array() >= X.lo.array() - 1e-12).all() && (x.array() <= X.hi.array() + 1e-12).all();
}

}  // namespace

Trajectory integrate(const SystemSpec& spec, const Eigen::VectorXd& x0,
                     const std::vector<Eigen::VectorXd>& w_schedule,
                     const IntegrateOptions& opts) {
    const double sw = opts.switch_period > 0 ? opts.switch_period : spec.T / 50.0;
    auto input_at = [&](double t) -> const Eigen::VectorXd& {
        if (w_schedule.empty()) {
            static const Eigen::VectorXd zero = Eigen::VectorXd::Zero(0);
            return zero;
        }
        auto idx = static_cast<std::size_t>(std::min(
            std::floor(t / sw), static_cast<double>(w_schedule.size() - 1)));
        return w_schedule[idx];
    };

    Trajectory tr;
    Eigen::VectorXd x = x0;
    double t = 0.0;
    double h = spec.T * opts.max_step_factor * 0.1;
    const double hmax = spec.T * opts.max_step_factor;
    tr.times.push_back(t);
    tr.states.push_back(x);
    tr.inputs.push_back(w_schedule.empty() ? Eigen::VectorXd::Zero(spec.L()) : input_at(0.0));

    std::vector<Eigen::VectorXd> k(7, Eigen::VectorXd::Zero(spec.n));
    int rejected_in_row = 0;
    while (t < spec.T - 1e-14) {
        h = std::min({h, hmax, spec.T - t});
        // keep the input constant within a step: clip to the switch boundary
        const double next_switch = (std::floor(t / sw + 1e-12) + 1.0) * sw;
        if (next_switch - t > 1e-14) h = std::min(h, next_switch - t);
        const Eigen::VectorXd& w = input_at(t + 1e-13);

        k[0] = spec.dynamics(t, x, w);
        for (int s = 1; s < 7; ++s) {
            Eigen::VectorXd xs = x;
            for (int j = 0; j < s; ++j) xs += h * kA[s][j] * k[j];
            k[s] = spec.dynamics(t + kC[s] * h, xs, w);
        }
        Eigen::VectorXd x5 = x, x4 = x;
        for (int s = 0; s < 7; ++s) {
            x5 += h * kB5[s] * k[s];
            x4 += h * kB4[s] * k[s];
        }
        const double scale = opts.abs_tol + opts.rel_tol * std::max(x.norm(), x5.norm());
        const double err = (x5 - x4).norm() / std::max(scale, 1e-300);
        if (err <= 1.0) {
            rejected_in_row = 0;
            if (!in_region(spec.X, x5)) {
                // bisect the step so the recorded exit state sits on the
                // boundary of X rather than beyond it
                auto rk_state = [&](double hh) {
                    std::vector<Eigen::VectorXd> kk(7);
                    kk[0] = spec.dynamics(t, x, w);
                    for (int s = 1; s < 7; ++s) {
                        Eigen::VectorXd xs = x;
                        for (int j = 0; j < s; ++j) xs += hh * kA[s][j] * kk[j];
                        kk[s] = spec.dynamics(t + kC[s] * hh, xs, w);
                    }
                    Eigen::VectorXd xe = x;
                    for (int s = 0; s < 7; ++s) xe += hh * kB5[s] * kk[s];
                    return xe;
                };
                double lo = 0.0, hi = h;
                Eigen::VectorXd xb = x5;
                for (int bis = 0; bis < 50; ++bis) {
                    const double mid = 0.5 * (lo + hi);
                    Eigen::VectorXd xm = rk_state(mid);
                    if (in_region(spec.X, xm)) {
                        lo = mid;
                    } else {
                        hi = mid;
                        xb = xm;
                    }
                }
                t += hi;
                x = xb;
                tr.times.push_back(t);
                tr.states.push_back(x);
                tr.inputs.push_back(w);
                tr.exited = true;
                break;
            }
            t += h;
            x = x5;
            tr.times.push_back(t);
            tr.states.push_back(x);
            tr.inputs.push_back(w);
        } else if (++rejected_in_row > 60) {
            throw PolynomialError("integrate: step size underflow (stiff blow-up)");
        }
        const double fac = 0.9 * std::pow(1.0 / std::max(err, 1e-10), 0.2);
        h *= std::clamp(fac, 0.2, 5.0);
        if (h < 1e-14 * spec.T) throw PolynomialError("integrate: step size underflow");
    }
    return tr;
}

std::vector<Eigen::VectorXd> sample_bsa(const BsaSet& set, const Eigen::VectorXd& lo,
                                        const Eigen::VectorXd& hi, int count,
                                        std::uint64_t seed) {
    Eigen::VectorXd pinned;
    if (set.is_point(&pinned)) return {pinned};
    std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int n = static_cast<int>(lo.size());
    std::vector<Eigen::VectorXd> out;
    std::vector<double> pt(n);
    long attempts = 0;
    const long max_attempts = 200000L * count;
    while (static_cast<int>(out.size()) < count && attempts < max_attempts) {
        ++attempts;
        Eigen::VectorXd x(n);
        for (int i = 0; i < n; ++i) {
            x[i] = lo[i] + unif(rng) * (hi[i] - lo[i]);
            pt[i] = x[i];
        }
        if (set.contains(pt, 1e-9)) out.push_back(x);
    }
    if (out.empty()) throw SdrError("sample_bsa: set appears empty within its bounding box");
    return out;
}

EmpiricalResult empirical_extremum(const SystemSpec& spec, ProblemKind kind,
                                   const Polynomial* objective, int n_traj, std::uint64_t seed,
                                   const IntegrateOptions& opts) {
    EmpiricalResult res;
    InputSampler sampler(spec.W, seed);
    const double sw = opts.switch_period > 0 ? opts.switch_period : spec.T / 50.0;
    const int n_switch = static_cast<int>(std::ceil(spec.T / sw)) + 1;

    // start points: X0 for peak/distance/reach, all of X for roa
    std::vector<Eigen::VectorXd> starts;
    if (kind == ProblemKind::Roa) {
        starts = sample_bsa(spec.X.descriptors(spec.state_vars), spec.X.lo, spec.X.hi, n_traj,
                            seed + 1);
    } else {
        starts = sample_bsa(spec.X0, spec.X.lo, spec.X.hi,
                            std::max(1, n_traj / 8), seed + 1);
    }

    std::vector<Eigen::VectorXd> unsafe_pts;
    if (kind == ProblemKind::Distance) {
        if (!spec.Xu) throw SdrError("distance run without an unsafe set");
        const auto& box = spec.Xu_box ? *spec.Xu_box : spec.X;
        unsafe_pts = sample_bsa(*spec.Xu, box.lo, box.hi, 2000, seed + 2);
    }

    res.value = (kind == ProblemKind::Distance) ? std::numeric_limits<double>::infinity()
                                                : -std::numeric_limits<double>::infinity();

    const int tries_per_start = (kind == ProblemKind::Roa) ? 3 : 1;
    int made = 0;
    for (int i = 0; made < n_traj; ++i) {
        const Eigen::VectorXd& x0 = starts[i % starts.size()];
        bool reached = false;
        for (int trial = 0; trial < tries_per_start && made < n_traj; ++trial) {
            ++made;
            std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 0x1000 + made);
            std::vector<Eigen::VectorXd> schedule(n_switch);
            for (auto& w : schedule) w = sampler.draw(rng);
            Trajectory tr;
            try {
                tr = integrate(spec, x0, schedule, opts);
            } catch (const std::exception&) {
                ++res.failures;
                continue;
            }
            if (res.kept.size() < 8) res.kept.push_back(tr);
            switch (kind) {
                case ProblemKind::Peak: {
                    for (std::size_t k = 0; k < tr.states.size(); ++k) {
                        std::vector<double> pt(tr.states[k].data(),
                                               tr.states[k].data() + spec.n);
                        res.value = std::max(res.value, objective->eval(pt));
                    }
                    break;
                }
                case ProblemKind::Distance: {
                    for (const auto& x : tr.states)
                        for (const auto& u : unsafe_pts)
                            res.value = std::min(res.value, (x - u).norm());
                    break;
                }
                case ProblemKind::Reach: {
                    if (!tr.exited) res.endpoints.push_back(tr.states.back());
                    break;
                }
                case ProblemKind::Roa: {
                    if (!tr.exited && spec.XT) {
                        std::vector<double> pt(tr.states.back().data(),
                                               tr.states.back().data() + spec.n);
                        if (spec.XT->contains(pt, 1e-9)) reached = true;
                    }
                    break;
                }
            }
        }
        if (kind == ProblemKind::Roa) res.roa_trials.emplace_back(x0, reached);
        if (i > 20 * n_traj) break;
    }
    res.trajectories = made;
    return res;
}

}  // namespace lierc
