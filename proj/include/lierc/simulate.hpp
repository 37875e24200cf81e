#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "lierc/polynomial.hpp"
#include "lierc/sdr_set.hpp"

namespace lierc {

enum class ProblemKind { Peak, Distance, Reach, Roa };

/// Shape of the state region X; reach/roa objectives need analytic moments,
/// so only boxes and balls are supported there.
struct StateRegion {
    bool is_ball = false;
    Eigen::VectorXd lo, hi;      // box data (also the bounding box of a ball)
    Eigen::VectorXd center;      // ball data
    double radius = 0.0;

    static StateRegion box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);
    static StateRegion ball(const Eigen::VectorXd& center, double radius);
    BsaSet descriptors(const std::vector<std::string>& vars) const;
};

/// Input-affine system with its analysis sets.
struct SystemSpec {
    int n = 0;
    double T = 1.0;
    std::vector<std::string> state_vars;  // x1..xn
    std::vector<std::string> tx_vars;     // t, x1..xn
    PolynomialVector f0;                  // over tx_vars
    std::vector<PolynomialVector> channels;
    StateRegion X;
    BsaSet X0;       // over state_vars
    std::optional<BsaSet> XT;
    std::optional<BsaSet> Xu;
    std::optional<StateRegion> Xu_box;  // sampling region for the unsafe set
    SdrSet W;

    int L() const { return static_cast<int>(channels.size()); }
    Eigen::VectorXd dynamics(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& w) const;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
    std::vector<Eigen::VectorXd> inputs;
    bool exited = false;  // left X before the horizon (integration stops there)
};

/// Uniform-ish samples of a bounded polytope by hit-and-run from the
/// Chebyshev center. Deterministic under the seed; every sample is a member.
std::vector<Eigen::VectorXd> hit_and_run(const Polytope& P, int count, std::uint64_t seed);

/// argmax of theta'w over W.
Eigen::VectorXd extreme_input(const SdrSet& W, const Eigen::VectorXd& theta);

/// Draws admissible inputs: hit-and-run for polytopic W, random-direction
/// extreme points mixed toward a Slater interior point otherwise.
class InputSampler {
  public:
    InputSampler(const SdrSet& W, std::uint64_t seed, int pool = 512);
    Eigen::VectorXd draw(std::mt19937_64& rng) const;
    const SdrSet& set() const { return W_; }

  private:
    SdrSet W_;
    std::vector<Eigen::VectorXd> pool_;
    Eigen::VectorXd interior_;
    bool mix_mode_ = false;
};

struct IntegrateOptions {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double switch_period = 0.0;  // 0: T/50
    double max_step_factor = 0.05;
};

/// Adaptive Dormand-Prince integration with piecewise-constant inputs and an
/// exit stop on the boundary of X. Throws on step-size underflow.
Trajectory integrate(const SystemSpec& spec, const Eigen::VectorXd& x0,
                     const std::vector<Eigen::VectorXd>& w_schedule,
                     const IntegrateOptions& opts = {});

struct EmpiricalResult {
    double value = 0.0;  // max p (peak) or min distance (distance)
    int trajectories = 0;
    int failures = 0;
    std::vector<Eigen::VectorXd> endpoints;                   // reach
    std::vector<std::pair<Eigen::VectorXd, bool>> roa_trials;  // (x0, reached XT)
    std::vector<Trajectory> kept;                              // small sample for dumps
};

/// Simulates `n_traj` admissible trajectories and reports the empirical
/// companion value the certified bound must dominate.
EmpiricalResult empirical_extremum(const SystemSpec& spec, ProblemKind kind,
                                   const Polynomial* objective, int n_traj, std::uint64_t seed,
                                   const IntegrateOptions& opts = {});

/// Uniform rejection samples of a semialgebraic set inside a bounding box.
std::vector<Eigen::VectorXd> sample_bsa(const BsaSet& set, const Eigen::VectorXd& lo,
                                        const Eigen::VectorXd& hi, int count,
                                        std::uint64_t seed);

}  // namespace lierc
