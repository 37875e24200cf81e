#pragma once

#include <string>
#include <vector>

#include "lierc/simulate.hpp"
#include "lierc/sos.hpp"

namespace lierc {

/// Assembled hierarchy step plus everything needed to read certificates and
/// dual data back out of a solution.
struct BuiltProgram {
    ConicProblem problem;
    std::vector<GramBlockInfo> grams;
    std::vector<RowGroup> row_groups;
    UnknownPoly v;
    UnknownPoly phi;       // distance/reach/roa only (empty basis otherwise)
    int gamma_col = -1;    // peak/distance only
    int largest_block = 0;
    std::vector<std::string> tx_vars;
    double T = 1.0;        // time scale to undo on extracted certificates
    int L = 0;
    ProblemKind kind = ProblemKind::Peak;
};

/// Lebesgue moment of the monomial x^alpha over the region.
double region_moment(const StateRegion& X, const MultiIndex& alpha);

BuiltProgram build_peak(const SystemSpec& spec, const Polynomial& p, const SosTemplate& tmpl);
/// Cross-validation path for polytopic W: one Lie constraint per vertex of P
/// instead of the multiplier reformulation. Small instances only.
BuiltProgram build_peak_vertex(const SystemSpec& spec, const Polynomial& p,
                               const SosTemplate& tmpl, const Polytope& P);
/// Distance to the unsafe set Xu under the squared Euclidean metric; the
/// reported bound is on the squared distance (callers take the square root).
BuiltProgram build_distance(const SystemSpec& spec, const SosTemplate& tmpl);
BuiltProgram build_reach(const SystemSpec& spec, const SosTemplate& tmpl);
BuiltProgram build_roa(const SystemSpec& spec, const SosTemplate& tmpl);

struct DegreeOutcome {
    int degree = 0;
    SolveStatus status = SolveStatus::NumericalError;
    double bound = 0.0;     // certified value in the problem's natural units
    double seconds = 0.0;
    int iterations = 0;
    int largest_block = 0;
    Polynomial v;           // certificate in unscaled time
    Polynomial phi;
    double gamma = 0.0;
};

struct BoundReport {
    ProblemKind kind = ProblemKind::Peak;
    std::vector<DegreeOutcome> outcomes;
    bool has_empirical = false;
    double empirical = 0.0;
    int empirical_trajectories = 0;
    bool monotone = true;  // audited across Optimal/SlowProgress degrees

    std::vector<double> bounds() const {
        std::vector<double> b;
        for (const auto& o : outcomes) b.push_back(o.bound);
        return b;
    }
};

struct SweepOptions {
    SolverOptions solver;
    Backend backend;
    bool cross_check = false;
    int n_traj = 120;
    std::uint64_t seed = 2024;
    SosTemplate base_template;  // degree field overwritten per sweep entry
};

BoundReport sweep(const SystemSpec& spec, ProblemKind kind, const Polynomial* objective,
                  const std::vector<int>& degrees, const SweepOptions& opts = {});

/// Bound + certificate extraction for a solved program.
DegreeOutcome extract_outcome(const BuiltProgram& built, const ConicSolution& sol, int degree);

}  // namespace lierc
