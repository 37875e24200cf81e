#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "lierc/conic.hpp"
#include "lierc/polynomial.hpp"

namespace lierc {

enum class ConeKind { Nonnegative, SecondOrder, RotatedSecondOrder, Psd };

/// Cone block descriptor. `dim` is the vector length; for Psd it is the
/// matrix side (rows of the owning SdrBlock are then svec coordinates).
/// SecondOrder rows are ordered vector-first with the scalar bound last,
/// matching the tuple (u, r). RotatedSecondOrder rows are (u..., v, z) with
/// |u|^2 <= v z.
struct ConeBlock {
    ConeKind kind = ConeKind::Nonnegative;
    int dim = 1;

    int rows() const { return kind == ConeKind::Psd ? dim * (dim + 1) / 2 : dim; }
};

/// One conic constraint A w + G lambda + e in K.
struct SdrBlock {
    ConeBlock cone;
    Eigen::MatrixXd A;  // rows() x L
    Eigen::MatrixXd G;  // rows() x q (may have 0 columns)
    Eigen::VectorXd e;  // rows()
};

/// Intersection of cone-represented sets, optionally with affine equalities
/// B w = theta.
struct SdrSet {
    int L = 0;
    std::vector<SdrBlock> blocks;
    std::optional<std::pair<Eigen::MatrixXd, Eigen::VectorXd>> equalities;

    bool has_lift() const;  // any G columns present

    static SdrSet box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);
    static SdrSet unit_box(int L) {
        return box(Eigen::VectorXd::Constant(L, -1.0), Eigen::VectorXd::Constant(L, 1.0));
    }
    /// Spectahedron {w | A0 + sum_l w_l Al + sum_k lam_k Gk >= 0}.
    static SdrSet spectahedron(const Eigen::MatrixXd& A0, const std::vector<Eigen::MatrixXd>& Al,
                               const std::vector<Eigen::MatrixXd>& Gk = {});
    /// Norm ball {w | exists lam: |A w + G lam + e|_2 <= r}.
    static SdrSet soc_ball(const Eigen::MatrixXd& A, const Eigen::MatrixXd& G,
                           const Eigen::VectorXd& e, double r);
    /// The 3x3 elliptope (unit-diagonal correlation matrices).
    static SdrSet elliptope3();
    static SdrSet singleton(const Eigen::VectorXd& theta);
};

/// {w | gamma w <= h}
struct Polytope {
    Eigen::MatrixXd gamma;
    Eigen::VectorXd h;

    int L() const { return static_cast<int>(gamma.cols()); }
    int faces() const { return static_cast<int>(gamma.rows()); }
    SdrSet to_sdr() const;  // one Nonnegative block, A = -gamma, e = h
};

class SdrError : public std::runtime_error {
  public:
    explicit SdrError(const std::string& w) : std::runtime_error(w) {}
};

/// Reports that a conic subproblem failed numerically, as opposed to a
/// well-posed negative answer.
class SolverFailure : public std::runtime_error {
  public:
    explicit SolverFailure(const std::string& w) : std::runtime_error(w) {}
};

/// Decides w in W within tolerance `tol`; uses direct cone checks when no
/// lifting variables are present and a small conic feasibility solve
/// otherwise.
bool membership(const SdrSet& W, const Eigen::VectorXd& w, double tol = 1e-8);

/// Unit incenter of the cone (deepest interior unit-norm point).
Eigen::VectorXd incenter(const ConeBlock& cone);

struct SlaterResult {
    enum class Kind { SlaterPoint, Singleton, None } kind = Kind::None;
    Eigen::VectorXd w;
    double margin = 0.0;
};

/// Maximizes the minimum cone margin over W. Returns a strict interior
/// witness, detects singleton sets, or reports None.
SlaterResult check_slater(const SdrSet& W);

/// max theta'w over W; returns (argmax, value). Throws SdrError when W is
/// empty or unbounded in the direction theta.
std::pair<Eigen::VectorXd, double> support_point(const SdrSet& W, const Eigen::VectorXd& theta);

/// All extreme points of a small bounded polytope (test oracle scale:
/// L <= 6, faces <= 32), deduplicated within 1e-9.
std::vector<Eigen::VectorXd> vertices(const Polytope& P);

/// Center and radius of the largest inscribed ball.
std::pair<Eigen::VectorXd, double> chebyshev_center(const Polytope& P);

/// Euclidean projection of a point onto W (conic least-distance solve).
Eigen::VectorXd project_onto(const SdrSet& W, const Eigen::VectorXd& point);

/// Basic semialgebraic set: scalar inequalities g_i >= 0, symmetric matrix
/// inequalities M_i >= 0, equalities h_j = 0, over a shared variable list.
struct MatrixPoly {
    std::vector<std::vector<Polynomial>> entries;  // symmetric, full storage
    int side() const { return static_cast<int>(entries.size()); }
    int degree() const;
};

struct BsaSet {
    std::vector<std::string> vars;
    std::vector<Polynomial> inequalities;
    std::vector<MatrixPoly> matrix_inequalities;
    std::vector<Polynomial> equalities;

    bool contains(std::span<const double> point, double tol = 1e-9) const;

    static BsaSet box(const std::vector<std::string>& vars, const Eigen::VectorXd& lo,
                      const Eigen::VectorXd& hi);
    static BsaSet ball(const std::vector<std::string>& vars, const Eigen::VectorXd& center,
                       double radius);
    static BsaSet point(const std::vector<std::string>& vars, const Eigen::VectorXd& value);
    bool is_point(Eigen::VectorXd* value = nullptr) const;
};

/// Appends the constraints of an SdrSet to a conic problem: creates the
/// lifting block (free lambdas) when needed and one slack block per cone,
/// with rows  slack - G lambda = A w + e  for a FIXED w, or, when `w_cols`
/// are given, rows tying the slack to w-columns of the problem.
/// Returns the slack block indices.
std::vector<int> append_sdr_constraints(ConicProblem& prob, const SdrSet& W,
                                        const std::vector<int>& w_cols,
                                        const std::string& id_prefix);

}  // namespace lierc
