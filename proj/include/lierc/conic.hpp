#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <optional>
#include <string>
#include <vector>

namespace lierc {

enum class VarCone { Free, Nonneg, Soc, Psd };

/// Variable cone block. `dim` is the vector length for Free/Nonneg/Soc and
/// the matrix side for Psd (stored as a scaled upper-triangle vectorization
/// of length dim*(dim+1)/2).
struct VarBlock {
    VarCone cone = VarCone::Free;
    int dim = 0;

    int len() const { return cone == VarCone::Psd ? dim * (dim + 1) / 2 : dim; }
};

/// svec convention: upper triangle, column-major, off-diagonal entries scaled
/// by sqrt(2), so that svec(A).dot(svec(B)) == trace(A*B).
Eigen::VectorXd svec(const Eigen::MatrixXd& A);
Eigen::MatrixXd smat(const Eigen::VectorXd& v);
int svec_len(int side);
int svec_index(int i, int j, int side);  // i <= j

enum class SolveStatus { Optimal, PrimalInfeasible, DualInfeasible, SlowProgress, NumericalError };

std::string to_string(SolveStatus s);

struct SolverOptions {
    double tol_gap = 1e-8;
    double tol_feas = 1e-8;
    int max_iters = 200;
    bool verbose = false;
};

/// Standard-form cone program: minimize c'x subject to A x = b with x in the
/// product of the declared variable blocks.
struct ConicProblem {
    std::vector<VarBlock> blocks;
    std::vector<Eigen::Triplet<double>> entries;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
    int num_rows = 0;

    /// Provenance: one identifier per block so certificate recovery can find
    /// the dual data belonging to a constraint.
    std::vector<std::string> block_ids;
    std::vector<std::string> row_ids;

    int cols() const;
    int block_offset(int block_index) const;
    int find_block(const std::string& id) const;  // -1 when absent

    /// Appends a block and returns its column offset.
    int add_block(VarCone cone, int dim, const std::string& id = "");
    /// Appends an empty row and returns its index.
    int add_row(double rhs, const std::string& id = "");
    void add_entry(int row, int col, double value);

    Eigen::SparseMatrix<double> matrix() const;
};

struct ConicSolution {
    SolveStatus status = SolveStatus::NumericalError;
    Eigen::VectorXd x;  // primal, cols()
    Eigen::VectorXd y;  // dual of equality rows
    Eigen::VectorXd z;  // dual slack, cols() (zero on Free blocks)
    double objective = 0.0;
    double dual_objective = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double gap = 0.0;
    int iterations = 0;
    double solve_seconds = 0.0;

    bool usable() const {
        return status == SolveStatus::Optimal || status == SolveStatus::SlowProgress;
    }

    Eigen::MatrixXd primal_block_matrix(const ConicProblem& p, int block_index) const;
    Eigen::MatrixXd dual_block_matrix(const ConicProblem& p, int block_index) const;
    Eigen::VectorXd primal_block(const ConicProblem& p, int block_index) const;
};

/// Embedded homogeneous self-dual interior-point solve.
ConicSolution solve_embedded(const ConicProblem& p, const SolverOptions& opts = {});

/// Writes the problem in SDPA sparse format (.dat-s). SOC blocks are lowered
/// to PSD via the arrow-matrix embedding; Free blocks become paired sign
/// constraints on the dual. Throws on I/O failure.
void export_sdpa(const ConicProblem& p, const std::string& path);

/// Reads an SDPA sparse file back into standard form (with a Free block for
/// the SDPA decision vector and one slack block per SDPA block).
ConicProblem import_sdpa(const std::string& path);

/// min c'x s.t. X(x) = F0 + sum x_i F_i >= 0 blockwise; the natural reading
/// of an SDPA file, kept so the two solve paths can be cross-checked.
struct SdpaData {
    int m = 0;
    std::vector<int> block_sizes;  // negative = diagonal block
    Eigen::VectorXd cost;
    // entries[k] = (matno, blkno, i, j, value), 1-based as in the file, matno 0 = F0
    struct Entry {
        int matno, blkno, i, j;
        double value;
    };
    std::vector<Entry> entries;
};
SdpaData read_sdpa_file(const std::string& path);

/// Solver backend selection: "embedded" or "sdpa:<path-to-binary>". The
/// external binary is invoked as `<binary> <problem.dat-s> <output>` and must
/// print a line `objValValues? ...`; both sdpa-family output and this
/// project's own `solve-sdpa` subcommand output are accepted.
struct Backend {
    std::string spec = "embedded";
    bool is_embedded() const { return spec == "embedded" || spec.empty(); }
    std::string external_path() const;
    static Backend from_spec(const std::string& spec);
};

ConicSolution solve(const ConicProblem& p, const SolverOptions& opts = {},
                    const Backend& backend = {});

}  // namespace lierc
