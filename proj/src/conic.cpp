#include "lierc/conic.hpp"

#include <unistd.h>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lierc {

int svec_len(int side) { return side * (side + 1) / 2; }

int svec_index(int i, int j, int /*side*/) {
    // upper triangle, column-major: (0,0), (0,1), (1,1), (0,2), ...
    return j * (j + 1) / 2 + i;
}

Eigen::VectorXd svec(const Eigen::MatrixXd& A) {
    const int n = static_cast<int>(A.rows());
    Eigen::VectorXd v(svec_len(n));
    const double r2 = std::sqrt(2.0);
    int k = 0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i <= j; ++i, ++k) v[k] = (i == j) ? A(i, j) : r2 * 0.5 * (A(i, j) + A(j, i));
    return v;
}

Eigen::MatrixXd smat(const Eigen::VectorXd& v) {
    const int len = static_cast<int>(v.size());
    int n = static_cast<int>(std::round((std::sqrt(8.0 * len + 1.0) - 1.0) / 2.0));
    Eigen::MatrixXd A(n, n);
    const double inv_r2 = 1.0 / std::sqrt(2.0);
    int k = 0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i <= j; ++i, ++k) {
            const double val = (i == j) ? v[k] : v[k] * inv_r2;
            A(i, j) = val;
            A(j, i) = val;
        }
    return A;
}

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "Optimal";
        case SolveStatus::PrimalInfeasible: return "PrimalInfeasible";
        case SolveStatus::DualInfeasible: return "DualInfeasible";
        case SolveStatus::SlowProgress: return "SlowProgress";
        case SolveStatus::NumericalError: return "NumericalError";
    }
    return "NumericalError";
}

int ConicProblem::cols() const {
    int n = 0;
    for (const auto& b : blocks) n += b.len();
    return n;
}

int ConicProblem::block_offset(int block_index) const {
    int off = 0;
    for (int k = 0; k < block_index; ++k) off += blocks[k].len();
    return off;
}

int ConicProblem::find_block(const std::string& id) const {
    for (std::size_t k = 0; k < block_ids.size(); ++k)
        if (block_ids[k] == id) return static_cast<int>(k);
    return -1;
}

int ConicProblem::add_block(VarCone cone, int dim, const std::string& id) {
    const int off = cols();
    blocks.push_back({cone, dim});
    block_ids.push_back(id);
    c.conservativeResize(cols());
    c.tail(blocks.back().len()).setZero();
    return off;
}

int ConicProblem::add_row(double rhs, const std::string& id) {
    const int r = num_rows++;
    b.conservativeResize(num_rows);
    b[r] = rhs;
    row_ids.push_back(id);
    return r;
}

void ConicProblem::add_entry(int row, int col, double value) {
    if (value != 0.0) entries.emplace_back(row, col, value);
}

Eigen::SparseMatrix<double> ConicProblem::matrix() const {
    Eigen::SparseMatrix<double> A(num_rows, cols());
    A.setFromTriplets(entries.begin(), entries.end());
    return A;
}

Eigen::VectorXd ConicSolution::primal_block(const ConicProblem& p, int block_index) const {
    return x.segment(p.block_offset(block_index), p.blocks[block_index].len());
}

Eigen::MatrixXd ConicSolution::primal_block_matrix(const ConicProblem& p, int block_index) const {
    return smat(primal_block(p, block_index));
}

Eigen::MatrixXd ConicSolution::dual_block_matrix(const ConicProblem& p, int block_index) const {
    return smat(z.segment(p.block_offset(block_index), p.blocks[block_index].len()));
}

// --- SDPA sparse format ------------------------------------------------------
//
// The file stores: min cost'u  s.t.  sum_i u_i F_i - F0 >= 0 blockwise.
// We write our primal as that program's dual: max tr(F0 Y) = -min c'x with
// Y = smat(x) blockwise and tr(F_i Y) = b_i, so F_i carries row i of A and
// F0 = -smat(c). Reading a file back inverts the same mapping, which makes
// import(export(p)) reproduce p up to the SOC/Free lowerings.

namespace {

struct SdpaWriter {
    // one output block per lowered variable block
    struct OutBlock {
        int size;  // negative = diagonal
        // source block and mapping kind
        int src;
        enum Kind { PsdDirect, Diag, ArrowSoc, FreeSplit } kind;
    };
};

}  // namespace

void export_sdpa(const ConicProblem& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out.precision(17);

    struct Lowered {
        SdpaWriter::OutBlock::Kind kind;
        int src;
        int size;
    };
    std::vector<Lowered> lowered;
    for (std::size_t k = 0; k < p.blocks.size(); ++k) {
        const auto& vb = p.blocks[k];
        if (vb.len() == 0) continue;
        switch (vb.cone) {
            case VarCone::Psd:
                lowered.push_back({SdpaWriter::OutBlock::PsdDirect, static_cast<int>(k), vb.dim});
                break;
            case VarCone::Nonneg:
                lowered.push_back({SdpaWriter::OutBlock::Diag, static_cast<int>(k), -vb.dim});
                break;
            case VarCone::Soc:
                lowered.push_back({SdpaWriter::OutBlock::ArrowSoc, static_cast<int>(k), vb.dim});
                break;
            case VarCone::Free:
                lowered.push_back({SdpaWriter::OutBlock::FreeSplit, static_cast<int>(k), -2 * vb.dim});
                break;
        }
    }

    // structural rows pin the arrow shape of lowered SOC blocks
    int extra_rows = 0;
    for (const auto& lb : lowered)
        if (lb.kind == SdpaWriter::OutBlock::ArrowSoc)
            extra_rows += (lb.size - 1) + (lb.size - 1) * (lb.size - 2) / 2;

    out << "\" exported cone program: " << p.num_rows << " rows, " << p.blocks.size()
        << " variable blocks\n";
    out << p.num_rows + extra_rows << "\n";
    out << lowered.size() << "\n";
    for (std::size_t k = 0; k < lowered.size(); ++k)
        out << lowered[k].size << (k + 1 == lowered.size() ? "\n" : " ");
    if (lowered.empty()) out << "\n";
    for (int r = 0; r < p.num_rows + extra_rows; ++r)
        out << (r < p.num_rows ? p.b[r] : 0.0) << (r + 1 == p.num_rows + extra_rows ? "" : " ");
    out << "\n";

    // gather matrix entries per (row, block)
    auto emit = [&](int matno, int blkno, int i, int j, double v) {
        if (v == 0.0) return;
        if (i > j) std::swap(i, j);
        out << matno << " " << blkno << " " << i + 1 << " " << j + 1 << " " << v << "\n";
    };

    const double inv_r2 = 1.0 / std::sqrt(2.0);
    // entry (row in {-1 = objective F0}, col) -> contribution
    auto emit_vector = [&](int matno, const Eigen::VectorXd& coef, double scale) {
        for (std::size_t lb = 0; lb < lowered.size(); ++lb) {
            const auto& L = lowered[lb];
            const auto& vb = p.blocks[L.src];
            const int off = p.block_offset(L.src);
            switch (L.kind) {
                case SdpaWriter::OutBlock::PsdDirect: {
                    int k = 0;
                    for (int j = 0; j < vb.dim; ++j)
                        for (int i = 0; i <= j; ++i, ++k) {
                            const double v = coef[off + k];
                            if (v == 0.0) continue;
                            emit(matno, static_cast<int>(lb) + 1, i, j,
                                 scale * (i == j ? v : v * inv_r2));
                        }
                    break;
                }
                case SdpaWriter::OutBlock::Diag:
                    for (int j = 0; j < vb.dim; ++j)
                        emit(matno, static_cast<int>(lb) + 1, j, j, scale * coef[off + j]);
                    break;
                case SdpaWriter::OutBlock::ArrowSoc: {
                    // Y = [u0, u1'; u1, u0 I]; tr(F Y) with F(0,0)=v0 gives v0*u0,
                    // F(0,k)=vk/2 gives vk*u1k.
                    emit(matno, static_cast<int>(lb) + 1, 0, 0, scale * coef[off]);
                    for (int k = 1; k < vb.dim; ++k)
                        emit(matno, static_cast<int>(lb) + 1, 0, k, scale * coef[off + k] * 0.5);
                    break;
                }
                case SdpaWriter::OutBlock::FreeSplit:
                    for (int j = 0; j < vb.dim; ++j) {
                        emit(matno, static_cast<int>(lb) + 1, j, j, scale * coef[off + j]);
                        emit(matno, static_cast<int>(lb) + 1, vb.dim + j, vb.dim + j,
                             -scale * coef[off + j]);
                    }
                    break;
            }
        }
    };

    emit_vector(0, p.c, -1.0);  // F0 = -smat(c)

    std::vector<Eigen::VectorXd> rows(p.num_rows, Eigen::VectorXd::Zero(p.cols()));
    for (const auto& t : p.entries) rows[t.row()][t.col()] += t.value();
    for (int r = 0; r < p.num_rows; ++r) emit_vector(r + 1, rows[r], 1.0);

    // arrow-structure rows
    int xr = p.num_rows;
    for (std::size_t lb = 0; lb < lowered.size(); ++lb) {
        const auto& L = lowered[lb];
        if (L.kind != SdpaWriter::OutBlock::ArrowSoc) continue;
        const int d = L.size;
        for (int k = 1; k < d; ++k) {
            emit(++xr, static_cast<int>(lb) + 1, k, k, 1.0);
            emit(xr, static_cast<int>(lb) + 1, 0, 0, -1.0);
        }
        for (int i = 1; i < d; ++i)
            for (int j = i + 1; j < d; ++j) emit(++xr, static_cast<int>(lb) + 1, i, j, 0.5);
    }
    if (!out) throw std::runtime_error("write failure on '" + path + "'");
}

SdpaData read_sdpa_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    SdpaData data;
    std::string line;
    auto next_data_line = [&]() -> std::string {
        while (std::getline(in, line)) {
            std::size_t i = 0;
            while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
            if (i == line.size()) continue;
            if (line[i] == '"' || line[i] == '*') continue;
            for (auto& ch : line)
                if (ch == ',' || ch == '(' || ch == ')' || ch == '{' || ch == '}') ch = ' ';
            return line;
        }
        throw std::runtime_error("malformed SDPA file: unexpected end of '" + path + "'");
    };

    data.m = std::stoi(next_data_line());
    const int nblocks = std::stoi(next_data_line());
    if (nblocks > 0) {
        std::istringstream bs(next_data_line());
        data.block_sizes.resize(nblocks);
        for (int k = 0; k < nblocks; ++k)
            if (!(bs >> data.block_sizes[k]))
                throw std::runtime_error("malformed SDPA block size line");
    }
    data.cost.resize(data.m);
    {
        std::istringstream cs(data.m > 0 ? next_data_line() : std::string());
        for (int k = 0; k < data.m; ++k)
            if (!(cs >> data.cost[k])) throw std::runtime_error("malformed SDPA cost line");
    }
    while (std::getline(in, line)) {
        std::size_t i = 0;
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i == line.size() || line[i] == '"' || line[i] == '*') continue;
        for (auto& ch : line)
            if (ch == ',' || ch == '(' || ch == ')' || ch == '{' || ch == '}') ch = ' ';
        std::istringstream es(line);
        SdpaData::Entry e;
        if (!(es >> e.matno >> e.blkno >> e.i >> e.j >> e.value))
            throw std::runtime_error("malformed SDPA entry line: " + line);
        data.entries.push_back(e);
    }
    return data;
}

ConicProblem import_sdpa(const std::string& path) {
    SdpaData d = read_sdpa_file(path);
    ConicProblem p;

    // variable blocks: Y_b per file block; the file's decision vector u is the
    // dual of our rows, so rows are tr(F_i Y) = cost_i and c = -svec(F0).
    std::vector<int> offsets;
    for (std::size_t k = 0; k < d.block_sizes.size(); ++k) {
        const int sz = d.block_sizes[k];
        if (sz >= 0)
            offsets.push_back(p.add_block(VarCone::Psd, sz, "sdpa_block_" + std::to_string(k + 1)));
        else
            offsets.push_back(
                p.add_block(VarCone::Nonneg, -sz, "sdpa_block_" + std::to_string(k + 1)));
    }
    p.c = Eigen::VectorXd::Zero(p.cols());
    for (int r = 0; r < d.m; ++r) p.add_row(d.cost[r], "sdpa_row_" + std::to_string(r + 1));

    const double r2 = std::sqrt(2.0);
    for (const auto& e : d.entries) {
        const int bk = e.blkno - 1;
        if (bk < 0 || bk >= static_cast<int>(d.block_sizes.size()))
            throw std::runtime_error("SDPA entry references invalid block");
        const int sz = d.block_sizes[bk];
        int col;
        double scale;
        if (sz >= 0) {
            int i = e.i - 1, j = e.j - 1;
            if (i > j) std::swap(i, j);
            col = offsets[bk] + svec_index(i, j, sz);
            scale = (i == j) ? 1.0 : r2;  // tr(F Y) on off-diagonals
        } else {
            if (e.i != e.j) throw std::runtime_error("off-diagonal entry in diagonal SDPA block");
            col = offsets[bk] + e.i - 1;
            scale = 1.0;
        }
        if (e.matno == 0)
            p.c[col] += -e.value * scale;  // objective: min -tr(F0 Y)
        else
            p.add_entry(e.matno - 1, col, e.value * scale);
    }
    return p;
}

// --- backend dispatch ---------------------------------------------------------

std::string Backend::external_path() const {
    if (spec.rfind("sdpa:", 0) == 0) return spec.substr(5);
    return "";
}

Backend Backend::from_spec(const std::string& spec) {
    Backend b;
    b.spec = spec.empty() ? "embedded" : spec;
    if (!b.is_embedded() && b.external_path().empty())
        throw std::runtime_error("unknown solver backend '" + spec + "' (use embedded or sdpa:<path>)");
    return b;
}

namespace {

double parse_external_objective(const std::string& text) {
    // accepted: "objective = <v>" (this project), "objValPrimal = <v>" (sdpa
    // family, value is -objective under our export convention)
    auto find_value = [&](const std::string& key, double& out) {
        auto pos = text.find(key);
        if (pos == std::string::npos) return false;
        pos += key.size();
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '=' || text[pos] == ':')) ++pos;
        try {
            out = std::stod(text.substr(pos));
            return true;
        } catch (...) {
            return false;
        }
    };
    double v;
    if (find_value("objective =", v)) return v;
    if (find_value("objValPrimal =", v)) return -v;
    if (find_value("Primal objective value:", v)) return -v;
    throw std::runtime_error("could not locate an objective value in external solver output");
}

}  // namespace

ConicSolution solve(const ConicProblem& p, const SolverOptions& opts, const Backend& backend) {
    if (backend.is_embedded()) return solve_embedded(p, opts);

    const std::string stem = std::string("/tmp/lierc_bridge_") + std::to_string(::getpid()) + "_" +
                             std::to_string(reinterpret_cast<std::uintptr_t>(&p) & 0xffff);
    const std::string prob_path = stem + ".dat-s";
    const std::string out_path = stem + ".out";
    const std::string log_path = stem + ".log";
    export_sdpa(p, prob_path);

    const std::string cmd =
        backend.external_path() + " " + prob_path + " " + out_path + " > " + log_path + " 2>&1";
    const int rc = std::system(cmd.c_str());

    std::string text;
    for (const auto& f : {out_path, log_path}) {
        std::ifstream in(f);
        if (in) {
            std::ostringstream ss;
            ss << in.rdbuf();
            text += ss.str();
        }
    }
    std::remove(prob_path.c_str());
    std::remove(out_path.c_str());
    std::remove(log_path.c_str());

    ConicSolution sol;
    if (rc != 0 && text.empty())
        throw std::runtime_error("external solver '" + backend.external_path() + "' failed");
    sol.objective = parse_external_objective(text);
    sol.status = SolveStatus::Optimal;
    sol.x = Eigen::VectorXd::Zero(p.cols());
    sol.y = Eigen::VectorXd::Zero(p.num_rows);
    sol.z = Eigen::VectorXd::Zero(p.cols());
    return sol;
}

}  // namespace lierc
