// Crossover from an interior-point solution to a vertex.
//
// The interior point is split into variables held at a bound and a "free"
// set P. Exact duplicate columns in P are merged onto the lowest index, then
// null-space directions of A_P are followed (never increasing the objective)
// until the columns of P are linearly independent. The vertex values are
// finally recomputed from A_P x_P = b - A_U u_U.

#include <algorithm>
#include <cmath>
#include <functional>
#include <unordered_map>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseQR>

#include "standard_form.hpp"

namespace hydrovalue::convex::detail {

using Eigen::Index;
using Eigen::VectorXd;

namespace {

enum class Slot : char { lower, upper, free };

using QR = Eigen::SparseQR<SparseMatrix, Eigen::COLAMDOrdering<int>>;

std::size_t column_hash(const SparseMatrix& A, Index j, double cost) {
    std::size_t h = std::hash<double>{}(cost);
    for (SparseMatrix::InnerIterator it(A, j); it; ++it) {
        h ^= std::hash<Index>{}(it.row()) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h ^= std::hash<double>{}(it.value()) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
}

bool same_column(const SparseMatrix& A, Index a, Index b) {
    SparseMatrix::InnerIterator ia(A, a);
    SparseMatrix::InnerIterator ib(A, b);
    for (; ia && ib; ++ia, ++ib) {
        if (ia.row() != ib.row() || ia.value() != ib.value()) return false;
    }
    return !ia && !ib;
}

// Folds each exact duplicate (same column, cost and upper bound) onto the
// lowest index of its group. Cost-neutral and feasibility-preserving.
int merge_duplicates(const StandardForm& sf, std::vector<Slot>& slot, VectorXd& x) {
    std::unordered_map<std::size_t, std::vector<Index>> groups;
    for (Index j = 0; j < sf.cols(); ++j) {
        if (slot[static_cast<std::size_t>(j)] != Slot::free || sf.bounded(j)) continue;
        groups[column_hash(sf.A, j, sf.c[j])].push_back(j);
    }
    int moves = 0;
    for (auto& [key, members] : groups) {
        if (members.size() < 2) continue;
        std::sort(members.begin(), members.end());
        for (std::size_t a = 0; a < members.size(); ++a) {
            const Index keep = members[a];
            if (slot[static_cast<std::size_t>(keep)] != Slot::free) continue;
            for (std::size_t b = a + 1; b < members.size(); ++b) {
                const Index other = members[b];
                if (slot[static_cast<std::size_t>(other)] != Slot::free) continue;
                if (sf.c[keep] != sf.c[other] || !same_column(sf.A, keep, other)) continue;
                x[keep] += x[other];
                x[other] = 0.0;
                slot[static_cast<std::size_t>(other)] = Slot::lower;
                ++moves;
            }
        }
    }
    return moves;
}

SparseMatrix gather_columns(const SparseMatrix& A, const std::vector<Index>& cols) {
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t k = 0; k < cols.size(); ++k) {
        for (SparseMatrix::InnerIterator it(A, cols[k]); it; ++it) {
            triplets.emplace_back(static_cast<int>(it.row()), static_cast<int>(k), it.value());
        }
    }
    SparseMatrix out(A.rows(), static_cast<Index>(cols.size()));
    out.setFromTriplets(triplets.begin(), triplets.end());
    out.makeCompressed();
    return out;
}

} // namespace

CrossoverResult crossover_to_vertex(const StandardForm& sf, const VectorXd& x_ipm,
                                    const VectorXd& z, const VectorXd& s) {
    CrossoverResult result;
    const Index n = sf.cols();
    VectorXd x = x_ipm;
    std::vector<Slot> slot(static_cast<std::size_t>(n), Slot::free);

    // Optimal-partition guess from complementarity: a variable sits at a bound
    // when its distance to that bound is smaller than the bound multiplier.
    for (Index j = 0; j < n; ++j) {
        if (x[j] <= z[j]) {
            slot[static_cast<std::size_t>(j)] = Slot::lower;
            x[j] = 0.0;
        } else if (sf.bounded(j) && sf.u[j] - x[j] <= s[j]) {
            slot[static_cast<std::size_t>(j)] = Slot::upper;
            x[j] = sf.u[j];
        }
    }
    result.moves += merge_duplicates(sf, slot, x);

    const double obj_ipm = sf.c.dot(x_ipm);
    constexpr int kMaxRounds = 500;
    for (int round = 0; round < kMaxRounds; ++round) {
        std::vector<Index> P;
        VectorXd rhs = sf.b;
        for (Index j = 0; j < n; ++j) {
            const auto sl = slot[static_cast<std::size_t>(j)];
            if (sl == Slot::free) P.push_back(j);
            if (sl == Slot::upper) rhs -= sf.u[j] * VectorXd(sf.A.col(j));
        }
        if (P.empty()) {
            if (rhs.cwiseAbs().maxCoeff() > 1e-9 * (1.0 + sf.b.cwiseAbs().maxCoeff())) return result;
            result.x = x;
            result.success = true;
            return result;
        }

        const SparseMatrix AP = gather_columns(sf.A, P);
        QR qr;
        qr.compute(AP);
        if (qr.info() != Eigen::Success) return result;
        const Index rank = qr.rank();
        const Index p = static_cast<Index>(P.size());

        if (rank == p) {
            const VectorXd xp = qr.solve(rhs);
            const double resid = (AP * xp - rhs).cwiseAbs().maxCoeff();
            if (!(resid <= 1e-9 * (1.0 + rhs.cwiseAbs().maxCoeff()))) return result;
            const double tol = 1e-10 * (1.0 + xp.cwiseAbs().maxCoeff());
            bool changed = false;
            for (Index k = 0; k < p; ++k) {
                const Index j = P[static_cast<std::size_t>(k)];
                if (xp[k] < -tol) {
                    slot[static_cast<std::size_t>(j)] = Slot::lower;
                    x[j] = 0.0;
                    changed = true;
                } else if (sf.bounded(j) && xp[k] > sf.u[j] + tol) {
                    slot[static_cast<std::size_t>(j)] = Slot::upper;
                    x[j] = sf.u[j];
                    changed = true;
                }
            }
            if (changed) {
                ++result.moves;
                continue;
            }
            for (Index k = 0; k < p; ++k) {
                const Index j = P[static_cast<std::size_t>(k)];
                double v = std::max(xp[k], 0.0);
                if (sf.bounded(j)) v = std::min(v, sf.u[j]);
                x[j] = v;
            }
            const double obj = sf.c.dot(x);
            if (obj > obj_ipm + 1e-7 * (1.0 + std::abs(obj_ipm))) return result;
            result.x = x;
            result.success = true;
            return result;
        }

        // Columns beyond the numerical rank, dropped highest index first.
        std::vector<Index> dependent;
        const auto& perm = qr.colsPermutation().indices();
        for (Index k = rank; k < p; ++k) dependent.push_back(perm[k]);
        std::sort(dependent.begin(), dependent.end(), std::greater<>());

        for (Index kd : dependent) {
            const Index jd = P[static_cast<std::size_t>(kd)];
            if (slot[static_cast<std::size_t>(jd)] != Slot::free) continue;
            const VectorXd zcomb = qr.solve(VectorXd(AP.col(kd)));
            VectorXd d = -zcomb;
            d[kd] += 1.0;

            double cd = 0.0;
            double cscale = 0.0;
            for (Index k = 0; k < p; ++k) {
                const double term = sf.c[P[static_cast<std::size_t>(k)]] * d[k];
                cd += term;
                cscale += std::abs(term);
            }
            double dir = -1.0;
            if (cd < -1e-12 * (1.0 + cscale)) dir = 1.0;

            Index blocking = -1;
            Slot blocking_slot = Slot::lower;
            double step = kInf;
            for (Index k = 0; k < p; ++k) {
                const Index j = P[static_cast<std::size_t>(k)];
                if (slot[static_cast<std::size_t>(j)] != Slot::free) continue;
                const double delta = dir * d[k];
                if (delta < -1e-14) {
                    const double t = std::max(x[j], 0.0) / -delta;
                    if (t < step) {
                        step = t;
                        blocking = k;
                        blocking_slot = Slot::lower;
                    }
                } else if (delta > 1e-14 && sf.bounded(j)) {
                    const double t = std::max(sf.u[j] - x[j], 0.0) / delta;
                    if (t < step) {
                        step = t;
                        blocking = k;
                        blocking_slot = Slot::upper;
                    }
                }
            }
            if (blocking < 0) return result;

            for (Index k = 0; k < p; ++k) x[P[static_cast<std::size_t>(k)]] += step * dir * d[k];
            const Index jb = P[static_cast<std::size_t>(blocking)];
            slot[static_cast<std::size_t>(jb)] = blocking_slot;
            x[jb] = blocking_slot == Slot::lower ? 0.0 : sf.u[jb];
            ++result.moves;
            if (blocking != kd) break; // basis changed; refactor
        }
    }
    return result;
}

} // namespace hydrovalue::convex::detail
