#pragma once

#include <optional>
#include <string>

#include "calib/matrix.hpp"

namespace calib {

enum class LossKind { ZeroOne, BlockZeroOne, Hamming, Mixed, Custom };

struct BlockStructure {
    std::vector<std::size_t> sizes;
    std::vector<std::size_t> label_to_block;
    std::vector<std::size_t> block_first_label;

    std::size_t k() const { return label_to_block.size(); }
    std::size_t block_count() const { return sizes.size(); }
};

/// A k x k nonnegative task loss. Hamming may be kept implicit (only the bit
/// count stored); everything else carries a dense matrix.
struct TaskLoss {
    LossKind kind = LossKind::Custom;
    std::size_t k = 0;
    std::optional<Matrix> dense;
    std::optional<BlockStructure> blocks;
    std::optional<unsigned> t;       // Hamming bit count
    std::optional<double> eta;       // Mixed weight
    double l_max = 0.0;

    bool has_dense() const { return dense.has_value(); }
    /// Entry L(i, j); works for the implicit Hamming representation too.
    double entry(std::size_t i, std::size_t j) const;
    /// Dense matrix, materializing implicit Hamming (capacity-guarded).
    const Matrix& require_dense() const;
};

enum class SubspaceKind { Full, BlockIndicator, HammingBasis, Custom };
enum class SubspaceMode { Unconstrained, Tight };

struct ScoreSubspace {
    SubspaceKind kind = SubspaceKind::Custom;
    Matrix f;                        // k x r
    std::size_t k = 0;
    std::size_t r = 0;
    SvdFactors factors;
    std::optional<Matrix> projector; // materialized when k is small
    std::vector<std::size_t> predictable;
    bool predictable_approximate = false;

    const Matrix& require_projector() const;
    /// P v without requiring the dense projector.
    Vector project(const Vector& v) const;
};

/// Conditional label distribution: dense simplex vector, or per-bit
/// marginals for the Hamming label space.
struct CondDist {
    std::optional<Vector> dense;
    std::optional<Vector> marginals; // marginals[t] = P(bit t = 1)

    static CondDist from_dense(Vector q);
    static CondDist from_marginals(Vector m);
    std::size_t k() const;
    /// Dense probability vector (materializes factored form).
    Vector to_dense() const;
};

TaskLoss zero_one_loss(std::size_t k);
std::pair<TaskLoss, BlockStructure> block_zero_one_loss(const std::vector<std::size_t>& sizes);
TaskLoss hamming_loss(unsigned t, bool materialize);
TaskLoss mixed_loss(const std::vector<std::size_t>& sizes, double eta);
TaskLoss custom_loss_from_csv(const std::string& path);

/// Component c is sum_y L(c, y) q_y. Implicit Hamming with factored q is
/// computed from per-bit marginals without materializing the matrix.
Vector expected_loss_vector(const TaskLoss& loss, const CondDist& q);

/// Symmetric, zero diagonal, nonnegative, and triangle inequality over all
/// label triples. Built-in kinds short-circuit to true; the O(k^3) scan is
/// guarded by k <= 256.
bool is_pseudometric(const TaskLoss& loss);

ScoreSubspace score_subspace(const TaskLoss& loss, SubspaceMode mode);

/// Subspace spanned by an arbitrary F (predictable set estimated by
/// sampling and flagged approximate).
ScoreSubspace custom_subspace(const Matrix& f, unsigned seed = 1234);

} // namespace calib
