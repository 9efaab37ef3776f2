#include "calib/losses.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace calib {

namespace {

constexpr unsigned kMaxMaterializeBits = 14;

BlockStructure make_blocks(const std::vector<std::size_t>& sizes) {
    BlockStructure bs;
    bs.sizes = sizes;
    for (std::size_t v = 0; v < sizes.size(); ++v) {
        if (sizes[v] == 0) throw InvalidInputError("block sizes must be positive");
        bs.block_first_label.push_back(bs.label_to_block.size());
        for (std::size_t i = 0; i < sizes[v]; ++i) bs.label_to_block.push_back(v);
    }
    return bs;
}

Matrix hamming_dense(unsigned t) {
    const std::size_t k = std::size_t{1} << t;
    Matrix m(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            m(i, j) = static_cast<double>(std::popcount(i ^ j)) / t;
    return m;
}

std::size_t argmax_smallest_index(const Vector& f) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < f.size(); ++i)
        if (f[i] > f[best]) best = i;
    return best;
}

} // namespace

double TaskLoss::entry(std::size_t i, std::size_t j) const {
    if (dense) return (*dense)(i, j);
    if (kind == LossKind::Hamming && t)
        return static_cast<double>(std::popcount(i ^ j)) / *t;
    throw InvalidInputError("loss has no dense representation");
}

const Matrix& TaskLoss::require_dense() const {
    if (dense) return *dense;
    throw CapacityError("loss matrix is implicit; rebuild with materialization enabled");
}

CondDist CondDist::from_dense(Vector q) {
    double sum = 0.0;
    for (double v : q) {
        if (!(v >= -1e-12) || !std::isfinite(v))
            throw InvalidInputError("distribution entries must be nonnegative");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw InvalidInputError("distribution entries must sum to 1");
    for (double& v : q) v = std::max(v, 0.0);
    CondDist d;
    d.dense = std::move(q);
    return d;
}

CondDist CondDist::from_marginals(Vector m) {
    if (m.empty() || m.size() > 24)
        throw InvalidInputError("marginal count out of range");
    for (double v : m)
        if (!(v >= 0.0 && v <= 1.0))
            throw InvalidInputError("marginals must lie in [0,1]");
    CondDist d;
    d.marginals = std::move(m);
    return d;
}

std::size_t CondDist::k() const {
    if (dense) return dense->size();
    return std::size_t{1} << marginals->size();
}

Vector CondDist::to_dense() const {
    if (dense) return *dense;
    const auto& m = *marginals;
    if (m.size() > 20) throw CapacityError("factored distribution too large to materialize");
    const std::size_t n = std::size_t{1} << m.size();
    Vector q(n, 1.0);
    for (std::size_t y = 0; y < n; ++y)
        for (std::size_t bit = 0; bit < m.size(); ++bit)
            q[y] *= ((y >> bit) & 1) ? m[bit] : 1.0 - m[bit];
    return q;
}

TaskLoss zero_one_loss(std::size_t k) {
    if (k < 2) throw InvalidInputError("zero_one_loss needs k >= 2");
    TaskLoss l;
    l.kind = LossKind::ZeroOne;
    l.k = k;
    Matrix m(k, k, 1.0);
    for (std::size_t i = 0; i < k; ++i) m(i, i) = 0.0;
    l.dense = std::move(m);
    l.l_max = 1.0;
    return l;
}

std::pair<TaskLoss, BlockStructure> block_zero_one_loss(const std::vector<std::size_t>& sizes) {
    if (sizes.size() < 2) throw InvalidInputError("block_zero_one_loss needs at least 2 blocks");
    BlockStructure bs = make_blocks(sizes);
    const std::size_t k = bs.k();
    TaskLoss l;
    l.kind = LossKind::BlockZeroOne;
    l.k = k;
    Matrix m(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            m(i, j) = bs.label_to_block[i] == bs.label_to_block[j] ? 0.0 : 1.0;
    l.dense = std::move(m);
    l.blocks = bs;
    l.l_max = 1.0;
    return {std::move(l), bs};
}

TaskLoss hamming_loss(unsigned t, bool materialize) {
    if (t < 1) throw InvalidInputError("hamming_loss needs t >= 1");
    if (materialize && t > kMaxMaterializeBits)
        throw CapacityError("hamming_loss: dense materialization limited to t <= 14");
    TaskLoss l;
    l.kind = LossKind::Hamming;
    l.t = t;
    l.k = std::size_t{1} << t;
    if (materialize) l.dense = hamming_dense(t);
    l.l_max = 1.0;
    return l;
}

TaskLoss mixed_loss(const std::vector<std::size_t>& sizes, double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidInputError("mixed_loss: eta must be in [0,1]");
    auto [block, bs] = block_zero_one_loss(sizes);
    const std::size_t k = bs.k();
    TaskLoss l;
    l.kind = LossKind::Mixed;
    l.k = k;
    Matrix m(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            m(i, j) = eta * (i != j ? 1.0 : 0.0) + (1.0 - eta) * (*block.dense)(i, j);
    l.dense = std::move(m);
    l.blocks = bs;
    l.eta = eta;
    l.l_max = 1.0;
    return l;
}

TaskLoss custom_loss_from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInputError("cannot open loss file: " + path);
    std::vector<Vector> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Vector row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw InvalidInputError("loss file " + path + ": bad number at row " +
                                        std::to_string(rows.size()) + ", column " +
                                        std::to_string(row.size()));
            }
        }
        rows.push_back(std::move(row));
    }
    const std::size_t k = rows.size();
    if (k < 2) throw InvalidInputError("loss file must have at least 2 rows");
    Matrix m(k, k);
    double lmax = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        if (rows[i].size() != k)
            throw InvalidInputError("loss file is not square at row " + std::to_string(i));
        for (std::size_t j = 0; j < k; ++j) {
            const double v = rows[i][j];
            if (!std::isfinite(v) || v < 0.0)
                throw InvalidInputError("loss file: invalid entry at row " + std::to_string(i) +
                                        ", column " + std::to_string(j));
            m(i, j) = v;
            lmax = std::max(lmax, v);
        }
    }
    TaskLoss l;
    l.kind = LossKind::Custom;
    l.k = k;
    l.dense = std::move(m);
    l.l_max = lmax;
    return l;
}

Vector expected_loss_vector(const TaskLoss& loss, const CondDist& q) {
    if (q.k() != loss.k) throw InvalidInputError("expected_loss_vector: dimension mismatch");
    if (q.marginals && loss.kind == LossKind::Hamming) {
        const auto& m = *q.marginals;
        const unsigned t = *loss.t;
        if (m.size() != t) throw InvalidInputError("expected_loss_vector: marginal count mismatch");
        Vector out(loss.k);
        for (std::size_t y = 0; y < loss.k; ++y) {
            double agree = 0.0;
            for (unsigned bit = 0; bit < t; ++bit)
                agree += ((y >> bit) & 1) ? m[bit] : 1.0 - m[bit];
            out[y] = 1.0 - agree / t;
        }
        return out;
    }
    return loss.require_dense() * q.to_dense();
}

bool is_pseudometric(const TaskLoss& loss) {
    switch (loss.kind) {
        case LossKind::ZeroOne:
        case LossKind::BlockZeroOne:
        case LossKind::Hamming:
        case LossKind::Mixed:
            return true;
        case LossKind::Custom:
            break;
    }
    if (loss.k > 256) throw CapacityError("is_pseudometric: k > 256");
    const Matrix& m = loss.require_dense();
    const std::size_t k = loss.k;
    for (std::size_t i = 0; i < k; ++i) {
        if (m(i, i) != 0.0) return false;
        for (std::size_t j = 0; j < k; ++j) {
            if (m(i, j) < 0.0) return false;
            if (std::abs(m(i, j) - m(j, i)) > 1e-12) return false;
        }
    }
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            for (std::size_t l = 0; l < k; ++l)
                if (m(i, l) > m(i, j) + m(j, l) + 1e-12) return false;
    return true;
}

const Matrix& ScoreSubspace::require_projector() const {
    if (projector) return *projector;
    throw CapacityError("subspace projector not materialized at this size");
}

Vector ScoreSubspace::project(const Vector& v) const {
    if (projector) return *projector * v;
    const double thresh = 1e-9 * factors.sigma_max();
    Vector out(k, 0.0);
    for (std::size_t l = 0; l < factors.singular_values.size(); ++l) {
        if (factors.singular_values[l] <= thresh) continue;
        double c = 0.0;
        for (std::size_t i = 0; i < k; ++i) c += factors.u(i, l) * v[i];
        for (std::size_t i = 0; i < k; ++i) out[i] += c * factors.u(i, l);
    }
    return out;
}

namespace {

ScoreSubspace finish_subspace(ScoreSubspace s) {
    s.k = s.f.rows();
    s.r = s.f.cols();
    s.factors = svd(s.f);
    if (s.k <= 2048) s.projector = orthogonal_projector(s.f);
    return s;
}

} // namespace

ScoreSubspace score_subspace(const TaskLoss& loss, SubspaceMode mode) {
    const std::size_t k = loss.k;
    if (mode == SubspaceMode::Unconstrained) {
        if (k > 2048) throw CapacityError("unconstrained subspace too large to materialize");
        ScoreSubspace s;
        s.kind = SubspaceKind::Full;
        s.f = Matrix::identity(k);
        for (std::size_t i = 0; i < k; ++i) s.predictable.push_back(i);
        return finish_subspace(std::move(s));
    }
    switch (loss.kind) {
        case LossKind::ZeroOne: {
            // colspace(L_01) is all of R^k.
            return score_subspace(loss, SubspaceMode::Unconstrained);
        }
        case LossKind::BlockZeroOne:
        case LossKind::Mixed: {
            const BlockStructure& bs = *loss.blocks;
            ScoreSubspace s;
            s.kind = SubspaceKind::BlockIndicator;
            s.f = Matrix(k, bs.block_count(), 0.0);
            for (std::size_t i = 0; i < k; ++i) s.f(i, bs.label_to_block[i]) = 1.0;
            s.predictable = bs.block_first_label;
            return finish_subspace(std::move(s));
        }
        case LossKind::Hamming: {
            const unsigned t = *loss.t;
            if (t > kMaxMaterializeBits)
                throw CapacityError("Hamming basis too large to materialize");
            ScoreSubspace s;
            s.kind = SubspaceKind::HammingBasis;
            s.f = Matrix(k, t + 1, 0.0);
            for (std::size_t i = 0; i < k; ++i) {
                s.f(i, 0) = 0.5;
                for (unsigned bit = 0; bit < t; ++bit)
                    if ((i >> bit) & 1) s.f(i, bit + 1) = 1.0;
            }
            for (std::size_t i = 0; i < k; ++i) s.predictable.push_back(i);
            return finish_subspace(std::move(s));
        }
        case LossKind::Custom:
            throw UnsupportedError("no tight subspace for custom losses");
    }
    throw UnsupportedError("unknown loss kind");
}

ScoreSubspace custom_subspace(const Matrix& f, unsigned seed) {
    ScoreSubspace s;
    s.kind = SubspaceKind::Custom;
    s.f = f;
    s = finish_subspace(std::move(s));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<bool> seen(s.k, false);
    for (int draw = 0; draw < 10000; ++draw) {
        Vector theta(s.r);
        for (double& v : theta) v = gauss(rng);
        seen[argmax_smallest_index(s.f * theta)] = true;
    }
    for (std::size_t i = 0; i < s.k; ++i)
        if (seen[i]) s.predictable.push_back(i);
    s.predictable_approximate = true;
    return s;
}

} // namespace calib
