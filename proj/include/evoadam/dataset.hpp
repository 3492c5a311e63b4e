#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "evoadam/objectives.hpp"
#include "evoadam/rng.hpp"
#include "evoadam/tensor.hpp"

namespace evoadam {

// Synthetic 1-D super-resolution data: HR signals are seeded piecewise
// constant (4-8 segments, levels in [-1,1]) plus N(0, 0.01^2) noise; LR is
// a block-mean decimation. Split 80/10/10 by sample order.
struct ToySrDataset {
    Tensor hr;  // count x d_hr
    Tensor lr;  // count x d_lr
    std::size_t train_count = 0;
    std::size_t val_count = 0;
    std::size_t eval_count = 0;

    std::size_t count() const { return hr.rows(); }
    std::size_t d_hr() const { return hr.cols(); }
    std::size_t d_lr() const { return lr.cols(); }

    enum class Part { train, validation, eval };

    std::pair<std::size_t, std::size_t> part_range(Part p) const {
        switch (p) {
            case Part::train: return {0, train_count};
            case Part::validation: return {train_count, train_count + val_count};
            case Part::eval: return {train_count + val_count, count()};
        }
        return {0, 0};
    }

    EvalBatch gather(const std::vector<std::size_t>& indices) const {
        Tensor in = Tensor::zeros({indices.size(), d_lr()});
        Tensor tg = Tensor::zeros({indices.size(), d_hr()});
        for (std::size_t r = 0; r < indices.size(); ++r) {
            for (std::size_t c = 0; c < d_lr(); ++c) in.at(r, c) = lr.at(indices[r], c);
            for (std::size_t c = 0; c < d_hr(); ++c) tg.at(r, c) = hr.at(indices[r], c);
        }
        return EvalBatch{std::move(in), std::move(tg)};
    }

    // The whole partition as one batch, in sample order.
    EvalBatch part_batch(Part p) const {
        auto [lo, hi] = part_range(p);
        std::vector<std::size_t> idx;
        for (std::size_t i = lo; i < hi; ++i) idx.push_back(i);
        return gather(idx);
    }

    // Seeded minibatch from a partition (with replacement).
    EvalBatch minibatch(Part p, std::size_t batch_size, Rng& rng) const {
        auto [lo, hi] = part_range(p);
        const std::size_t n = hi - lo;
        std::vector<std::size_t> idx(batch_size);
        for (std::size_t i = 0; i < batch_size; ++i)
            idx[i] = lo + static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
        return gather(idx);
    }
};

inline ToySrDataset make_toy_sr_dataset(std::uint64_t seed, std::size_t count,
                                        std::size_t d_hr = 32, std::size_t factor = 4) {
    if (count < 1) throw std::invalid_argument("toy sr dataset: count must be >= 1");
    if (d_hr == 0 || factor == 0 || d_hr % factor != 0)
        throw std::invalid_argument("toy sr dataset: d_hr must be divisible by factor");
    const std::size_t d_lr = d_hr / factor;
    ToySrDataset ds;
    ds.hr = Tensor::zeros({count, d_hr});
    ds.lr = Tensor::zeros({count, d_lr});
    Rng rng(stream_seed(seed, 0xDA7A));
    for (std::size_t s = 0; s < count; ++s) {
        const std::size_t segments = 4 + static_cast<std::size_t>(rng.uniform() * 5.0);  // 4..8
        std::vector<double> levels(segments);
        for (double& l : levels) l = 2.0 * rng.uniform() - 1.0;
        for (std::size_t i = 0; i < d_hr; ++i) {
            const std::size_t seg = i * segments / d_hr;
            ds.hr.at(s, i) = levels[seg] + 0.01 * rng.normal();
        }
        for (std::size_t j = 0; j < d_lr; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < factor; ++k) acc += ds.hr.at(s, j * factor + k);
            ds.lr.at(s, j) = acc / static_cast<double>(factor);
        }
    }
    ds.train_count = count * 8 / 10;
    ds.val_count = count / 10;
    ds.eval_count = count - ds.train_count - ds.val_count;
    if (ds.val_count == 0 || ds.eval_count == 0)
        throw std::invalid_argument("toy sr dataset: count too small for an 80/10/10 split");
    return ds;
}

// Partition as a list of consecutive batches (last one may be short).
inline std::vector<EvalBatch> partition_batches(const ToySrDataset& ds, ToySrDataset::Part p,
                                                std::size_t batch_size) {
    auto [lo, hi] = ds.part_range(p);
    std::vector<EvalBatch> out;
    for (std::size_t start = lo; start < hi; start += batch_size) {
        std::vector<std::size_t> idx;
        for (std::size_t i = start; i < std::min(start + batch_size, hi); ++i) idx.push_back(i);
        out.push_back(ds.gather(idx));
    }
    return out;
}

}  // namespace evoadam
