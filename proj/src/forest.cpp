#include "mdsize/forest.hpp"

#include <algorithm>
#include <numeric>

namespace mdsize {

namespace {

struct BinnedFeatures {
  std::vector<std::vector<double>> cuts;          // per feature, ascending
  std::vector<std::vector<std::uint8_t>> codes;   // per feature, per training row
};

BinnedFeatures bin_features(const Matrix& x, std::span<const Index> rows, int max_bins) {
  const Index q = x.cols();
  const std::size_t n = rows.size();
  BinnedFeatures b;
  b.cuts.resize(static_cast<std::size_t>(q));
  b.codes.assign(static_cast<std::size_t>(q), std::vector<std::uint8_t>(n));
  std::vector<double> values(n);
  for (Index f = 0; f < q; ++f) {
    for (std::size_t r = 0; r < n; ++r) values[r] = x(rows[r], f);
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    auto& cuts = b.cuts[static_cast<std::size_t>(f)];
    for (int k = 1; k < max_bins; ++k) {
      const std::size_t pos = (static_cast<std::size_t>(k) * n) / static_cast<std::size_t>(max_bins);
      if (pos == 0 || pos >= n) continue;
      // Midpoint between neighbours so that ties fall on one side.
      const double c = 0.5 * (sorted[pos - 1] + sorted[pos]);
      if (sorted[pos - 1] == sorted[pos]) continue;
      if (cuts.empty() || c > cuts.back()) cuts.push_back(c);
    }
    auto& codes = b.codes[static_cast<std::size_t>(f)];
    for (std::size_t r = 0; r < n; ++r) {
      codes[r] = static_cast<std::uint8_t>(
          std::lower_bound(cuts.begin(), cuts.end(), values[r]) - cuts.begin());
    }
  }
  return b;
}

struct Split {
  int feature = -1;
  int bin = -1;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const BinnedFeatures& bins, const std::vector<double>& target,
              const ForestOptions& opts, int mtry)
      : bins_(bins), target_(target), opts_(opts), mtry_(mtry) {
    const std::size_t max_bins = 256;
    count_.resize(max_bins);
    sum_.resize(max_bins);
    features_.resize(bins.cuts.size());
    std::iota(features_.begin(), features_.end(), 0);
  }

  std::vector<RegressionForest::Node> build(std::vector<std::uint32_t>& idx, Rng& rng) {
    nodes_.clear();
    struct Pending {
      std::int32_t node;
      std::size_t begin;
      std::size_t end;
      int depth;
    };
    std::vector<Pending> stack;
    nodes_.push_back({});
    stack.push_back({0, 0, idx.size(), 0});
    while (!stack.empty()) {
      const Pending cur = stack.back();
      stack.pop_back();
      double s = 0.0;
      for (std::size_t k = cur.begin; k < cur.end; ++k) s += target_[idx[k]];
      const std::size_t n = cur.end - cur.begin;
      nodes_[static_cast<std::size_t>(cur.node)].value = s / static_cast<double>(n);
      if (cur.depth >= opts_.max_depth || n < 2 * static_cast<std::size_t>(opts_.min_leaf)) continue;

      const Split split = best_split(idx, cur.begin, cur.end, s, rng);
      if (split.feature < 0) continue;

      const auto& codes = bins_.codes[static_cast<std::size_t>(split.feature)];
      auto mid_it = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(cur.begin),
                                   idx.begin() + static_cast<std::ptrdiff_t>(cur.end),
                                   [&](std::uint32_t r) { return codes[r] <= split.bin; });
      const std::size_t mid = static_cast<std::size_t>(mid_it - idx.begin());

      const auto left = static_cast<std::int32_t>(nodes_.size());
      nodes_.push_back({});
      const auto right = static_cast<std::int32_t>(nodes_.size());
      nodes_.push_back({});
      auto& node = nodes_[static_cast<std::size_t>(cur.node)];
      node.feature = split.feature;
      node.threshold = bins_.cuts[static_cast<std::size_t>(split.feature)][static_cast<std::size_t>(split.bin)];
      node.left = left;
      node.right = right;
      stack.push_back({right, mid, cur.end, cur.depth + 1});
      stack.push_back({left, cur.begin, mid, cur.depth + 1});
    }
    return nodes_;
  }

 private:
  Split best_split(const std::vector<std::uint32_t>& idx, std::size_t begin, std::size_t end,
                   double total, Rng& rng) {
    Split best;
    const std::size_t q = features_.size();
    const std::size_t tries = std::min<std::size_t>(q, static_cast<std::size_t>(mtry_));
    for (std::size_t t = 0; t < tries; ++t) {
      std::uniform_int_distribution<std::size_t> pick(t, q - 1);
      std::swap(features_[t], features_[pick(rng)]);
    }
    const double n = static_cast<double>(end - begin);
    const double base = total * total / n;
    for (std::size_t t = 0; t < tries; ++t) {
      const int f = features_[t];
      const auto& cuts = bins_.cuts[static_cast<std::size_t>(f)];
      if (cuts.empty()) continue;
      const std::size_t n_bins = cuts.size() + 1;
      std::fill(count_.begin(), count_.begin() + static_cast<std::ptrdiff_t>(n_bins), 0.0);
      std::fill(sum_.begin(), sum_.begin() + static_cast<std::ptrdiff_t>(n_bins), 0.0);
      const auto& codes = bins_.codes[static_cast<std::size_t>(f)];
      for (std::size_t k = begin; k < end; ++k) {
        const std::uint32_t r = idx[k];
        count_[codes[r]] += 1.0;
        sum_[codes[r]] += target_[r];
      }
      double nl = 0.0;
      double sl = 0.0;
      for (std::size_t b = 0; b + 1 < n_bins; ++b) {
        nl += count_[b];
        sl += sum_[b];
        const double nr = n - nl;
        if (nl < opts_.min_leaf) continue;
        if (nr < opts_.min_leaf) break;
        const double sr = total - sl;
        const double gain = sl * sl / nl + sr * sr / nr - base;
        if (gain > best.gain + 1e-12) {
          best.gain = gain;
          best.feature = f;
          best.bin = static_cast<int>(b);
        }
      }
    }
    return best;
  }

  const BinnedFeatures& bins_;
  const std::vector<double>& target_;
  const ForestOptions& opts_;
  int mtry_;
  std::vector<double> count_;
  std::vector<double> sum_;
  std::vector<int> features_;
  std::vector<RegressionForest::Node> nodes_;
};

}  // namespace

RegressionForest RegressionForest::fit(const Matrix& x, const Vector& target,
                                       std::span<const Index> rows, const ForestOptions& opts,
                                       Rng& rng) {
  if (rows.empty()) throw Error(ErrorKind::DegenerateFit, "forest: no training rows");
  if (opts.max_bins < 2 || opts.max_bins > 255) {
    throw Error(ErrorKind::Config, "forest: max_bins must lie in [2, 255]");
  }
  RegressionForest forest;
  forest.n_features_ = x.cols();
  const int q = static_cast<int>(x.cols());
  const int mtry = opts.mtry > 0 ? std::min(opts.mtry, q) : std::max(1, q / 3);

  const BinnedFeatures bins = bin_features(x, rows, opts.max_bins);
  std::vector<double> y(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) y[r] = target[rows[r]];

  TreeBuilder builder(bins, y, opts, mtry);
  const auto n = static_cast<std::uint32_t>(rows.size());
  std::uniform_int_distribution<std::uint32_t> draw(0, n - 1);
  std::vector<std::uint32_t> idx(n);
  forest.trees_.reserve(static_cast<std::size_t>(opts.n_trees));
  for (int t = 0; t < opts.n_trees; ++t) {
    for (auto& v : idx) v = draw(rng);
    forest.trees_.push_back(builder.build(idx, rng));
  }
  return forest;
}

double RegressionForest::predict(const double* row, Index stride) const {
  if (trees_.empty()) return 0.0;
  double s = 0.0;
  for (const auto& tree : trees_) {
    std::size_t k = 0;
    while (tree[k].feature >= 0) {
      const double v = row[static_cast<Index>(tree[k].feature) * stride];
      k = static_cast<std::size_t>(v <= tree[k].threshold ? tree[k].left : tree[k].right);
    }
    s += tree[k].value;
  }
  return s / static_cast<double>(trees_.size());
}

}  // namespace mdsize
