#include "mdsize/dataset.hpp"

namespace mdsize {

std::vector<ColumnGroup> singleton_groups(Index p) {
  std::vector<ColumnGroup> groups;
  groups.reserve(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) {
    groups.push_back({"x" + std::to_string(j + 1), {j}, false});
  }
  return groups;
}

Index DataSet::incomplete_rows() const {
  Index count = 0;
  for (Index i = 0; i < rows(); ++i) {
    if (!observed.row(i).all()) ++count;
  }
  return count;
}

DataSet DataSet::select_rows(std::span<const Index> idx) const {
  DataSet out;
  const Index n = static_cast<Index>(idx.size());
  out.x.resize(n, cols());
  out.observed.resize(n, cols());
  out.y.resize(n);
  if (true_prob) out.true_prob = Vector(n);
  for (Index r = 0; r < n; ++r) {
    const Index i = idx[static_cast<std::size_t>(r)];
    out.x.row(r) = x.row(i);
    out.observed.row(r) = observed.row(i);
    out.y[r] = y[i];
    if (true_prob) (*out.true_prob)[r] = (*true_prob)[i];
  }
  out.groups = groups;
  out.retained_fraction = retained_fraction;
  out.warnings = warnings;
  return out;
}

DataSet DataSet::head(Index n) const {
  DataSet out;
  out.x = x.topRows(n);
  out.observed = observed.topRows(n);
  out.y = y.head(n);
  if (true_prob) out.true_prob = true_prob->head(n);
  out.groups = groups;
  out.retained_fraction = retained_fraction;
  out.warnings = warnings;
  return out;
}

void DataSet::check_shape() const {
  if (observed.rows() != x.rows() || observed.cols() != x.cols() ||
      y.size() != x.rows() || (true_prob && true_prob->size() != x.rows())) {
    throw Error(ErrorKind::Shape, "dataset: inconsistent matrix/mask/outcome sizes");
  }
}

}  // namespace mdsize
