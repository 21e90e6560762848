#include "gpmpc/harness/sweep.hpp"

#include "gpmpc/gp/model.hpp"
#include "gpmpc/gp/train.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace gpmpc::harness {

namespace {

gp::Dataset<double> select_rows(const gp::Dataset<double>& d, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd in(static_cast<Eigen::Index>(rows.size()), d.input_dim());
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), d.state_dim());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    in.row(static_cast<Eigen::Index>(r)) = d.inputs.row(rows[r]);
    out.row(static_cast<Eigen::Index>(r)) = d.targets.row(rows[r]);
  }
  return gp::Dataset<double>(std::move(in), std::move(out), d.scaling);
}

}  // namespace

std::vector<Eigen::Index> sweep_rows(Eigen::Index total, int size, bool random_subsets, std::uint64_t seed) {
  require(size >= 1 && size <= total, "sweep size out of range");
  std::vector<Eigen::Index> all(static_cast<std::size_t>(total));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  if (!random_subsets) return {all.begin(), all.begin() + size};
  // partial Fisher-Yates with an explicit draw so the result is library independent
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < static_cast<std::size_t>(size); ++i) {
    const std::uint64_t span = all.size() - i;
    std::swap(all[i], all[i + static_cast<std::size_t>(rng() % span)]);
  }
  std::vector<Eigen::Index> out(all.begin(), all.begin() + size);
  std::sort(out.begin(), out.end());
  return out;
}

FitQuality evaluate_fit(const gp::TrainedGP<double>& gp, const gp::Dataset<double>& data) {
  FitQuality q;
  const auto cells = static_cast<double>(data.size() * data.state_dim());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const auto p = gp::predict_point(gp, Eigen::VectorXd(data.inputs.row(i).transpose()));
    q.mse += (p.mean - data.targets.row(i).transpose()).squaredNorm();
    q.average_variance += p.variance.sum();
  }
  q.mse /= cells;
  q.average_variance /= cells;
  return q;
}

std::vector<SweepCell> training_sweep(const gp::Dataset<double>& data, const std::string& subsystem,
                                      const GPSettings& settings, std::uint64_t seed) {
  std::vector<SweepCell> cells;
  for (std::size_t k = 0; k < settings.sizes.size(); ++k) {
    SweepCell c;
    c.subsystem = subsystem;
    c.size = settings.sizes[k];
    try {
      const auto rows = sweep_rows(data.size(), c.size, settings.random_subsets, derive_seed(seed, 100 + k));
      const gp::Dataset<double> train_set = select_rows(data, rows);
      const gp::TrainResult r = gp::train(train_set, settings.train_options(derive_seed(seed, 200 + k)));
      c.training_warning = r.warning;
      c.train_mse = evaluate_fit(r.gp, train_set).mse;
      const FitQuality test = evaluate_fit(r.gp, data);
      c.test_mse = test.mse;
      c.average_variance = test.average_variance;
      c.ok = true;
    } catch (const std::exception& e) {
      c.error = e.what();
    }
    cells.push_back(std::move(c));
  }
  return cells;
}

std::vector<SweepCell> training_sweep(const CollectedData& data, const GPSettings& settings, std::uint64_t seed) {
  auto cells = training_sweep(data.translational.scaled, "translational", settings, derive_seed(seed, 5));
  auto rot = training_sweep(data.rotational.scaled, "rotational", settings, derive_seed(seed, 6));
  cells.insert(cells.end(), rot.begin(), rot.end());
  return cells;
}

}  // namespace gpmpc::harness
