#include "dcabc/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "dcabc/csv.hpp"
#include "dcabc/error.hpp"

namespace dcabc {

WeightedSample WeightedSample::uniform(Eigen::MatrixXd points) {
  const auto n = points.rows();
  return {std::move(points), Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n))};
}

Eigen::VectorXd WeightedSample::mean() const { return points.transpose() * weights; }

Eigen::VectorXd WeightedSample::variance() const {
  const Eigen::VectorXd m = mean();
  return ((points.rowwise() - m.transpose()).array().square().matrix().transpose() * weights);
}

double wasserstein_1d(const Eigen::VectorXd& a, const Eigen::VectorXd& wa, const Eigen::VectorXd& b,
                      const Eigen::VectorXd& wb) {
  struct Atom {
    double x;
    double wa;
    double wb;
  };
  std::vector<Atom> atoms;
  atoms.reserve(static_cast<std::size_t>(a.size() + b.size()));
  const double sa = wa.sum(), sb = wb.sum();
  for (Eigen::Index i = 0; i < a.size(); ++i) atoms.push_back({a[i], wa[i] / sa, 0.0});
  for (Eigen::Index i = 0; i < b.size(); ++i) atoms.push_back({b[i], 0.0, wb[i] / sb});
  std::sort(atoms.begin(), atoms.end(), [](const Atom& l, const Atom& r) { return l.x < r.x; });
  double fa = 0.0, fb = 0.0, total = 0.0;
  for (std::size_t i = 0; i + 1 < atoms.size(); ++i) {
    fa += atoms[i].wa;
    fb += atoms[i].wb;
    total += std::abs(fa - fb) * (atoms[i + 1].x - atoms[i].x);
  }
  return total;
}

double wasserstein(const WeightedSample& a, const WeightedSample& b) {
  if (a.points.cols() != b.points.cols()) throw DomainError("wasserstein: samples differ in dimension");
  double total = 0.0;
  for (Eigen::Index c = 0; c < a.points.cols(); ++c)
    total += wasserstein_1d(a.points.col(c), a.weights, b.points.col(c), b.weights);
  return total;
}

double effective_sample_size(const Eigen::VectorXd& weights) { return 1.0 / weights.squaredNorm(); }

WeightedSample read_weighted_sample(const std::filesystem::path& path, std::vector<std::string>* names) {
  const csv::Table table = csv::read(path);
  std::vector<int> cols;
  std::vector<std::string> param_names;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c] == "weight" || table.header[c] == "distance") continue;
    cols.push_back(static_cast<int>(c));
    param_names.push_back(table.header[c]);
  }
  if (cols.empty()) throw Error(path.string() + ": no parameter columns");
  const int wcol = table.column("weight");
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  if (n == 0) throw Error(path.string() + ": no rows");
  WeightedSample s;
  s.points.resize(n, static_cast<Eigen::Index>(cols.size()));
  s.weights.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = table.rows[static_cast<std::size_t>(r)];
    for (std::size_t c = 0; c < cols.size(); ++c)
      s.points(r, static_cast<Eigen::Index>(c)) = row[static_cast<std::size_t>(cols[c])];
    s.weights[r] = wcol >= 0 ? row[static_cast<std::size_t>(wcol)] : 1.0;
  }
  const double total = s.weights.sum();
  if (!(total > 0.0) || !s.weights.allFinite() || (s.weights.array() < 0.0).any())
    throw Error(path.string() + ": weights must be nonnegative with a positive sum");
  s.weights /= total;
  if (names) *names = std::move(param_names);
  return s;
}

void write_weighted_sample(const std::filesystem::path& path, const WeightedSample& sample,
                           const std::vector<std::string>& names, const Eigen::VectorXd* distances) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (const auto& n : names) out << n << ',';
  out << "weight";
  if (distances) out << ",distance";
  out << '\n';
  for (Eigen::Index r = 0; r < sample.points.rows(); ++r) {
    for (Eigen::Index c = 0; c < sample.points.cols(); ++c) out << csv::format_double(sample.points(r, c)) << ',';
    out << csv::format_double(sample.weights[r]);
    if (distances) out << ',' << csv::format_double((*distances)[r]);
    out << '\n';
  }
}

}  // namespace dcabc
