#include "gpmpc/qp/problem.hpp"

#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace gpmpc::qp {
namespace {

void write_matrix(std::ostream& out, const char* name, const MatrixX<double>& m) {
  out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
    out << '\n';
  }
}

MatrixX<double> read_matrix(std::istream& in, const std::string& expected) {
  std::string name;
  Eigen::Index rows = 0, cols = 0;
  if (!(in >> name >> rows >> cols) || name != expected || rows < 0 || cols < 0)
    throw ContractViolation("qp load: expected block '" + expected + "'");
  MatrixX<double> m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      if (!(in >> m(i, j))) throw ContractViolation("qp load: truncated block '" + expected + "'");
  return m;
}

}  // namespace

void dump(std::ostream& out, const QPProblem<double>& qp) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(17);
  out << "gpmpc-qp 1\n";
  out << "dims " << qp.dim() << ' ' << qp.rows() << '\n';
  write_matrix(out, "phi", qp.phi());
  write_matrix(out, "psi", qp.psi());
  write_matrix(out, "g", qp.g());
  write_matrix(out, "bounds", qp.bounds());
  out << "constant " << qp.constant() << '\n';
  out.flags(flags);
  out.precision(precision);
}

QPProblem<double> load(std::istream& in) {
  std::string tag, dims;
  int version = 0;
  Eigen::Index hm = 0, rows = 0;
  if (!(in >> tag >> version) || tag != "gpmpc-qp" || version != 1) throw ContractViolation("qp load: bad header");
  if (!(in >> dims >> hm >> rows) || dims != "dims") throw ContractViolation("qp load: missing dims");
  MatrixX<double> phi = read_matrix(in, "phi");
  MatrixX<double> psi = read_matrix(in, "psi");
  MatrixX<double> g = read_matrix(in, "g");
  MatrixX<double> bounds = read_matrix(in, "bounds");
  std::string cname;
  double constant = 0;
  if (!(in >> cname >> constant) || cname != "constant") throw ContractViolation("qp load: missing constant");
  require(phi.rows() == hm && psi.rows() == hm && g.rows() == rows && bounds.rows() == rows,
          "qp load: block sizes disagree with dims");
  return QPProblem<double>(phi, psi.col(0), g, bounds.col(0), constant);
}

void dump_file(const std::string& path, const QPProblem<double>& qp) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path);
  dump(out, qp);
}

QPProblem<double> load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return load(in);
}

}  // namespace gpmpc::qp
