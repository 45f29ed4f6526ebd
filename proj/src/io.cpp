#include "qdyn/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

namespace qdyn::io {

using nlohmann::json;

namespace {

const json& member(const json& obj, const std::string& key, const std::string& pointer) {
  if (!obj.is_object()) throw SchemaError(pointer, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(pointer + "/" + key, "missing required field");
  return *it;
}

double number(const json& j, const std::string& pointer) {
  if (!j.is_number()) throw SchemaError(pointer, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError(pointer, "expected a finite number");
  return v;
}

std::vector<double> real_array(const json& j, const std::string& pointer, int n) {
  if (!j.is_array()) throw SchemaError(pointer, "expected an array");
  if (static_cast<int>(j.size()) != n)
    throw SchemaError(pointer, "expected " + std::to_string(n) + " entries, got " + std::to_string(j.size()));
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = number(j[i], pointer + "/" + std::to_string(i));
  return out;
}

ComplexVector parse_vector(const json& j, const std::string& pointer, int n) {
  const std::vector<double> re = real_array(member(j, "re", pointer), pointer + "/re", n);
  std::vector<double> im(n, 0.0);
  if (j.contains("im")) im = real_array(j["im"], pointer + "/im", n);
  ComplexVector v(n);
  for (int i = 0; i < n; ++i) v(i) = Complex(re[i], im[i]);
  return v;
}

json serialize_vector(const ComplexVector& v) {
  json re = json::array(), im = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    re.push_back(v(i).real());
    im.push_back(v(i).imag());
  }
  return {{"re", re}, {"im", im}};
}

std::string csv_row(std::initializer_list<double> xs) {
  std::string line;
  bool first = true;
  for (double x : xs) {
    if (!first) line += ',';
    line += format_double(x);
    first = false;
  }
  line += '\n';
  return line;
}

}  // namespace

ComplexMatrix parse_matrix(const json& j, const std::string& pointer, int rows, int cols) {
  auto part = [&](const json& p, const std::string& ptr) {
    if (!p.is_array()) throw SchemaError(ptr, "expected an array of rows");
    if (static_cast<int>(p.size()) != rows)
      throw SchemaError(ptr, "expected " + std::to_string(rows) + " rows, got " + std::to_string(p.size()));
    Eigen::MatrixXd out(rows, cols);
    for (int r = 0; r < rows; ++r) {
      const std::vector<double> row = real_array(p[r], ptr + "/" + std::to_string(r), cols);
      for (int c = 0; c < cols; ++c) out(r, c) = row[c];
    }
    return out;
  };
  const Eigen::MatrixXd re = part(member(j, "re", pointer), pointer + "/re");
  Eigen::MatrixXd im = Eigen::MatrixXd::Zero(rows, cols);
  if (j.contains("im")) im = part(j["im"], pointer + "/im");
  ComplexMatrix a(rows, cols);
  a.real() = re;
  a.imag() = im;
  return a;
}

json serialize_matrix(const ComplexMatrix& a) {
  json re = json::array(), im = json::array();
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    json rr = json::array(), ri = json::array();
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      rr.push_back(a(r, c).real());
      ri.push_back(a(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ri);
  }
  return {{"re", re}, {"im", im}};
}

ModelFile parse_model(const json& doc) {
  if (!doc.is_object()) throw SchemaError("", "model document must be a JSON object");
  ModelFile f;
  LindbladModel& m = f.model;

  const json& dim = member(doc, "dim", "");
  if (!dim.is_number_integer()) throw SchemaError("/dim", "expected an integer");
  m.dim = dim.get<int>();
  if (m.dim < 1 || m.dim > kMaxDimension)
    throw SchemaError("/dim", "dimension must lie in [1, " + std::to_string(kMaxDimension) + "]");
  const int d = m.dim;

  m.hamiltonian = parse_matrix(member(doc, "hamiltonian", ""), "/hamiltonian", d, d);

  if (doc.contains("jumps")) {
    const json& jumps = doc["jumps"];
    if (!jumps.is_array()) throw SchemaError("/jumps", "expected an array");
    for (std::size_t k = 0; k < jumps.size(); ++k) {
      const std::string ptr = "/jumps/" + std::to_string(k);
      JumpChannel ch;
      ch.op = parse_matrix(jumps[k], ptr, d, d);
      if (jumps[k].contains("alpha")) ch.weight = number(jumps[k]["alpha"], ptr + "/alpha");
      m.jumps.push_back(std::move(ch));
    }
  }

  const json& init = member(doc, "initial_state", "");
  const json& kind = member(init, "kind", "/initial_state");
  if (!kind.is_string()) throw SchemaError("/initial_state/kind", "expected a string");
  if (kind == "pure") {
    m.initial = InitialState::pure(parse_vector(member(init, "vector", "/initial_state"),
                                                "/initial_state/vector", d));
  } else if (kind == "density") {
    m.initial = InitialState::density(parse_matrix(member(init, "matrix", "/initial_state"),
                                                   "/initial_state/matrix", d, d));
  } else {
    throw SchemaError("/initial_state/kind", "expected \"pure\" or \"density\"");
  }

  if (doc.contains("orthogonal_state") && !doc["orthogonal_state"].is_null())
    m.orthogonal = parse_vector(doc["orthogonal_state"], "/orthogonal_state", d);

  if (doc.contains("grid")) {
    const json& g = doc["grid"];
    f.grid.t_max = number(member(g, "t_max", "/grid"), "/grid/t_max");
    const json& steps = member(g, "steps", "/grid");
    if (!steps.is_number_integer()) throw SchemaError("/grid/steps", "expected an integer");
    f.grid.steps = steps.get<int>();
    if (!(f.grid.t_max > 0.0)) throw SchemaError("/grid/t_max", "must be positive");
    if (f.grid.steps < TimeGrid::kMinSteps)
      throw SchemaError("/grid/steps", "must be at least " + std::to_string(TimeGrid::kMinSteps));
  }
  return f;
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::system_error(errno, std::generic_category(), "cannot read " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("", std::string("invalid JSON: ") + e.what());
  }
  return parse_model(doc);
}

json serialize_model(const ModelFile& f) {
  const LindbladModel& m = f.model;
  json doc;
  doc["dim"] = m.dim;
  doc["hamiltonian"] = serialize_matrix(m.hamiltonian);
  doc["jumps"] = json::array();
  for (const JumpChannel& ch : m.jumps) {
    json j = serialize_matrix(ch.op);
    j["alpha"] = ch.weight;
    doc["jumps"].push_back(j);
  }
  if (m.initial.kind() == InitialState::Kind::pure)
    doc["initial_state"] = {{"kind", "pure"}, {"vector", serialize_vector(m.initial.vector())}};
  else
    doc["initial_state"] = {{"kind", "density"}, {"matrix", serialize_matrix(m.initial.matrix())}};
  if (m.orthogonal) doc["orthogonal_state"] = serialize_vector(*m.orthogonal);
  doc["grid"] = {{"t_max", f.grid.t_max}, {"steps", f.grid.steps}};
  return doc;
}

namespace {

ComplexMatrix projector(int d, int k) {
  ComplexMatrix p = ComplexMatrix::Zero(d, d);
  p(k, k) = 1.0;
  return p;
}

}  // namespace

std::optional<Observable> builtin_observable(const std::string& name, const LindbladModel& m) {
  const int d = m.dim;
  auto qubit = [&](ComplexMatrix c) {
    if (d != 2) throw ModelError("observable '" + name + "' needs a two-level model");
    return Observable::system(std::move(c), name);
  };
  if (name.empty() || name == "field") return Observable::field();
  if (name == "sigma_x") return qubit(pauli::sigma_x());
  if (name == "sigma_y") return qubit(pauli::sigma_y());
  if (name == "sigma_z") return qubit(pauli::sigma_z());
  if (name == "total-jumps") return Observable::field(std::vector<double>(m.jumps.size(), 1.0), name);
  if (name.rfind("projector:", 0) != 0) return std::nullopt;
  const std::string idx = name.substr(10);
  int k = -1;
  const auto res = std::from_chars(idx.data(), idx.data() + idx.size(), k);
  if (res.ec != std::errc() || res.ptr != idx.data() + idx.size() || k < 0 || k >= d)
    throw ModelError("observable '" + name + "': index out of range for dim " + std::to_string(d));
  return Observable::system(projector(d, k), name);
}

Observable default_system_observable(const LindbladModel& m) {
  if (m.dim == 2) return Observable::system(pauli::sigma_z(), "sigma_z");
  return Observable::system(projector(m.dim, 0), "projector:0");
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string model_hash(const ModelFile& f) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(serialize_model(f).dump())));
  return buf;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

json report_summary(const BoundReport& r, const std::string& hash) {
  json j;
  j["relation"] = to_string(r.relation);
  j["model_hash"] = hash;
  j["tolerance"] = r.tolerance;
  j["observable"] = r.observable_tag;
  j["grid"] = {{"t_max", r.grid.t_max}, {"steps", r.grid.steps}};
  j["counts"] = {{"satisfied", r.count(PointStatus::satisfied)},
                 {"violated", r.count(PointStatus::violated)},
                 {"inapplicable", r.count(PointStatus::inapplicable)}};
  const double ms = r.min_slack();
  j["min_slack"] = std::isnan(ms) ? json(nullptr) : json(ms);
  int plus = 0, minus = 0;
  for (int k = 0; k < r.grid.size(); ++k) {
    if (r.status[k] == PointStatus::inapplicable) continue;
    if (r.signs[k] > 0) ++plus;
    if (r.signs[k] < 0) ++minus;
  }
  if (r.sign_choice) j["sign_choice"] = *r.sign_choice > 0 ? "+" : "-";
  else j["sign_choice"] = plus + minus > 0 ? json("mixed") : json(nullptr);
  j["signs"] = {{"plus", plus}, {"minus", minus}};
  j["checks"] = json::array();
  for (const OrderingCheck& c : r.checks)
    j["checks"].push_back({{"name", c.name}, {"evaluated", c.evaluated}, {"violations", c.violations},
                           {"worst_margin", c.worst}});
  j["counters"] = json::object();
  for (const auto& [name, value] : r.counters) j["counters"][name] = value;
  j["ok"] = r.ok();
  return j;
}

std::string report_csv(const BoundReport& r) {
  std::string out = "t,lhs,rhs,slack\n";
  for (int k = 0; k < r.grid.size(); ++k) out += csv_row({r.grid.at(k), r.lhs[k], r.rhs[k], r.slack[k]});
  return out;
}

std::string activity_csv(const ActivityBundle& b) {
  std::string out = "t,A,Bq,B,J\n";
  for (int k = 0; k < b.grid.size(); ++k) out += csv_row({b.grid.at(k), b.A[k], b.Bq[k], b.B[k], b.J[k]});
  return out;
}

std::string counting_csv(const CountingMoments& c) {
  std::string out = "t,mean,variance,rate\n";
  for (int k = 0; k < c.grid.size(); ++k) out += csv_row({c.grid.at(k), c.mean[k], c.variance[k], c.rate[k]});
  return out;
}

std::string density_csv(const TimeSeries<ComplexMatrix>& rho) {
  const int d = rho.size() ? static_cast<int>(rho[0].rows()) : 0;
  std::string out = "t";
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      out += ",re_" + std::to_string(i) + std::to_string(j) + ",im_" + std::to_string(i) + std::to_string(j);
  out += '\n';
  for (int k = 0; k < rho.size(); ++k) {
    out += format_double(rho.grid.at(k));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        out += ',' + format_double(rho[k](i, j).real()) + ',' + format_double(rho[k](i, j).imag());
    out += '\n';
  }
  return out;
}

json ensemble_summary(const TrajectoryEnsemble& e) {
  return {{"n_traj", e.n_traj},   {"seed", e.seed},         {"t_max", e.t_max},
          {"steps", e.steps},     {"mean", e.mean},         {"variance", e.variance},
          {"mean_se", e.mean_se}, {"variance_se", e.variance_se}};
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  const fs::path tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::system_error(errno, std::generic_category(), "cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw std::system_error(errno, std::generic_category(), "cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace qdyn::io
