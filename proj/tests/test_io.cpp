#include <doctest.h>

#include <bit>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qdyn/io.hpp"
#include "support.hpp"

using namespace qdyn;
using namespace qdyn::testing;
using nlohmann::json;

namespace {

bool bitwise_equal(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const Complex x = a.data()[i], y = b.data()[i];
    if (std::bit_cast<std::uint64_t>(x.real()) != std::bit_cast<std::uint64_t>(y.real())) return false;
    if (std::bit_cast<std::uint64_t>(x.imag()) != std::bit_cast<std::uint64_t>(y.imag())) return false;
  }
  return true;
}

bool same_model(const io::ModelFile& a, const io::ModelFile& b) {
  const LindbladModel &x = a.model, &y = b.model;
  if (x.dim != y.dim || x.jumps.size() != y.jumps.size()) return false;
  if (!bitwise_equal(x.hamiltonian, y.hamiltonian)) return false;
  for (std::size_t k = 0; k < x.jumps.size(); ++k)
    if (!bitwise_equal(x.jumps[k].op, y.jumps[k].op) || x.jumps[k].weight != y.jumps[k].weight) return false;
  if (x.initial.kind() != y.initial.kind()) return false;
  if (!bitwise_equal(x.initial.matrix(), y.initial.matrix())) return false;
  if (!bitwise_equal(x.initial.vector(), y.initial.vector())) return false;
  if (x.orthogonal.has_value() != y.orthogonal.has_value()) return false;
  if (x.orthogonal && !bitwise_equal(*x.orthogonal, *y.orthogonal)) return false;
  return a.grid.t_max == b.grid.t_max && a.grid.steps == b.grid.steps;
}

std::string schema_pointer(const json& doc) {
  try {
    io::parse_model(doc);
  } catch (const io::SchemaError& e) {
    return e.pointer();
  }
  return "<none>";
}

json qubit_doc() {
  io::ModelFile f;
  f.model = driven_dissipative();
  return io::serialize_model(f);
}

std::vector<std::vector<std::string>> split_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

double parse_double(const std::string& s) {
  double x = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  REQUIRE(res.ec == std::errc());
  REQUIRE(res.ptr == s.data() + s.size());
  return x;
}

}  // namespace

TEST_CASE("model round trip is bitwise exact") {
  Rng rng(401);
  for (int trial = 0; trial < 40; ++trial) {
    io::ModelFile f;
    f.model = random_model(rng, rng.integer(1, 4) == 1 ? 2 : rng.integer(2, 4));
    if (trial % 3 == 0) f.model.initial = InitialState::density(random_density(rng, f.model.dim));
    if (trial % 3 == 0) f.model.orthogonal.reset();
    f.grid = TimeGrid{rng.uniform(0.1, 10.0), rng.integer(16, 2000)};
    const std::string text = io::serialize_model(f).dump();
    const io::ModelFile g = io::parse_model(json::parse(text));
    CHECK(same_model(f, g));
    CHECK(io::serialize_model(g).dump() == text);
    CHECK(io::model_hash(f) == io::model_hash(g));
  }
}

TEST_CASE("bundled models parse and validate") {
  const std::filesystem::path dir = QDYN_MODELS_DIR;
  for (const char* name : {"amplitude_damping", "closed_qubit", "driven_dissipative", "classical_two_state"}) {
    CAPTURE(name);
    const io::ModelFile f = io::load_model(dir / (std::string(name) + ".json"));
    CHECK(validate_model(f.model).ok());
    CHECK(f.model.orthogonal.has_value());
  }
  const io::ModelFile ad = io::load_model(dir / "amplitude_damping.json");
  CHECK(bitwise_equal(ad.model.jumps.at(0).op, pauli::sigma_minus()));
  CHECK(ad.model.hamiltonian.isZero(0.0));
  const io::ModelFile cq = io::load_model(dir / "closed_qubit.json");
  CHECK(cq.model.jumps.empty());
  CHECK(bitwise_equal(cq.model.hamiltonian, 0.5 * pauli::sigma_x()));
  const io::ModelFile ct = io::load_model(dir / "classical_two_state.json");
  REQUIRE(ct.model.jumps.size() == 2);
  CHECK(std::abs(ct.model.jumps[1].op(1, 0) - std::sqrt(0.5)) == 0.0);
}

TEST_CASE("schema errors carry JSON pointers") {
  json doc = qubit_doc();
  CHECK(schema_pointer(doc) == "<none>");

  json d1 = doc;
  d1.erase("dim");
  CHECK(schema_pointer(d1) == "/dim");
  json d2 = doc;
  d2["hamiltonian"]["re"][1][0] = "x";
  CHECK(schema_pointer(d2) == "/hamiltonian/re/1/0");
  json d3 = doc;
  d3["jumps"][0]["im"][0] = json::array({0.0});
  CHECK(schema_pointer(d3) == "/jumps/0/im/0");
  json d4 = doc;
  d4["initial_state"]["kind"] = "mixed";
  CHECK(schema_pointer(d4) == "/initial_state/kind");
  json d5 = doc;
  d5["grid"]["steps"] = 3;
  CHECK(schema_pointer(d5) == "/grid/steps");
  json d6 = doc;
  d6["jumps"][0]["alpha"] = "one";
  CHECK(schema_pointer(d6) == "/jumps/0/alpha");
  json d7 = doc;
  d7["orthogonal_state"]["re"] = json::array({1.0});
  CHECK(schema_pointer(d7) == "/orthogonal_state/re");
  json d8 = doc;
  d8["dim"] = 40;
  CHECK(schema_pointer(d8) == "/dim");
  CHECK(schema_pointer(json::array()) == "");
}

TEST_CASE("missing im parts and alpha take defaults") {
  json doc = qubit_doc();
  doc["hamiltonian"].erase("im");
  doc["jumps"][0].erase("alpha");
  doc.erase("grid");
  const io::ModelFile f = io::parse_model(doc);
  CHECK(f.model.hamiltonian.imag().isZero(0.0));
  CHECK(f.model.jumps[0].weight == 1.0);
  CHECK(f.grid.t_max == 5.0);
  CHECK(f.grid.steps == 500);
}

TEST_CASE("physical defects parse but fail validation") {
  json doc = qubit_doc();
  doc["hamiltonian"]["im"][0][1] = 0.3;  // not Hermitian
  const io::ModelFile f = io::parse_model(doc);
  CHECK_FALSE(validate_model(f.model).ok());
}

TEST_CASE("csv fields re-parse exactly") {
  const io::ModelFile f{driven_dissipative(), TimeGrid{5.0, 500}};
  const BoundReport rep = robertson_tur(f.model, f.grid);
  const auto rows = split_csv(io::report_csv(rep));
  REQUIRE(rows.size() == static_cast<std::size_t>(f.grid.steps + 2));
  CHECK(rows[0] == std::vector<std::string>{"t", "lhs", "rhs", "slack"});
  for (int k = 0; k < f.grid.size(); ++k) {
    const auto& r = rows[k + 1];
    REQUIRE(r.size() == 4);
    CHECK(parse_double(r[0]) == f.grid.at(k));
    if (rep.status[k] == PointStatus::inapplicable) continue;
    CHECK(parse_double(r[1]) == rep.lhs[k]);
    CHECK(parse_double(r[2]) == rep.rhs[k]);
    CHECK(parse_double(r[3]) == rep.slack[k]);
  }
  Rng rng(17);
  for (int i = 0; i < 2000; ++i) {
    const double x = std::ldexp(rng.uniform(-1.0, 1.0), rng.integer(-300, 300));
    const std::string s = io::format_double(x);
    CHECK(parse_double(s) == x);
    CHECK(s.find_first_not_of("0123456789.-+e") == std::string::npos);
  }
  CHECK(io::format_double(std::nan("")) == "nan");
}

TEST_CASE("other csv tables have one row per grid point") {
  const io::ModelFile f{amplitude_damping(), TimeGrid{2.0, 40}};
  for (const std::string& text : {io::activity_csv(dynamical_activity(f.model, f.grid)),
                                  io::counting_csv(counting_moments(f.model, f.grid)),
                                  io::density_csv(evolve_density(f.model, f.grid))}) {
    const auto rows = split_csv(text);
    CHECK(rows.size() == 42);
    CHECK(text.find('\r') == std::string::npos);
    for (const auto& r : rows) CHECK(r.size() == rows[0].size());
  }
}

TEST_CASE("report summary fields") {
  const io::ModelFile f{driven_dissipative(), TimeGrid{5.0, 500}};
  const BoundReport rep = mp_product_tur(f.model, f.grid);
  const json j = io::report_summary(rep, io::model_hash(f));
  CHECK(j["relation"] == "mp_product_tur");
  CHECK(j["model_hash"].get<std::string>().size() == 16);
  CHECK(j["counts"]["satisfied"].get<int>() + j["counts"]["violated"].get<int>() +
            j["counts"]["inapplicable"].get<int>() ==
        f.grid.size());
  CHECK(j["min_slack"].get<double>() == rep.min_slack());
  CHECK(j["ok"] == true);
  CHECK(j["checks"].size() == rep.checks.size());
}

TEST_CASE("hash tracks content") {
  io::ModelFile f{amplitude_damping(), TimeGrid{5.0, 500}};
  const std::string h = io::model_hash(f);
  CHECK(h == io::model_hash(f));
  f.model.jumps[0].weight = 0.5;
  CHECK(h != io::model_hash(f));
  CHECK(io::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(io::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("atomic write replaces the target") {
  const auto dir = std::filesystem::temp_directory_path() / "qdyn_io_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "out.csv";
  io::write_atomic(path, "first\n");
  io::write_atomic(path, "second\n");
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == "second\n");
  int entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++entries;
  CHECK(entries == 1);
  std::filesystem::remove_all(dir);
  CHECK_THROWS(io::write_atomic(dir / "missing" / "x.csv", "y"));
}
