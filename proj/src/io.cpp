#include "sis/io.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace sis::io {
namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ParseError((path.empty() ? std::string("/") : path) + ": " + what);
}

const json& member(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail(path, fmt::format("missing field \"{}\"", key));
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected number");
  return j.get<double>();
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected integer");
  return j.get<int>();
}

Vector parse_vector(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(k) = number(j[k], fmt::format("{}/{}", path, k));
  return v;
}

Matrix parse_matrix(const json& j, const std::string& path, int rows, int cols) {
  if (!j.is_array()) fail(path, "expected array of rows");
  if (j.empty()) {
    // An empty document matrix stands for whatever zero-size shape is expected.
    return rows * cols == 0 ? Matrix(rows, cols) : Matrix(0, 0);
  }
  const auto r = static_cast<Eigen::Index>(j.size());
  Eigen::Index c = -1;
  Matrix m;
  for (Eigen::Index k = 0; k < r; ++k) {
    const auto row_path = fmt::format("{}/{}", path, k);
    const auto& row = j[k];
    if (!row.is_array()) fail(row_path, "expected array of numbers");
    if (c < 0) {
      c = static_cast<Eigen::Index>(row.size());
      m.resize(r, c);
    } else if (static_cast<Eigen::Index>(row.size()) != c) {
      fail(row_path, fmt::format("ragged matrix: row has {} entries, expected {}", row.size(), c));
    }
    for (Eigen::Index q = 0; q < c; ++q) m(k, q) = number(row[q], fmt::format("{}/{}", row_path, q));
  }
  return m;
}

json matrix_to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

SignalDims parse_dims(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected object");
  SignalDims d;
  d.n_x = integer(member(j, "n_x", path), path + "/n_x");
  auto opt = [&](const char* key) { return j.contains(key) ? integer(j[key], path + "/" + key) : 0; };
  d.n_u = opt("n_u");
  d.n_y = opt("n_y");
  d.n_wp = opt("n_wp");
  d.n_wm = opt("n_wm");
  return d;
}

json dims_to_json(const SignalDims& d) {
  return {{"n_x", d.n_x}, {"n_u", d.n_u}, {"n_y", d.n_y}, {"n_wp", d.n_wp}, {"n_wm", d.n_wm}};
}

struct MatrixField {
  const char* name;
  Matrix SubsystemBlock::*member;
  int (*rows)(const SignalDims&);
  int (*cols)(const SignalDims&);
};

constexpr int nx(const SignalDims& d) { return d.n_x; }
constexpr int nu(const SignalDims& d) { return d.n_u; }
constexpr int ny(const SignalDims& d) { return d.n_y; }
constexpr int nv(const SignalDims& d) { return d.n_v(); }

const MatrixField kFields[] = {
    {"A", &SubsystemBlock::A, nx, nx}, {"B", &SubsystemBlock::B, nx, nv}, {"C", &SubsystemBlock::C, nx, nu},
    {"D", &SubsystemBlock::D, nv, nx}, {"G", &SubsystemBlock::G, nv, nv}, {"H", &SubsystemBlock::H, nv, nu},
    {"J", &SubsystemBlock::J, ny, nx}, {"R", &SubsystemBlock::R, ny, nu}, {"M", &SubsystemBlock::M, ny, ny},
};

void apply_matrices(const json& j, const std::string& path, SubsystemBlock& b) {
  for (const auto& f : kFields) {
    if (j.contains(f.name)) {
      b.*f.member = parse_matrix(j[f.name], path + "/" + f.name, f.rows(b.dims), f.cols(b.dims));
    }
  }
}

json block_to_json(const SubsystemBlock& b) {
  json out = json::object();
  for (const auto& f : kFields) out[f.name] = matrix_to_json(b.*f.member);
  return out;
}

TimeTable parse_block(const json& j, const std::string& path, const SignalDims& dims, int horizon) {
  if (!j.is_object()) fail(path, "expected object");
  TimeTable table{SubsystemBlock::zeros(dims), {}};
  apply_matrices(j, path, table.base);
  if (j.contains("by_t")) {
    const auto& entries = j["by_t"];
    if (!entries.is_array()) fail(path + "/by_t", "expected array");
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const auto entry_path = fmt::format("{}/by_t/{}", path, k);
      const int t = integer(member(entries[k], "t", entry_path), entry_path + "/t");
      if (t < 1 || t > horizon) fail(entry_path + "/t", fmt::format("t={} outside [1,{}]", t, horizon));
      if (table.overrides.contains(t)) fail(entry_path + "/t", fmt::format("duplicate t={}", t));
      SubsystemBlock b = table.base;
      apply_matrices(entries[k], entry_path, b);
      table.overrides.emplace(t, std::move(b));
    }
  }
  return table;
}

// Accepts either an array of S_m items or one item broadcast to every index.
template <typename F>
auto per_index(const json& j, const std::string& path, int sm, F&& parse) {
  std::vector<decltype(parse(j, path, 1))> out;
  if (j.is_array()) {
    if (static_cast<int>(j.size()) != sm) fail(path, fmt::format("expected {} entries, got {}", sm, j.size()));
    for (int i = 0; i < sm; ++i) out.push_back(parse(j[i], fmt::format("{}/{}", path, i), i + 1));
  } else {
    for (int i = 0; i < sm; ++i) out.push_back(parse(j, path, i + 1));
  }
  return out;
}

DropoutSchedule parse_schedule(const json& j, const std::string& path, int sm) {
  auto prob = [](const json& v, const std::string& p) {
    const double value = number(v, p);
    if (!(value >= 0.0 && value <= 1.0)) fail(p, fmt::format("probability {} outside [0,1]", value));
    return value;
  };
  if (j.is_number()) return DropoutSchedule(prob(j, path));
  if (!j.is_object()) fail(path, "expected number or object");
  DropoutSchedule s(j.contains("default") ? prob(j["default"], path + "/default") : 1.0);
  if (j.contains("per_index")) {
    const auto& per = j["per_index"];
    const auto per_path = path + "/per_index";
    if (!per.is_array() || static_cast<int>(per.size()) != sm) fail(per_path, fmt::format("expected {} entries", sm));
    for (int i = 0; i < sm; ++i) s.set_index(i + 1, prob(per[i], fmt::format("{}/{}", per_path, i)));
  }
  if (j.contains("table")) {
    const auto& table = j["table"];
    if (!table.is_array()) fail(path + "/table", "expected array");
    for (std::size_t k = 0; k < table.size(); ++k) {
      const auto p = fmt::format("{}/table/{}", path, k);
      s.set(integer(member(table[k], "t", p), p + "/t"), integer(member(table[k], "i", p), p + "/i"),
            prob(member(table[k], "p", p), p + "/p"));
    }
  }
  return s;
}

InputRule parse_inputs(const json& j, const std::string& path, const ChainModel& model) {
  const auto kind = member(j, "kind", path);
  if (!kind.is_string()) fail(path + "/kind", "expected string");
  const auto name = kind.get<std::string>();
  std::vector<int> sizes;
  for (int i = 1; i <= model.length(); ++i) sizes.push_back(model.dims(i).n_u);

  if (name == "zero") return zero_inputs(model);
  if (name == "constant") {
    const Vector value = parse_vector(member(j, "value", path), path + "/value");
    return [value](int, int) { return value; };
  }
  if (name == "sine") {
    const double amplitude = number(member(j, "amplitude", path), path + "/amplitude");
    const double frequency = number(member(j, "frequency", path), path + "/frequency");
    const double phase = j.contains("phase_per_index") ? number(j["phase_per_index"], path + "/phase_per_index") : 0.0;
    // u(t,i) = amplitude·sin(frequency·t + phase·i), same value in every component
    return [=](int t, int i) {
      return Vector(Vector::Constant(sizes.at(i - 1), amplitude * std::sin(frequency * t + phase * i)));
    };
  }
  if (name == "table") {
    std::map<std::pair<int, int>, Vector> values;
    const auto& rows = member(j, "values", path);
    if (!rows.is_array()) fail(path + "/values", "expected array");
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto p = fmt::format("{}/values/{}", path, k);
      values[{integer(member(rows[k], "t", p), p + "/t"), integer(member(rows[k], "i", p), p + "/i")}] =
          parse_vector(member(rows[k], "u", p), p + "/u");
    }
    return [values, sizes](int t, int i) {
      const auto it = values.find({t, i});
      return it == values.end() ? Vector(Vector::Zero(sizes.at(i - 1))) : it->second;
    };
  }
  fail(path + "/kind", "unknown input kind \"" + name + "\"");
}

}  // namespace

json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("{}: malformed JSON at byte {}: {}", origin, e.byte, e.what()));
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_json_text(buf.str(), path.string());
}

ChainModel parse_model(const json& doc) {
  const int sm = integer(member(doc, "S_m", ""), "/S_m");
  const int horizon = integer(member(doc, "horizon", ""), "/horizon");
  if (sm < 1) fail("/S_m", "S_m must be >= 1");
  if (horizon < 1) fail("/horizon", "horizon must be >= 1");
  auto dims = per_index(member(doc, "dims", ""), "/dims", sm,
                        [](const json& j, const std::string& p, int) { return parse_dims(j, p); });
  auto tables = per_index(member(doc, "blocks", ""), "/blocks", sm, [&](const json& j, const std::string& p, int i) {
    return parse_block(j, p, dims[i - 1], horizon);
  });
  std::vector<BlockSource> sources(tables.begin(), tables.end());
  return ChainModel(horizon, std::move(dims), std::move(sources));
}

json model_to_json(const ChainModel& model) {
  json doc = {{"S_m", model.length()}, {"horizon", model.horizon()}};
  json dims = json::array();
  json blocks = json::array();
  for (int i = 1; i <= model.length(); ++i) {
    dims.push_back(dims_to_json(model.dims(i)));
    const auto* table = std::get_if<TimeTable>(&model.source(i));
    if (!table) throw ValidationError(fmt::format("model index i={} uses a rule and cannot be serialized", i));
    json b = block_to_json(table->base);
    if (!table->overrides.empty()) {
      json by_t = json::array();
      for (const auto& [t, block] : table->overrides) {
        json entry = block_to_json(block);
        entry["t"] = t;
        by_t.push_back(std::move(entry));
      }
      b["by_t"] = std::move(by_t);
    }
    blocks.push_back(std::move(b));
  }
  doc["dims"] = std::move(dims);
  doc["blocks"] = std::move(blocks);
  return doc;
}

bool is_model_document(const json& doc) { return doc.is_object() && doc.contains("S_m"); }

ScenarioConfig parse_scenario(const json& doc, const std::filesystem::path& base_dir, const Overrides& ov) {
  if (!doc.is_object()) fail("", "expected object");
  json model_doc;
  if (doc.contains("model")) {
    model_doc = doc["model"];
  } else if (doc.contains("model_file")) {
    if (!doc["model_file"].is_string()) fail("/model_file", "expected string");
    model_doc = read_json_file(base_dir / doc["model_file"].get<std::string>());
  } else if (is_model_document(doc)) {
    model_doc = doc;
  } else {
    fail("", "missing field \"model\" or \"model_file\"");
  }
  ChainModel model = [&] {
    try {
      return parse_model(model_doc);
    } catch (const ParseError& e) {
      throw ParseError(std::string("model") + e.what());
    }
  }();
  const int sm = model.length();

  int horizon = doc.contains("horizon") ? integer(doc["horizon"], "/horizon") : model.horizon();
  if (ov.horizon) horizon = *ov.horizon;
  if (horizon < 1 || horizon > model.horizon()) {
    fail("/horizon", fmt::format("horizon {} outside [1, {}]", horizon, model.horizon()));
  }
  std::uint64_t seed = 0;
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) fail("/seed", "expected non-negative integer");
    seed = doc["seed"].get<std::uint64_t>();
  }
  if (ov.seed) seed = *ov.seed;

  DropoutSchedule schedule = doc.contains("p") ? parse_schedule(doc["p"], "/p", sm) : DropoutSchedule(1.0);
  if (ov.p) schedule = DropoutSchedule(checked_probability(*ov.p));

  std::vector<InitialCondition> init;
  if (doc.contains("init")) {
    init = per_index(doc["init"], "/init", sm, [&](const json& j, const std::string& p, int i) {
      const int n = model.dims(i).n_x;
      if (!j.is_object()) fail(p, "expected object");
      if (j.contains("fixed")) return InitialCondition{parse_vector(j["fixed"], p + "/fixed"), Matrix::Zero(n, n)};
      InitialCondition ic{j.contains("mean") ? parse_vector(j["mean"], p + "/mean") : Vector(Vector::Zero(n)),
                          j.contains("cov") ? parse_matrix(j["cov"], p + "/cov", n, n) : Matrix(Matrix::Identity(n, n))};
      return ic;
    });
  } else {
    for (int i = 1; i <= sm; ++i) {
      const int n = model.dims(i).n_x;
      init.push_back({Vector::Zero(n), Matrix::Identity(n, n)});
    }
  }

  std::vector<FilterPrior> priors = matched_priors(init);
  if (doc.contains("filter_prior")) {
    priors = per_index(doc["filter_prior"], "/filter_prior", sm, [&](const json& j, const std::string& p, int i) {
      const int n = model.dims(i).n_x;
      return FilterPrior{parse_vector(member(j, "mean", p), p + "/mean"),
                         parse_matrix(member(j, "second_moment", p), p + "/second_moment", n, n)};
    });
  }

  InputRule inputs = doc.contains("inputs") ? parse_inputs(doc["inputs"], "/inputs", model) : zero_inputs(model);

  ScenarioConfig cfg{Scenario{std::move(model), horizon, std::move(schedule), seed, std::move(init), std::move(inputs)},
                     std::move(priors), 1, {0.0, 0.25, 0.5, 0.75, 1.0}};
  if (doc.contains("runs")) {
    cfg.runs = integer(doc["runs"], "/runs");
    if (cfg.runs < 1) fail("/runs", "runs must be >= 1");
  }
  if (doc.contains("p_levels")) {
    const Vector levels = parse_vector(doc["p_levels"], "/p_levels");
    cfg.p_levels.assign(levels.data(), levels.data() + levels.size());
    for (double p : cfg.p_levels) checked_probability(p);
  }
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path, const Overrides& overrides) {
  const json doc = read_json_file(path);
  try {
    return parse_scenario(doc, path.parent_path(), overrides);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

json schedule_to_json(const DropoutSchedule& s) {
  json out = {{"default", s.default_p()}};
  if (!s.per_index().empty()) {
    json per = json::object();
    for (const auto& [i, p] : s.per_index()) per[std::to_string(i)] = p;
    out["per_index"] = std::move(per);
  }
  if (!s.table().empty()) {
    json table = json::array();
    for (const auto& [key, p] : s.table()) table.push_back({{"t", key.first}, {"i", key.second}, {"p", p}});
    out["table"] = std::move(table);
  }
  return out;
}

void write_trace_csv(std::ostream& out, const Trace& tr, int n_wp, int n_wm) {
  out << "t,i,kind,component,value\n";
  auto emit = [&](int t, int i, const char* kind, const auto& x) {
    for (Eigen::Index c = 0; c < x.size(); ++c) fmt::print(out, "{},{},{},{},{}\n", t, i, kind, c + 1, x(c));
  };
  for (int t = 1; t <= static_cast<int>(tr.x.size()); ++t) {
    for (int i = 1; i <= tr.length(); ++i) {
      emit(t, i, "x", tr.x[t - 1][i - 1]);
      if (t > tr.horizon) continue;
      const Vector& v = tr.v[t - 1][i - 1];
      const Vector& w = tr.w[t - 1][i - 1];
      emit(t, i, "v_plus", v.head(n_wp));
      emit(t, i, "v_minus", v.tail(n_wm));
      emit(t, i, "w_plus", w.head(n_wp));
      emit(t, i, "w_minus", w.tail(n_wm));
      fmt::print(out, "{},{},gamma,1,{}\n", t, i, tr.gamma[t - 1][i - 1]);
      emit(t, i, "y", tr.y[t - 1][i - 1]);
    }
  }
}

Trace read_trace_csv(std::istream& in, const ChainModel& model, const InputRule& inputs) {
  std::string line;
  if (!std::getline(in, line) || line != "t,i,kind,component,value") {
    throw ParseError("trace CSV: line 1: expected header t,i,kind,component,value");
  }
  struct Row {
    int t, i, comp;
    std::string kind;
    double value;
  };
  std::vector<Row> rows;
  int horizon = 0;
  for (int lineno = 2; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    auto bad = [&](const std::string& why) { throw ParseError(fmt::format("trace CSV: line {}: {}", lineno, why)); };
    if (cells.size() != 5) bad("expected 5 columns");
    Row r{};
    auto parse_int = [&](const std::string& s) {
      int v = 0;
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size()) bad("bad integer \"" + s + "\"");
      return v;
    };
    r.t = parse_int(cells[0]);
    r.i = parse_int(cells[1]);
    r.kind = cells[2];
    r.comp = parse_int(cells[3]);
    const auto res = std::from_chars(cells[4].data(), cells[4].data() + cells[4].size(), r.value);
    if (res.ec != std::errc() || res.ptr != cells[4].data() + cells[4].size()) bad("bad number \"" + cells[4] + "\"");
    if (r.i < 1 || r.i > model.length() || r.t < 1 || r.comp < 1) bad("index out of range");
    if (r.kind == "y") horizon = std::max(horizon, r.t);
    rows.push_back(std::move(r));
  }
  if (horizon < 1) throw ParseError("trace CSV: no observations");
  if (horizon > model.horizon()) throw ParseError("trace CSV: trace horizon exceeds model horizon");

  const int sm = model.length();
  Trace tr;
  tr.horizon = horizon;
  auto sized = [&](int steps, auto size_of) {
    std::vector<std::vector<Vector>> out(steps, std::vector<Vector>(sm));
    for (auto& row : out)
      for (int i = 1; i <= sm; ++i) row[i - 1] = Vector::Zero(size_of(model.dims(i)));
    return out;
  };
  tr.x = sized(horizon + 1, [](const SignalDims& d) { return d.n_x; });
  tr.v = sized(horizon, [](const SignalDims& d) { return d.n_v(); });
  tr.w = tr.v;
  tr.y = sized(horizon, [](const SignalDims& d) { return d.n_y; });
  tr.gamma.assign(horizon, std::vector<int>(sm, 0));
  for (const auto& r : rows) {
    const auto& d = model.dims(r.i);
    auto put = [&](std::vector<std::vector<Vector>>& field, int steps, int offset, int size) {
      if (r.t > steps || r.comp > size) {
        throw ParseError(fmt::format("trace CSV: {} entry (t={},i={},component={}) out of range", r.kind, r.t, r.i, r.comp));
      }
      field[r.t - 1][r.i - 1](offset + r.comp - 1) = r.value;
    };
    if (r.kind == "x") put(tr.x, horizon + 1, 0, d.n_x);
    else if (r.kind == "v_plus") put(tr.v, horizon, 0, d.n_wp);
    else if (r.kind == "v_minus") put(tr.v, horizon, d.n_wp, d.n_wm);
    else if (r.kind == "w_plus") put(tr.w, horizon, 0, d.n_wp);
    else if (r.kind == "w_minus") put(tr.w, horizon, d.n_wp, d.n_wm);
    else if (r.kind == "y") put(tr.y, horizon, 0, d.n_y);
    else if (r.kind == "gamma") {
      if (r.t > horizon || r.comp != 1 || (r.value != 0.0 && r.value != 1.0)) {
        throw ParseError(fmt::format("trace CSV: bad gamma entry at (t={},i={})", r.t, r.i));
      }
      tr.gamma[r.t - 1][r.i - 1] = static_cast<int>(r.value);
    } else {
      throw ParseError("trace CSV: unknown kind \"" + r.kind + "\"");
    }
  }
  const InputRule u = inputs ? inputs : zero_inputs(model);
  for (int t = 1; t <= horizon; ++t) {
    std::vector<Vector> row;
    for (int i = 1; i <= sm; ++i) row.push_back(u(t, i));
    tr.u.push_back(std::move(row));
  }
  return tr;
}

void write_estimates_csv(std::ostream& out, const FilterRun& run, bool moments) {
  out << (moments ? "t,i,component,x_hat,S_diag,T_diag\n" : "t,i,component,x_hat\n");
  for (const auto& state : run.states) {
    for (std::size_t i = 0; i < state.local.size(); ++i) {
      const auto& est = state.local[i];
      for (Eigen::Index c = 0; c < est.x_hat.size(); ++c) {
        if (moments) {
          fmt::print(out, "{},{},{},{},{},{}\n", state.t, i + 1, c + 1, est.x_hat(c), est.S(c, c), est.T(c, c));
        } else {
          fmt::print(out, "{},{},{},{}\n", state.t, i + 1, c + 1, est.x_hat(c));
        }
      }
    }
  }
}

void write_metrics_csv(std::ostream& out, const MseReport& report) {
  out << "scope,t,mse\n";
  for (std::size_t t = 0; t < report.per_t.size(); ++t) fmt::print(out, "per_t,{},{}\n", t + 1, report.per_t[t]);
  fmt::print(out, "aggregate,,{}\n", report.aggregate);
}

}  // namespace sis::io
