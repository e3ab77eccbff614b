#include "ncurve/dataset_io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "ncurve/errors.hpp"

namespace ncurve {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

SequenceFormat sequence_format_from_string(const std::string& name) {
  if (name == "auto") return SequenceFormat::Auto;
  if (name == "jsonl") return SequenceFormat::Jsonl;
  if (name == "csv") return SequenceFormat::Csv;
  throw InvalidConfig("unknown sequence format '" + name + "'");
}

namespace {

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCategory::Data, "cannot open " + path.string());
  }
  return in;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCategory::Data, "cannot write " + path.string());
  }
  return out;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

SequenceDataset load_jsonl(const fs::path& path) {
  auto in = open_input(path);
  SequenceDataset ds;
  std::string line;
  std::size_t lineno = 0;
  std::size_t n = 0;
  Eigen::Index d = 0;
  bool any_control = false;
  std::vector<bool> has_control;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) {
      continue;
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("points") || !j["points"].is_array()) {
      throw ParseError(lineno, "expected an object with a 'points' array");
    }
    const auto& pts = j["points"];
    if (pts.empty() || !pts[0].is_array() || pts[0].empty()) {
      throw ParseError(lineno, "'points' must be a non-empty array of coordinate arrays");
    }
    const auto steps = pts.size();
    const auto dim = static_cast<Eigen::Index>(pts[0].size());
    if (ds.sequences.empty()) {
      n = steps;
      d = dim;
    } else if (steps != n) {
      throw RaggedSequence(lineno, "sequence has " + std::to_string(steps) +
                                       " steps, expected " + std::to_string(n));
    }
    Sequence s(d, static_cast<Eigen::Index>(steps));
    for (std::size_t i = 0; i < steps; ++i) {
      if (!pts[i].is_array()) {
        throw ParseError(lineno, "point " + std::to_string(i) + " is not an array");
      }
      if (static_cast<Eigen::Index>(pts[i].size()) != d) {
        throw RaggedSequence(lineno, "point " + std::to_string(i) + " has dimension " +
                                         std::to_string(pts[i].size()) + ", expected " +
                                         std::to_string(d));
      }
      for (Eigen::Index a = 0; a < d; ++a) {
        const auto& v = pts[i][static_cast<std::size_t>(a)];
        if (!v.is_number()) {
          throw ParseError(lineno, "non-numeric coordinate");
        }
        s(a, static_cast<Eigen::Index>(i)) = v.get<double>();
      }
    }
    std::vector<double> control;
    const bool with_control = j.contains("control") && !j["control"].is_null();
    if (with_control) {
      try {
        control = j["control"].get<std::vector<double>>();
      } catch (const nlohmann::json::exception&) {
        throw ParseError(lineno, "'control' must be an array of numbers");
      }
      if (control.size() != steps) {
        throw RaggedSequence(lineno, "control has " + std::to_string(control.size()) +
                                         " values, expected " + std::to_string(steps));
      }
      any_control = true;
    }
    std::string id = std::to_string(ds.sequences.size());
    if (j.contains("id")) {
      id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
    }
    ds.ids.push_back(std::move(id));
    ds.sequences.push_back(std::move(s));
    ds.controls.push_back(std::move(control));
    has_control.push_back(with_control);
  }
  if (ds.sequences.empty()) {
    throw EmptyFile(path.string() + " contains no sequences");
  }
  if (any_control) {
    for (std::size_t j = 0; j < has_control.size(); ++j) {
      if (!has_control[j]) {
        throw RaggedSequence(j + 1, "control channel missing on some sequences");
      }
    }
  } else {
    ds.controls.clear();
  }
  return ds;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

double parse_number(const std::string& cell, std::size_t lineno) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) {
      throw std::invalid_argument(cell);
    }
    return v;
  } catch (const std::exception&) {
    throw ParseError(lineno, "not a number: '" + cell + "'");
  }
}

SequenceDataset load_csv(const fs::path& path) {
  auto in = open_input(path);
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!blank(line)) {
      header = split_csv(line);
      break;
    }
  }
  if (header.empty()) {
    throw EmptyFile(path.string() + " is empty");
  }
  if (header.size() < 3 || header[0] != "seq_id" || header[1] != "step") {
    throw ParseError(lineno, "header must start with seq_id,step,x0");
  }
  const bool with_control = header.back() == "control";
  const std::size_t d = header.size() - 2 - (with_control ? 1 : 0);
  if (d == 0) {
    throw ParseError(lineno, "no coordinate columns");
  }
  for (std::size_t a = 0; a < d; ++a) {
    if (header[2 + a] != "x" + std::to_string(a)) {
      throw ParseError(lineno, "expected column x" + std::to_string(a));
    }
  }

  struct Row {
    std::vector<double> x;
    double control;
  };
  std::vector<std::string> order;
  std::map<std::string, std::vector<Row>> rows;
  std::map<std::string, std::size_t> first_line;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) {
      continue;
    }
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw ParseError(lineno, "expected " + std::to_string(header.size()) + " columns, got " +
                                   std::to_string(cells.size()));
    }
    const std::string& id = cells[0];
    auto& seq_rows = rows[id];
    if (seq_rows.empty()) {
      order.push_back(id);
      first_line[id] = lineno;
    }
    const double step = parse_number(cells[1], lineno);
    if (step != static_cast<double>(seq_rows.size())) {
      throw ParseError(lineno, "sequence '" + id + "' expected step " +
                                   std::to_string(seq_rows.size()));
    }
    Row r{std::vector<double>(d), 0.0};
    for (std::size_t a = 0; a < d; ++a) {
      r.x[a] = parse_number(cells[2 + a], lineno);
    }
    if (with_control) {
      r.control = parse_number(cells.back(), lineno);
    }
    seq_rows.push_back(std::move(r));
  }
  if (order.empty()) {
    throw EmptyFile(path.string() + " contains no sequences");
  }
  SequenceDataset ds;
  const std::size_t n = rows[order.front()].size();
  for (const auto& id : order) {
    const auto& seq_rows = rows[id];
    if (seq_rows.size() != n) {
      throw RaggedSequence(first_line[id], "sequence '" + id + "' has " +
                                               std::to_string(seq_rows.size()) +
                                               " steps, expected " + std::to_string(n));
    }
    Sequence s(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
    std::vector<double> control;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t a = 0; a < d; ++a) {
        s(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(i)) = seq_rows[i].x[a];
      }
      if (with_control) {
        control.push_back(seq_rows[i].control);
      }
    }
    ds.ids.push_back(id);
    ds.sequences.push_back(std::move(s));
    if (with_control) {
      ds.controls.push_back(std::move(control));
    }
  }
  return ds;
}

}  // namespace

SequenceDataset load_sequences(const fs::path& path, const LoadOptions& options) {
  SequenceFormat format = options.format;
  if (format == SequenceFormat::Auto) {
    format = path.extension() == ".csv" ? SequenceFormat::Csv : SequenceFormat::Jsonl;
  }
  SequenceDataset ds = format == SequenceFormat::Csv ? load_csv(path) : load_jsonl(path);
  ds.meta = {{"source", path.string()}};
  if (options.scale) {
    const MinMaxScaler scaler = fit_scaler(ds);
    apply_scaler(ds, scaler);
    ds.scaler = scaler;
  }
  return ds;
}

void save_jsonl(const SequenceDataset& data, const fs::path& path) {
  data.validate();
  auto out = open_output(path);
  for (std::size_t j = 0; j < data.size(); ++j) {
    const Sequence& s = data.sequences[j];
    // hand-written so every number uses the same %.17g formatting as CSV output
    out << "{\"id\":" << nlohmann::json(data.ids.empty() ? std::to_string(j) : data.ids[j]).dump()
        << ",\"points\":[";
    for (Eigen::Index i = 0; i < s.cols(); ++i) {
      out << (i ? ",[" : "[");
      for (Eigen::Index a = 0; a < s.rows(); ++a) {
        out << (a ? "," : "") << format_double(s(a, i));
      }
      out << "]";
    }
    out << "]";
    if (data.has_control()) {
      out << ",\"control\":[";
      for (std::size_t i = 0; i < data.controls[j].size(); ++i) {
        out << (i ? "," : "") << format_double(data.controls[j][i]);
      }
      out << "]";
    }
    out << "}\n";
  }
  if (!out) {
    throw Error(ErrorCategory::Data, "failed writing " + path.string());
  }
}

void save_csv(const SequenceDataset& data, const fs::path& path) {
  data.validate();
  auto out = open_output(path);
  out << "seq_id,step";
  for (Eigen::Index a = 0; a < data.dim(); ++a) {
    out << ",x" << a;
  }
  if (data.has_control()) {
    out << ",control";
  }
  out << "\n";
  for (std::size_t j = 0; j < data.size(); ++j) {
    const Sequence& s = data.sequences[j];
    const std::string id = data.ids.empty() ? std::to_string(j) : data.ids[j];
    for (Eigen::Index i = 0; i < s.cols(); ++i) {
      out << id << "," << i;
      for (Eigen::Index a = 0; a < s.rows(); ++a) {
        out << "," << format_double(s(a, i));
      }
      if (data.has_control()) {
        out << "," << format_double(data.controls[j][static_cast<std::size_t>(i)]);
      }
      out << "\n";
    }
  }
  if (!out) {
    throw Error(ErrorCategory::Data, "failed writing " + path.string());
  }
}

MinMaxScaler fit_scaler(const SequenceDataset& data) {
  if (data.sequences.empty()) {
    throw EmptyInput("cannot fit a scaler on an empty dataset");
  }
  const Eigen::Index d = data.dim();
  MinMaxScaler s{Vector::Constant(d, std::numeric_limits<double>::infinity()),
                 Vector::Constant(d, -std::numeric_limits<double>::infinity())};
  for (const auto& seq : data.sequences) {
    s.lo = s.lo.cwiseMin(seq.rowwise().minCoeff());
    s.hi = s.hi.cwiseMax(seq.rowwise().maxCoeff());
  }
  return s;
}

void apply_scaler(SequenceDataset& data, const MinMaxScaler& scaler) {
  for (auto& seq : data.sequences) {
    for (Eigen::Index i = 0; i < seq.cols(); ++i) {
      for (Eigen::Index a = 0; a < seq.rows(); ++a) {
        seq(a, i) = scaler.forward(seq(a, i), a);
      }
    }
  }
}

void invert_scaler(SequenceDataset& data, const MinMaxScaler& scaler) {
  for (auto& seq : data.sequences) {
    for (Eigen::Index i = 0; i < seq.cols(); ++i) {
      for (Eigen::Index a = 0; a < seq.rows(); ++a) {
        seq(a, i) = scaler.inverse(seq(a, i), a);
      }
    }
  }
}

nlohmann::json scaler_to_json(const MinMaxScaler& scaler) {
  return {{"lo", std::vector<double>(scaler.lo.data(), scaler.lo.data() + scaler.lo.size())},
          {"hi", std::vector<double>(scaler.hi.data(), scaler.hi.data() + scaler.hi.size())}};
}

MinMaxScaler scaler_from_json(const nlohmann::json& j) {
  const auto lo = j.at("lo").get<std::vector<double>>();
  const auto hi = j.at("hi").get<std::vector<double>>();
  if (lo.size() != hi.size()) {
    throw ParseError(0, "scaler lo/hi lengths differ");
  }
  return {Eigen::Map<const Vector>(lo.data(), static_cast<Eigen::Index>(lo.size())),
          Eigen::Map<const Vector>(hi.data(), static_cast<Eigen::Index>(hi.size()))};
}

}  // namespace ncurve
