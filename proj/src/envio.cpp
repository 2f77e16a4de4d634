#include "vrh/envio.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace vrh {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

namespace {

double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::runtime_error("line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  return v;
}

}  // namespace

void write_env(std::ostream& out, const MarkedPointSet& env) {
  const WindowSpec& w = env.window();
  const Provenance& p = env.provenance();
  json h;
  h["format"] = "vrh-env/1";
  h["dim"] = w.dim;
  h["half_side"] = w.half_side;
  h["boundary"] = to_string(w.boundary);
  h["pad"] = w.pad;
  h["cell_size"] = env.index().cell_size();
  h["origin_pinned"] = env.origin_pinned();
  h["points"] = env.size();
  h["marks"] = env.has_marks();
  h["kind"] = p.kind;
  h["intensity"] = p.intensity;
  h["seed"] = p.seed;
  if (p.mark_exponent) {
    h["mark_exponent"] = *p.mark_exponent;
    h["mark_seed"] = p.mark_seed;
  }
  out << "# " << h.dump() << '\n';
  std::string row;
  for (std::size_t i = 0; i < env.size(); ++i) {
    row.clear();
    for (int k = 0; k < w.dim; ++k) {
      if (k) row += ' ';
      row += format_double(env.point(i)[k]);
    }
    if (env.has_marks()) {
      row += ' ';
      row += format_double(env.mark(i));
    }
    row += '\n';
    out << row;
  }
}

MarkedPointSet read_env(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw std::runtime_error("missing '# {json}' header");
  json h;
  try {
    h = json::parse(line.substr(2));
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("bad header: ") + e.what());
  }
  if (h.value("format", "") != "vrh-env/1") throw std::runtime_error("unsupported environment format");
  WindowSpec w;
  w.dim = h.at("dim").get<int>();
  w.half_side = h.at("half_side").get<double>();
  w.boundary = boundary_from_string(h.at("boundary").get<std::string>());
  w.pad = h.at("pad").get<double>();
  w.validate();
  Provenance p;
  p.kind = h.at("kind").get<std::string>();
  p.intensity = h.at("intensity").get<double>();
  p.seed = h.at("seed").get<std::uint64_t>();
  if (h.contains("mark_exponent")) {
    p.mark_exponent = h["mark_exponent"].get<double>();
    p.mark_seed = h.at("mark_seed").get<std::uint64_t>();
  }
  const bool marked = h.at("marks").get<bool>();
  const auto n = h.at("points").get<std::size_t>();
  std::vector<Point> pts;
  std::vector<double> marks;
  pts.reserve(n);
  const int cols = w.dim + (marked ? 1 : 0);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Point pt{0.0, 0.0, 0.0};
    std::string_view rest(line);
    for (int c = 0; c < cols; ++c) {
      const auto start = rest.find_first_not_of(' ');
      if (start == std::string_view::npos)
        throw std::runtime_error("line " + std::to_string(lineno) + ": expected " + std::to_string(cols) + " columns");
      rest.remove_prefix(start);
      const auto end = rest.find(' ');
      const double v = parse_double(rest.substr(0, end), lineno);
      rest.remove_prefix(end == std::string_view::npos ? rest.size() : end);
      if (c < w.dim)
        pt[c] = v;
      else
        marks.push_back(v);
    }
    if (rest.find_first_not_of(' ') != std::string_view::npos)
      throw std::runtime_error("line " + std::to_string(lineno) + ": too many columns");
    pts.push_back(pt);
  }
  if (pts.size() != n)
    throw std::runtime_error("header declares " + std::to_string(n) + " points, found " + std::to_string(pts.size()));
  return MarkedPointSet(w, std::move(pts), std::move(marks), h.at("origin_pinned").get<bool>(), p,
                        h.at("cell_size").get<double>());
}

void save_env(const std::string& path, const MarkedPointSet& env) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_env(out, env);
  if (!out) throw std::runtime_error("write failed: " + path);
}

MarkedPointSet load_env(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open environment file " + path);
  try {
    return read_env(in);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace vrh
