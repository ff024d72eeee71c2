#include "trajpred/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace trajpred {

std::string fmt_double(double v) {
  char buf[40];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::string fmt_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return std::string(buf);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') {
    out.back().pop_back();
  }
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
    throw std::runtime_error(where + ": not a number: '" + s + "'");
  }
  return v;
}

std::int64_t parse_int(const std::string& s, const std::string& where) {
  std::int64_t v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
    throw std::runtime_error(where + ": not an integer: '" + s + "'");
  }
  return v;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::string loc(const std::string& path, std::size_t lineno) {
  return path + ":" + std::to_string(lineno);
}

}  // namespace

TrajectoryFile load_trajectories(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw std::runtime_error(path + ": empty trajectory file");
  const auto header = split_csv_line(lines[0]);
  if (header.size() < 5 || header[0] != "traj_id" || header[1] != "t" || header[2] != "lon" ||
      header[3] != "lat" || header[4] != "alt") {
    throw std::runtime_error(path + ": header must start with traj_id,t,lon,lat,alt");
  }
  TrajectoryFile file;
  file.feature_names.assign(header.begin() + 5, header.end());
  const std::size_t k = file.feature_names.size();

  Trajectory* cur = nullptr;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    const auto cells = split_csv_line(lines[n]);
    if (cells.size() != 5 + k) {
      throw std::runtime_error(loc(path, n + 1) + ": expected " + std::to_string(5 + k) +
                               " columns, got " + std::to_string(cells.size()));
    }
    if (cur == nullptr || cur->id != cells[0]) {
      for (const auto& t : file.trajectories) {
        if (t.id == cells[0]) {
          throw std::runtime_error(loc(path, n + 1) + ": trajectory '" + cells[0] +
                                   "' rows are not contiguous");
        }
      }
      file.trajectories.emplace_back();
      cur = &file.trajectories.back();
      cur->id = cells[0];
    }
    EnrichedState s;
    s.timestamp = parse_int(cells[1], loc(path, n + 1));
    s.position.lon = parse_double(cells[2], loc(path, n + 1));
    s.position.lat = parse_double(cells[3], loc(path, n + 1));
    s.position.alt = parse_double(cells[4], loc(path, n + 1));
    s.features.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
      s.features.push_back(parse_double(cells[5 + i], loc(path, n + 1)));
    }
    cur->states.push_back(std::move(s));
  }
  return file;
}

void save_trajectories(const std::string& path, const std::vector<Trajectory>& trajectories,
                       const std::vector<std::string>& feature_names) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << "traj_id,t,lon,lat,alt";
  for (const auto& f : feature_names) out << ',' << f;
  out << '\n';
  for (const auto& traj : trajectories) {
    for (const auto& s : traj.states) {
      if (s.features.size() != feature_names.size()) {
        throw std::runtime_error("trajectory '" + traj.id + "': state feature arity " +
                                 std::to_string(s.features.size()) + " != schema " +
                                 std::to_string(feature_names.size()));
      }
      out << traj.id << ',' << s.timestamp << ',' << fmt_fixed(s.position.lon, 10) << ','
          << fmt_fixed(s.position.lat, 10) << ',' << fmt_fixed(s.position.alt, 4);
      for (double f : s.features) out << ',' << fmt_double(f);
      out << '\n';
    }
  }
}

WeatherGrid load_weather_grid(const std::string& path) {
  WeatherGrid g;
  // sidecar geometry
  {
    std::ifstream meta_in(path + ".meta", std::ios::binary);
    if (!meta_in) throw std::runtime_error("cannot open grid sidecar: " + path + ".meta");
    std::string line;
    std::map<std::string, std::string> kv;
    std::size_t lineno = 0;
    while (std::getline(meta_in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::string t = line;
      std::size_t a = t.find_first_not_of(" \t");
      if (a == std::string::npos || t[a] == '#') continue;
      std::size_t eq = t.find('=');
      if (eq == std::string::npos) {
        throw std::runtime_error(loc(path + ".meta", lineno) + ": expected 'key = value'");
      }
      auto strip = [](std::string s) {
        std::size_t x = s.find_first_not_of(" \t");
        std::size_t y = s.find_last_not_of(" \t");
        return x == std::string::npos ? std::string() : s.substr(x, y - x + 1);
      };
      kv[strip(t.substr(0, eq))] = strip(t.substr(eq + 1));
    }
    auto need = [&](const std::string& key) {
      auto it = kv.find(key);
      if (it == kv.end()) throw std::runtime_error(path + ".meta: missing key " + key);
      return it->second;
    };
    g.origin_lon = parse_double(need("origin_lon"), path + ".meta");
    g.origin_lat = parse_double(need("origin_lat"), path + ".meta");
    g.origin_alt = parse_double(need("origin_alt"), path + ".meta");
    g.origin_t = parse_int(need("origin_t"), path + ".meta");
    g.cell_lon = parse_double(need("cell_lon"), path + ".meta");
    g.cell_lat = parse_double(need("cell_lat"), path + ".meta");
    g.cell_alt = parse_double(need("cell_alt"), path + ".meta");
    g.cell_t = parse_int(need("cell_t"), path + ".meta");
    g.n_lon = static_cast<int>(parse_int(need("n_lon"), path + ".meta"));
    g.n_lat = static_cast<int>(parse_int(need("n_lat"), path + ".meta"));
    g.n_alt = static_cast<int>(parse_int(need("n_alt"), path + ".meta"));
    g.n_t = static_cast<int>(parse_int(need("n_t"), path + ".meta"));
  }

  const auto lines = read_lines(path);
  if (lines.empty()) throw std::runtime_error(path + ": empty grid file");
  const auto header = split_csv_line(lines[0]);
  if (header.size() < 5 || header[0] != "lon_idx" || header[1] != "lat_idx" ||
      header[2] != "alt_idx" || header[3] != "t_idx") {
    throw std::runtime_error(path + ": header must start with lon_idx,lat_idx,alt_idx,t_idx");
  }
  g.feature_names.assign(header.begin() + 4, header.end());
  const std::size_t k = g.feature_names.size();
  const std::size_t cells = static_cast<std::size_t>(g.n_lon) * g.n_lat * g.n_alt * g.n_t;
  g.values.assign(cells * k, 0.0);
  std::vector<char> seen(cells, 0);
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    const auto c = split_csv_line(lines[n]);
    if (c.size() != 4 + k) {
      throw std::runtime_error(loc(path, n + 1) + ": expected " + std::to_string(4 + k) +
                               " columns");
    }
    const int i = static_cast<int>(parse_int(c[0], loc(path, n + 1)));
    const int j = static_cast<int>(parse_int(c[1], loc(path, n + 1)));
    const int a = static_cast<int>(parse_int(c[2], loc(path, n + 1)));
    const int t = static_cast<int>(parse_int(c[3], loc(path, n + 1)));
    if (i < 0 || i >= g.n_lon || j < 0 || j >= g.n_lat || a < 0 || a >= g.n_alt || t < 0 ||
        t >= g.n_t) {
      throw std::runtime_error(loc(path, n + 1) + ": grid index out of declared bounds");
    }
    double* cell = g.cell(i, j, a, t);
    for (std::size_t f = 0; f < k; ++f) cell[f] = parse_double(c[4 + f], loc(path, n + 1));
    seen[g.flat_index(i, j, a, t) / k] = 1;
  }
  for (std::size_t c = 0; c < cells; ++c) {
    if (!seen[c]) throw std::runtime_error(path + ": grid is missing cells");
  }
  return g;
}

void save_weather_grid(const std::string& path, const WeatherGrid& grid) {
  {
    std::ofstream meta(path + ".meta", std::ios::binary);
    if (!meta) throw std::runtime_error("cannot write: " + path + ".meta");
    meta << "cell_alt = " << fmt_double(grid.cell_alt) << '\n'
         << "cell_lat = " << fmt_double(grid.cell_lat) << '\n'
         << "cell_lon = " << fmt_double(grid.cell_lon) << '\n'
         << "cell_t = " << grid.cell_t << '\n'
         << "n_alt = " << grid.n_alt << '\n'
         << "n_lat = " << grid.n_lat << '\n'
         << "n_lon = " << grid.n_lon << '\n'
         << "n_t = " << grid.n_t << '\n'
         << "origin_alt = " << fmt_double(grid.origin_alt) << '\n'
         << "origin_lat = " << fmt_double(grid.origin_lat) << '\n'
         << "origin_lon = " << fmt_double(grid.origin_lon) << '\n'
         << "origin_t = " << grid.origin_t << '\n';
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << "lon_idx,lat_idx,alt_idx,t_idx";
  for (const auto& f : grid.feature_names) out << ',' << f;
  out << '\n';
  for (int i = 0; i < grid.n_lon; ++i) {
    for (int j = 0; j < grid.n_lat; ++j) {
      for (int a = 0; a < grid.n_alt; ++a) {
        for (int t = 0; t < grid.n_t; ++t) {
          out << i << ',' << j << ',' << a << ',' << t;
          const double* cell = grid.cell(i, j, a, t);
          for (int f = 0; f < grid.feature_count(); ++f) out << ',' << fmt_double(cell[f]);
          out << '\n';
        }
      }
    }
  }
}

ArrivalConditionsTable load_arrivals(const std::string& path, std::int64_t bucket_seconds) {
  if (bucket_seconds <= 0) throw std::runtime_error("bucket_seconds must be positive");
  const auto lines = read_lines(path);
  if (lines.empty()) throw std::runtime_error(path + ": empty arrivals file");
  const auto header = split_csv_line(lines[0]);
  if (header.size() < 3 || header[0] != "airport" || header[1] != "t_bucket") {
    throw std::runtime_error(path + ": header must start with airport,t_bucket");
  }
  ArrivalConditionsTable table;
  table.bucket_seconds = bucket_seconds;
  table.feature_names.assign(header.begin() + 2, header.end());
  const std::size_t k = table.feature_names.size();
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    const auto c = split_csv_line(lines[n]);
    if (c.size() != 2 + k) {
      throw std::runtime_error(loc(path, n + 1) + ": expected " + std::to_string(2 + k) +
                               " columns");
    }
    FeatureVector v;
    v.reserve(k);
    for (std::size_t f = 0; f < k; ++f) v.push_back(parse_double(c[2 + f], loc(path, n + 1)));
    table.rows[{c[0], parse_int(c[1], loc(path, n + 1))}] = std::move(v);
  }
  return table;
}

void save_arrivals(const std::string& path, const ArrivalConditionsTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << "airport,t_bucket";
  for (const auto& f : table.feature_names) out << ',' << f;
  out << '\n';
  for (const auto& [key, v] : table.rows) {
    out << key.first << ',' << key.second;
    for (double x : v) out << ',' << fmt_double(x);
    out << '\n';
  }
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : path_(path), out_(path, std::ios::binary), cols_(header.size()) {
  if (!out_) throw std::runtime_error("cannot write: " + path_);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ << ',';
    out_ << header[i];
  }
  out_ << '\n';
  out_.flush();
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != cols_) {
    throw std::runtime_error(path_ + ": row arity " + std::to_string(cells.size()) +
                             " != header arity " + std::to_string(cols_));
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
  out_.flush();
}

}  // namespace trajpred
