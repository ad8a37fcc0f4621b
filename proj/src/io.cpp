#include "swarmkin/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace swarmkin {

namespace {

constexpr const char* kMagic = "SWARMKIN-FIELD";
constexpr int kVersion = 1;

[[noreturn]] void format_error(int line, const std::string& what) {
  throw FormatError("field dump, line " + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& s, int line) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) format_error(line, "bad number '" + s + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

namespace {

std::string format_17(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, p);
}

}  // namespace

void write_field(std::ostream& out, const DistributionField& f, const std::string& meta) {
  const auto& g = f.grid;
  out << kMagic << ' ' << kVersion << '\n' << "axes 4\n";
  auto axis = [&](const char* name, const Axis& a) {
    out << name << ' ' << format_17(a.lo) << ' ' << format_17(a.hi) << ' ' << a.n << '\n';
  };
  axis("x", g.x);
  axis("y", g.y);
  axis("u", g.u);
  axis("w", g.w);
  std::string m = meta;
  for (char& c : m)
    if (c == '\n' || c == '\r') c = ' ';
  out << "meta " << m << '\n';
  out << "values " << f.values.size() << '\n';
  const int per_line = g.nw();
  for (std::size_t n = 0; n < f.values.size(); ++n) {
    out << format_17(f.values[n]);
    out << (((n + 1) % per_line == 0) ? '\n' : ' ');
  }
}

DistributionField read_field(std::istream& in) {
  std::string line;
  int lineno = 0;
  auto next = [&]() -> std::istringstream {
    if (!std::getline(in, line)) format_error(lineno + 1, "unexpected end of file in header");
    ++lineno;
    return std::istringstream(line);
  };

  {
    auto s = next();
    std::string magic;
    int version = 0;
    s >> magic >> version;
    if (magic != kMagic) format_error(lineno, "missing " + std::string(kMagic) + " tag");
    if (version != kVersion) format_error(lineno, "unsupported version " + std::to_string(version));
  }
  {
    auto s = next();
    std::string tag;
    int count = 0;
    s >> tag >> count;
    if (tag != "axes") format_error(lineno, "expected 'axes'");
    if (count != 4) format_error(lineno, "expected 4 axes, found " + std::to_string(count));
  }
  Axis axes[4];
  const char* names[4] = {"x", "y", "u", "w"};
  for (int a = 0; a < 4; ++a) {
    auto s = next();
    std::string name, lo, hi;
    int n = 0;
    if (!(s >> name >> lo >> hi >> n) || name != names[a])
      format_error(lineno, std::string("expected axis '") + names[a] + " lo hi n'");
    axes[a] = {parse_double(lo, lineno), parse_double(hi, lineno), n, a >= 2};
  }
  {
    next();
    if (line.rfind("meta", 0) != 0) format_error(lineno, "expected 'meta'");
  }
  std::size_t count = 0;
  {
    auto s = next();
    std::string tag;
    s >> tag >> count;
    if (tag != "values") format_error(lineno, "expected 'values <count>'");
  }

  PhaseGrid grid;
  try {
    grid = make_grid(axes[0], axes[1], axes[2], axes[3]);
  } catch (const ConfigError& e) {
    format_error(lineno, e.what());
  }
  if (count != grid.size())
    format_error(lineno, "header declares " + std::to_string(count) + " values, grid has " +
                             std::to_string(grid.size()));

  DistributionField f(grid);
  std::size_t n = 0;
  std::string tok;
  while (n < count && std::getline(in, line)) {
    ++lineno;
    std::istringstream s(line);
    while (s >> tok) {
      if (n >= count) format_error(lineno, "more values than declared");
      f.values[n++] = parse_double(tok, lineno);
    }
  }
  if (n != count)
    format_error(lineno, "expected " + std::to_string(count) + " values, found " +
                             std::to_string(n));
  return f;
}

void dump_field(const DistributionField& f, const std::string& path, const std::string& meta) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write field dump '" + path + "'");
  write_field(out, f, meta);
  if (!out) throw std::runtime_error("error writing field dump '" + path + "'");
}

DistributionField load_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open field dump '" + path + "'");
  return read_field(in);
}

void write_particles_csv(const std::string& path, const ParticleEnsemble& e,
                         const std::string& config_hash) {
  CsvWriter csv(path, config_hash, {"x", "y", "u", "w"});
  for (std::size_t i = 0; i < e.size(); ++i) {
    csv.cell(e.x[i].x).cell(e.x[i].y).cell(e.v[i].x).cell(e.v[i].y);
    csv.end_row();
  }
}

ParticleEnsemble read_particles_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open particle file '" + path + "'");
  ParticleEnsemble e;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "x,y,u,w")
        throw FormatError("particles, line " + std::to_string(lineno) + ": expected header x,y,u,w");
      header = true;
      continue;
    }
    double v[4];
    std::istringstream s(line);
    std::string tok;
    for (int c = 0; c < 4; ++c) {
      if (!std::getline(s, tok, ','))
        throw FormatError("particles, line " + std::to_string(lineno) + ": expected 4 columns");
      v[c] = std::stod(tok);
    }
    e.x.push_back({v[0], v[1]});
    e.v.push_back({v[2], v[3]});
  }
  return e;
}

CsvWriter::CsvWriter(const std::string& path, const std::string& config_hash,
                     const std::vector<std::string>& columns) {
  auto* f = new std::ofstream(path);
  if (!*f) {
    delete f;
    throw std::runtime_error("cannot write '" + path + "'");
  }
  owned_ = f;
  out_ = f;
  *out_ << "# config_hash=" << config_hash << '\n';
  for (std::size_t c = 0; c < columns.size(); ++c) *out_ << (c ? "," : "") << columns[c];
  *out_ << '\n';
}

CsvWriter::CsvWriter(std::ostream& out, const std::string& config_hash,
                     const std::vector<std::string>& columns)
    : out_(&out) {
  *out_ << "# config_hash=" << config_hash << '\n';
  for (std::size_t c = 0; c < columns.size(); ++c) *out_ << (c ? "," : "") << columns[c];
  *out_ << '\n';
}

CsvWriter::~CsvWriter() { delete owned_; }

CsvWriter& CsvWriter::cell(double v) {
  *out_ << (first_ ? "" : ",") << format_double(v);
  first_ = false;
  return *this;
}

CsvWriter& CsvWriter::cell(long v) {
  *out_ << (first_ ? "" : ",") << v;
  first_ = false;
  return *this;
}

CsvWriter& CsvWriter::cell(const std::string& v) {
  *out_ << (first_ ? "" : ",") << v;
  first_ = false;
  return *this;
}

void CsvWriter::end_row() {
  *out_ << '\n';
  out_->flush();
  first_ = true;
}

}  // namespace swarmkin
