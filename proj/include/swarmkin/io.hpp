#pragma once

// Text serialisation of fields and particles, plus the CSV convention used by
// every tool: a `# config_hash=<hex>` comment line, a header row, data rows.

#include <iosfwd>
#include <string>
#include <vector>

#include "swarmkin/core.hpp"
#include "swarmkin/particles.hpp"

namespace swarmkin {

/// Field dump layout:
///
///   SWARMKIN-FIELD 1
///   axes 4
///   x <lo> <hi> <n>
///   y <lo> <hi> <n>
///   u <lo> <hi> <n>
///   w <lo> <hi> <n>
///   meta <free text, single line>
///   values <count>
///   <value> ... (row-major, x slowest, w fastest; 17 significant digits)
void write_field(std::ostream& out, const DistributionField& f, const std::string& meta = "");
DistributionField read_field(std::istream& in);
void dump_field(const DistributionField& f, const std::string& path, const std::string& meta = "");
DistributionField load_field(const std::string& path);

/// CSV with header `x,y,u,w`.
void write_particles_csv(const std::string& path, const ParticleEnsemble& e,
                         const std::string& config_hash = "");
ParticleEnsemble read_particles_csv(const std::string& path);

/// Writes `# config_hash=...`, the header and the rows. Doubles use the
/// shortest representation that reads back to the same value.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& config_hash,
            const std::vector<std::string>& columns);
  CsvWriter(std::ostream& out, const std::string& config_hash,
            const std::vector<std::string>& columns);
  ~CsvWriter();

  CsvWriter& cell(double v);
  CsvWriter& cell(long v);
  CsvWriter& cell(int v) { return cell(static_cast<long>(v)); }
  CsvWriter& cell(const std::string& v);
  void end_row();

 private:
  std::ostream* out_;
  std::ostream* owned_ = nullptr;
  bool first_ = true;
};

std::string format_double(double v);

}  // namespace swarmkin
