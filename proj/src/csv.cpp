#include "seqtrain/csv.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "seqtrain/serialize.hpp"
#include "text.hpp"

namespace seqtrain {

void write_csv(std::ostream& out, const Datasetd& ds) {
  for (Index j = 0; j < ds.input_dim(); ++j) out << 'u' << j + 1 << ',';
  out << "target\n";
  for (Index i = 0; i < ds.size(); ++i) {
    for (Index j = 0; j < ds.input_dim(); ++j) out << format_real(ds.inputs(i, j)) << ',';
    out << format_real(ds.targets(i)) << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const Datasetd& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_csv(out, ds);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Datasetd read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  const auto header = text::split(line, ',');
  const std::size_t d = header.size() - 1;
  if (header.size() < 2 || header.back() != "target") throw ParseError(1, "header must end with 'target'");
  for (std::size_t j = 0; j < d; ++j)
    if (header[j] != "u" + std::to_string(j + 1))
      throw ParseError(1, "expected column 'u" + std::to_string(j + 1) + "', got '" + std::string(header[j]) + "'");

  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = text::split(line, ',');
    if (fields.size() != d + 1)
      throw ParseError(line_no, "expected " + std::to_string(d + 1) + " fields, got " + std::to_string(fields.size()));
    for (auto f : fields) {
      auto v = text::parse_number<double>(f);
      if (!v) throw ParseError(line_no, "malformed number '" + std::string(f) + "'");
      values.push_back(*v);
    }
  }
  const auto n = static_cast<Index>(values.size() / (d + 1));
  Matrix<double> inputs(n, static_cast<Index>(d));
  Vector<double> targets(n);
  for (Index i = 0; i < n; ++i) {
    const std::size_t base = static_cast<std::size_t>(i) * (d + 1);
    for (std::size_t j = 0; j < d; ++j) inputs(i, static_cast<Index>(j)) = values[base + j];
    targets(i) = values[base + d];
  }
  return Datasetd(std::move(inputs), std::move(targets));
}

Datasetd read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_csv(in);
}

}  // namespace seqtrain
