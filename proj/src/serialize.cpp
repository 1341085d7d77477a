#include "seqtrain/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "text.hpp"

namespace seqtrain {

std::string format_real(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_model(std::ostream& out, const Mlpd& net) {
  const auto arch = net.architecture();
  out << "seqtrain-mlp 1\n";
  out << "input_dim " << arch.input_dim << '\n';
  out << "hidden_widths";
  for (Index w : arch.hidden_widths) out << ' ' << w;
  out << '\n';
  out << "hidden_activation " << to_string(arch.hidden_activation) << '\n';
  out << "output_activation " << to_string(arch.output_activation) << '\n';
  for (std::size_t k = 0; k < net.depth(); ++k) {
    const auto& layer = net.layer(k);
    out << "layer " << k + 1 << ' ' << layer.out_dim() << ' ' << layer.in_dim() << '\n';
    for (Index r = 0; r < layer.out_dim(); ++r) {
      for (Index c = 0; c < layer.in_dim(); ++c) out << (c ? " " : "") << format_real(layer.weights(r, c));
      out << '\n';
    }
    out << "bias";
    for (Index r = 0; r < layer.out_dim(); ++r) out << ' ' << format_real(layer.bias(r));
    out << '\n';
  }
  const auto& head = net.head();
  out << "head " << head.in_dim() << '\n';
  for (Index i = 0; i < head.in_dim(); ++i) out << (i ? " " : "") << format_real(head.weights(i));
  out << '\n';
  out << "bias " << format_real(head.bias) << '\n';
  out << "end\n";
}

void save_model(const std::filesystem::path& path, const Mlpd& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_model(out, net);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::vector<std::string_view> next(std::size_t expected_min = 1) {
    if (!std::getline(in_, line_)) throw ParseError(line_no_ + 1, "unexpected end of model file");
    ++line_no_;
    auto tokens = text::split(line_, ' ');
    if (tokens.size() < expected_min) fail("too few fields");
    return tokens;
  }

  std::vector<std::string_view> keyword(std::string_view key, std::size_t expected_min = 1) {
    auto tokens = next(expected_min);
    if (tokens[0] != key) fail("expected '" + std::string(key) + "', got '" + std::string(tokens[0]) + "'");
    return tokens;
  }

  Index integer(std::string_view s) {
    auto v = text::parse_number<long long>(s);
    if (!v || *v < 1) fail("expected a positive integer, got '" + std::string(s) + "'");
    return static_cast<Index>(*v);
  }

  double real(std::string_view s) {
    auto v = text::parse_number<double>(s);
    if (!v) fail("expected a real number, got '" + std::string(s) + "'");
    return *v;
  }

  Activation activation(std::string_view s) {
    auto a = parse_activation(s);
    if (!a) fail("unknown activation '" + std::string(s) + "'");
    return *a;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(line_no_, what); }

 private:
  std::istream& in_;
  std::string line_;
  std::size_t line_no_ = 0;
};

}  // namespace

Mlpd read_model(std::istream& in) {
  LineReader r(in);
  auto magic = r.keyword("seqtrain-mlp", 2);
  if (magic.size() != 2 || magic[1] != "1") r.fail("unsupported model format version");

  auto t = r.keyword("input_dim", 2);
  const Index input_dim = r.integer(t[1]);
  t = r.keyword("hidden_widths", 2);
  std::vector<Index> widths;
  for (std::size_t i = 1; i < t.size(); ++i) widths.push_back(r.integer(t[i]));
  const Activation hidden_act = r.activation(r.keyword("hidden_activation", 2)[1]);
  const Activation output_act = r.activation(r.keyword("output_activation", 2)[1]);

  std::vector<LayerParamsd> layers;
  Index prev = input_dim;
  for (std::size_t k = 0; k < widths.size(); ++k) {
    t = r.keyword("layer", 4);
    if (t.size() != 4 || r.integer(t[1]) != static_cast<Index>(k + 1)) r.fail("layer records out of order");
    const Index rows = r.integer(t[2]);
    const Index cols = r.integer(t[3]);
    if (rows != widths[k] || cols != prev) r.fail("layer shape does not match hidden_widths");
    auto layer = LayerParamsd::zeros(cols, rows);
    for (Index i = 0; i < rows; ++i) {
      auto row = r.next();
      if (static_cast<Index>(row.size()) != cols) r.fail("expected " + std::to_string(cols) + " weights");
      for (Index j = 0; j < cols; ++j) layer.weights(i, j) = r.real(row[static_cast<std::size_t>(j)]);
    }
    t = r.keyword("bias");
    if (static_cast<Index>(t.size()) != rows + 1) r.fail("expected " + std::to_string(rows) + " biases");
    for (Index i = 0; i < rows; ++i) layer.bias(i) = r.real(t[static_cast<std::size_t>(i + 1)]);
    layers.push_back(std::move(layer));
    prev = rows;
  }

  t = r.keyword("head", 2);
  const Index width = r.integer(t[1]);
  if (width != prev) r.fail("head width does not match last hidden layer");
  auto head = OutputHeadd::zeros(width, output_act);
  auto row = r.next();
  if (static_cast<Index>(row.size()) != width) r.fail("expected " + std::to_string(width) + " head weights");
  for (Index i = 0; i < width; ++i) head.weights(i) = r.real(row[static_cast<std::size_t>(i)]);
  t = r.keyword("bias", 2);
  if (t.size() != 2) r.fail("expected one head bias");
  head.bias = r.real(t[1]);
  r.keyword("end");
  return Mlpd(std::move(layers), std::move(head), hidden_act);
}

Mlpd load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_model(in);
}

}  // namespace seqtrain
