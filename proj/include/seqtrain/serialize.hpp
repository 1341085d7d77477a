#ifndef SEQTRAIN_SERIALIZE_HPP_
#define SEQTRAIN_SERIALIZE_HPP_

#include <filesystem>
#include <iosfwd>
#include <string>

#include "seqtrain/network.hpp"

namespace seqtrain {

// Plain-text model format, one record per line, tokens separated by single
// spaces, LF line endings. Reals are written with 17 significant digits so
// finite values round-trip bit-exactly.
//
//   seqtrain-mlp 1
//   input_dim <d>
//   hidden_widths <w_1> ... <w_L>
//   hidden_activation <relu|identity|tanh>
//   output_activation <relu|identity|tanh>
//   layer <k> <rows> <cols>          repeated for k = 1..L, followed by
//   <rows lines of cols reals>       the weight matrix row by row
//   bias <rows reals>
//   head <width>
//   <width reals>
//   bias <real>
//   end

void write_model(std::ostream& out, const Mlpd& net);
void save_model(const std::filesystem::path& path, const Mlpd& net);

/// Throws ParseError (with the offending line) on malformed input and
/// ContractViolation if the decoded parameters do not form a valid network.
Mlpd read_model(std::istream& in);
Mlpd load_model(const std::filesystem::path& path);

/// Shortest form that is bit-exact on read-back ("%.17g").
std::string format_real(double value);

}  // namespace seqtrain

#endif  // SEQTRAIN_SERIALIZE_HPP_
