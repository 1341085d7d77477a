#ifndef SEQTRAIN_CSV_HPP_
#define SEQTRAIN_CSV_HPP_

#include <filesystem>
#include <iosfwd>

#include "seqtrain/dataset.hpp"

namespace seqtrain {

// Dataset CSV: header `u1,u2,...,ud,target`, one sample per row, reals with
// 17 significant digits, LF endings. Provenance is not stored; read_csv
// returns a raw dataset.

void write_csv(std::ostream& out, const Datasetd& ds);
void write_csv(const std::filesystem::path& path, const Datasetd& ds);

Datasetd read_csv(std::istream& in);
Datasetd read_csv(const std::filesystem::path& path);

}  // namespace seqtrain

#endif  // SEQTRAIN_CSV_HPP_
