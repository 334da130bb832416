// Plain-text outputs: CSV tables with 17 significant digits and LF endings,
// and a text format for dressed frames.
//
// Frame format (one record per line, '#' lines ignored):
//   dressbath-frame 1
//   K <K>
//   two_I <2I>
//   N <N>
//   h_m <value>
//   mode_matrix <K>            followed by K lines of K numbers
//   state <name> <count>       followed by <count> lines "<label> <re> <im>"
// where <name> is m, ket0, ket1 or leak<k>, and <label> lists the pair
// occupation of every slot separated by '.', electron first. Amplitudes that
// are exactly zero are omitted.

#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "dressbath/dressed_frame.hpp"

namespace dressbath {

// Shortest form is not used; every value carries 17 significant digits.
std::string format_number(double v);

using Cell = std::variant<double, long long, std::string>;

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
  // Leading "# seed: <seed>" line, header, rows; LF line endings.
  std::string render(std::uint64_t seed) const;
};

std::string config_label(const Basis& basis, std::size_t i);

std::string write_frame(const DressedFrame& frame);
// Rebuilds the frame on the sectors of `spec`; throws std::runtime_error
// naming the offending line on malformed input.
DressedFrame read_frame(const std::string& text, const SpinBathSpec& spec);

}  // namespace dressbath
