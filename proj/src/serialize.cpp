#include "dressbath/serialize.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dressbath {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;  // drop the sign of -0
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void CsvTable::add(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw std::logic_error("CSV row width does not match the header");
  rows.push_back(std::move(row));
}

std::string CsvTable::render(std::uint64_t seed) const {
  std::string out = "# seed: " + std::to_string(seed) + "\n";
  for (std::size_t c = 0; c < columns.size(); ++c) out += (c ? "," : "") + columns[c];
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      std::visit(
          [&out](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) out += format_number(v);
            else if constexpr (std::is_same_v<T, long long>) out += std::to_string(v);
            else out += v;
          },
          row[c]);
    }
    out += '\n';
  }
  return out;
}

std::string config_label(const Basis& basis, std::size_t i) {
  std::string s;
  for (const auto d : basis.config(i)) {
    if (!s.empty()) s += '.';
    s += std::to_string(static_cast<int>(d));
  }
  return s;
}

namespace {

void write_state(std::ostringstream& os, const std::string& name, const KetState& psi) {
  std::vector<std::size_t> nz;
  for (std::size_t i = 0; i < psi.basis->dim(); ++i)
    if (psi.amps(static_cast<Eigen::Index>(i)) != cplx(0.0, 0.0)) nz.push_back(i);
  os << "state " << name << ' ' << nz.size() << '\n';
  for (const std::size_t i : nz) {
    const cplx a = psi.amps(static_cast<Eigen::Index>(i));
    os << config_label(*psi.basis, i) << ' ' << format_number(a.real()) << ' ' << format_number(a.imag())
       << '\n';
  }
}

class LineReader {
 public:
  explicit LineReader(const std::string& text) : in_(text) {}

  std::istringstream next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++lineno_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#')
        continue;
      return std::istringstream(line);
    }
    fail("unexpected end of input");
  }
  bool done() {
    std::streampos pos = in_.tellg();
    const int saved = lineno_;
    std::string line;
    while (std::getline(in_, line)) {
      if (line.find_first_not_of(" \t\r") != std::string::npos && line[line.find_first_not_of(" \t")] != '#') {
        in_.clear();
        in_.seekg(pos);
        lineno_ = saved;
        return false;
      }
    }
    return true;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error("frame text line " + std::to_string(lineno_) + ": " + what);
  }
  template <class T>
  T keyed(const std::string& key) {
    auto ls = next();
    std::string k;
    T v{};
    if (!(ls >> k >> v) || k != key) fail("expected '" + key + " <value>'");
    return v;
  }

 private:
  std::istringstream in_;
  int lineno_ = 0;
};

double parse_double(LineReader& r, const std::string& tok) {
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) r.fail("bad number '" + tok + "'");
  return v;
}

KetState read_state(LineReader& r, const std::string& expected, const BasisPtr& basis) {
  auto head = r.next();
  std::string kw, name;
  std::size_t count = 0;
  if (!(head >> kw >> name >> count) || kw != "state" || name != expected)
    r.fail("expected 'state " + expected + " <count>'");
  KetState psi = KetState::zero(basis);
  for (std::size_t k = 0; k < count; ++k) {
    auto ls = r.next();
    std::string label, re, im;
    if (!(ls >> label >> re >> im)) r.fail("expected '<label> <re> <im>'");
    std::vector<std::uint8_t> digits;
    std::istringstream lab(label);
    std::string part;
    while (std::getline(lab, part, '.')) {
      int d = -1;
      const auto res = std::from_chars(part.data(), part.data() + part.size(), d);
      if (res.ec != std::errc() || d < 0 || d > 255) r.fail("bad label '" + label + "'");
      digits.push_back(static_cast<std::uint8_t>(d));
    }
    if (digits.size() != static_cast<std::size_t>(basis->layout().slots()))
      r.fail("label '" + label + "' has the wrong number of slots");
    const auto idx = basis->find(digits);
    if (!idx) r.fail("label '" + label + "' is not in " + basis->describe());
    psi.amps(static_cast<Eigen::Index>(*idx)) = cplx(parse_double(r, re), parse_double(r, im));
  }
  return psi;
}

}  // namespace

std::string write_frame(const DressedFrame& frame) {
  std::ostringstream os;
  const Layout& lay = frame.sector->layout();
  os << "dressbath-frame 1\n";
  os << "K " << lay.K << '\n' << "two_I " << lay.two_I << '\n' << "N " << frame.N << '\n';
  os << "h_m " << format_number(frame.h_m) << '\n';
  os << "mode_matrix " << frame.mode_matrix.rows() << '\n';
  for (Eigen::Index i = 0; i < frame.mode_matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < frame.mode_matrix.cols(); ++j)
      os << (j ? " " : "") << format_number(frame.mode_matrix(i, j));
    os << '\n';
  }
  write_state(os, "m", frame.m_state);
  write_state(os, "ket0", frame.ket0);
  write_state(os, "ket1", frame.ket1);
  os << "leak_modes " << frame.leak_modes.size() << '\n';
  for (std::size_t k = 0; k < frame.leak_modes.size(); ++k)
    write_state(os, "leak" + std::to_string(k + 1), frame.leak_modes[k]);
  return os.str();
}

DressedFrame read_frame(const std::string& text, const SpinBathSpec& spec) {
  LineReader r(text);
  {
    auto ls = r.next();
    std::string magic;
    int version = 0;
    if (!(ls >> magic >> version) || magic != "dressbath-frame" || version != 1)
      r.fail("expected header 'dressbath-frame 1'");
  }
  if (r.keyed<int>("K") != spec.K) r.fail("K does not match the spec");
  if (r.keyed<int>("two_I") != spec.two_I) r.fail("two_I does not match the spec");
  DressedFrame f;
  f.N = r.keyed<int>("N");
  f.sector = enumerate_sector(spec, f.N);
  f.nuclear = nuclear_sector(spec, f.N - 1);
  {
    auto ls = r.next();
    std::string k, v;
    if (!(ls >> k >> v) || k != "h_m") r.fail("expected 'h_m <value>'");
    f.h_m = parse_double(r, v);
  }
  const auto rows = r.keyed<Eigen::Index>("mode_matrix");
  f.mode_matrix.resize(rows, rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    auto ls = r.next();
    for (Eigen::Index j = 0; j < rows; ++j) {
      std::string tok;
      if (!(ls >> tok)) r.fail("mode matrix row too short");
      f.mode_matrix(i, j) = parse_double(r, tok);
    }
  }
  f.m_state = read_state(r, "m", f.nuclear);
  f.ket0 = read_state(r, "ket0", f.sector);
  f.ket1 = read_state(r, "ket1", f.sector);
  const auto leaks = r.keyed<std::size_t>("leak_modes");
  for (std::size_t k = 0; k < leaks; ++k)
    f.leak_modes.push_back(read_state(r, "leak" + std::to_string(k + 1), f.sector));
  if (!r.done()) r.fail("trailing content");
  return f;
}

}  // namespace dressbath
