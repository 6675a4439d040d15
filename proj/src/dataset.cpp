#include "transportlab/dataset.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace transportlab {

std::string regime_display(const RegimeSpec& r) {
  switch (r.regime) {
    case Regime::Observational: return "observational";
    case Regime::DoZ: return "do(Z=" + std::to_string(r.z) + ")";
    case Regime::DoS1Z: return "do(S=1,Z=" + std::to_string(r.z) + ")";
  }
  return "observational";
}

std::string regime_tag(const RegimeSpec& r) {
  switch (r.regime) {
    case Regime::Observational: return "obs";
    case Regime::DoZ: return "do_z" + std::to_string(r.z);
    case Regime::DoS1Z: return "do_s1_z" + std::to_string(r.z);
  }
  return "obs";
}

RegimeSpec regime_from_tag(std::string_view tag) {
  if (tag == "obs" || tag == "observational") return {Regime::Observational, -1};
  if (tag == "do_z0" || tag == "do(Z=0)") return {Regime::DoZ, 0};
  if (tag == "do_z1" || tag == "do(Z=1)") return {Regime::DoZ, 1};
  if (tag == "do_s1_z0" || tag == "do(S=1,Z=0)") return {Regime::DoS1Z, 0};
  if (tag == "do_s1_z1" || tag == "do(S=1,Z=1)") return {Regime::DoS1Z, 1};
  fail(Err::ParseError, "unknown regime " + std::string(tag) +
                            " (want obs, do_z0, do_z1, do_s1_z0, do_s1_z1)");
}

namespace {

void append_cell(std::string& out, std::int8_t v) {
  if (v == kNA) {
    out += "NA";
  } else {
    out += std::to_string(static_cast<int>(v));
  }
}

std::int8_t parse_cell(std::string_view tok, std::size_t line_no) {
  if (tok == "NA") return kNA;
  int v = 0;
  const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size() || v < 0 || v > 127)
    fail(Err::ParseError,
         "bad CSV cell '" + std::string(tok) + "' on line " + std::to_string(line_no));
  return static_cast<std::int8_t>(v);
}

}  // namespace

std::string dataset_to_csv(const Dataset& d) {
  std::string out = "x,s,z,a,y\n";
  out.reserve(out.size() + d.size() * 10);
  for (std::size_t i = 0; i < d.size(); ++i) {
    append_cell(out, d.x[i]);
    out += ',';
    append_cell(out, d.s[i]);
    out += ',';
    append_cell(out, d.z[i]);
    out += ',';
    append_cell(out, d.a[i]);
    out += ',';
    append_cell(out, d.y[i]);
    out += '\n';
  }
  return out;
}

Dataset dataset_from_csv(std::string_view text) {
  Dataset d;
  std::size_t pos = 0, line_no = 0;
  bool saw_na = false;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "x,s,z,a,y")
        fail(Err::ParseError, "CSV header must be exactly 'x,s,z,a,y', got '" +
                                  std::string(line) + "'");
      continue;
    }
    std::int8_t cells[5];
    std::size_t field = 0, start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        if (field >= 5)
          fail(Err::ParseError, "too many columns on line " + std::to_string(line_no));
        cells[field++] = parse_cell(line.substr(start, i - start), line_no);
        start = i + 1;
      }
    }
    if (field != 5) fail(Err::ParseError, "want 5 columns on line " + std::to_string(line_no));
    d.x.push_back(cells[0]);
    d.s.push_back(cells[1]);
    d.z.push_back(cells[2]);
    d.a.push_back(cells[3]);
    d.y.push_back(cells[4]);
    saw_na = saw_na || cells[2] == kNA || cells[3] == kNA || cells[4] == kNA;
  }
  d.provenance.masked = saw_na;
  return d;
}

void save_dataset_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Err::IoError, "cannot write " + path);
  out << dataset_to_csv(d);
}

Dataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return dataset_from_csv(ss.str());
}

}  // namespace transportlab
