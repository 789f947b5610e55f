#include "aemr/genetics_data.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <unordered_set>

#include "aemr/error.hpp"
#include "aemr/log.hpp"

namespace aemr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Parse: return "ParseError";
    case ErrorCode::NonMonotoneIndex: return "NonMonotoneIndex";
    case ErrorCode::NegativeDistance: return "NegativeDistance";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NonBinaryAllele: return "NonBinaryAllele";
    case ErrorCode::MissingMember: return "MissingMember";
    case ErrorCode::DuplicateMember: return "DuplicateMember";
    case ErrorCode::DuplicateFamily: return "DuplicateFamily";
    case ErrorCode::UnmatchedFamily: return "UnmatchedFamily";
    case ErrorCode::ImpossibleHaplotype: return "ImpossibleHaplotype";
    case ErrorCode::FlankNotHeterozygous: return "FlankNotHeterozygous";
    case ErrorCode::NoHeterozygousFlank: return "NoHeterozygousFlank";
    case ErrorCode::InvalidConditioning: return "InvalidConditioning";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Config: return "ConfigError";
  }
  return "Unknown";
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

// Strips a trailing carriage return so files written on Windows still parse.
std::string_view chomp(const std::string& line) {
  std::string_view view(line);
  if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
  return view;
}

[[noreturn]] void fail_at(ErrorCode code, std::string_view what,
                          std::size_t line_no, const std::string& message) {
  std::ostringstream os;
  os << what << " line " << line_no << ": " << message;
  throw Error(code, os.str());
}

std::optional<double> parse_real(std::string_view text) {
  if (text == "inf" || text == "Inf" || text == "+inf") {
    return std::numeric_limits<double>::infinity();
  }
  double value = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (!text.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || begin == end) return std::nullopt;
  return value;
}

std::optional<std::size_t> parse_index(std::string_view text) {
  std::size_t value = 0;
  auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    return std::nullopt;
  }
  return value;
}

bool is_missing(std::string_view text) {
  return text.empty() || text == "NA" || text == "na" || text == "." ||
         text == "nan" || text == "NaN";
}

void expect_header(std::istream& in, std::string_view what,
                   const std::vector<std::string_view>& columns) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::Parse, std::string(what) + ": empty file");
  }
  const auto fields = split_tabs(chomp(line));
  if (fields != columns) {
    std::string expected;
    for (auto c : columns) {
      if (!expected.empty()) expected += "\\t";
      expected += c;
    }
    fail_at(ErrorCode::Parse, what, 1, "expected header '" + expected + "'");
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::Parse, "cannot open '" + path.string() + "'");
  }
  return in;
}

}  // namespace

std::string format_exact(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, ptr);
}

// ---------------------------------------------------------------------------

GeneticMap::GeneticMap(std::string chromosome, std::vector<MapLocus> loci)
    : chromosome_(std::move(chromosome)), loci_(std::move(loci)) {
  for (std::size_t k = 1; k < loci_.size(); ++k) {
    const double d = loci_[k].cm_from_prev;
    if (std::isnan(d) || d < 0.0) {
      throw Error(ErrorCode::NegativeDistance,
                  "locus " + std::to_string(k + 1) +
                      " has invalid distance " + format_exact(d));
    }
  }
}

const MapLocus& GeneticMap::at(Locus j) const {
  if (!contains(j)) {
    throw Error(ErrorCode::InvalidArgument,
                "locus " + std::to_string(j) + " outside 1.." +
                    std::to_string(loci_.size()));
  }
  return loci_[j - 1];
}

GeneticMap parse_genetic_map(std::istream& in, std::string chromosome) {
  constexpr std::string_view what = "genetic map";
  expect_header(in, what, {"index", "id", "cM"});

  std::vector<MapLocus> loci;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = chomp(line);
    if (view.empty()) continue;
    const auto fields = split_tabs(view);
    if (fields.size() != 3) {
      fail_at(ErrorCode::Parse, what, line_no,
              "expected 3 fields, found " + std::to_string(fields.size()));
    }
    const auto index = parse_index(fields[0]);
    if (!index) fail_at(ErrorCode::Parse, what, line_no, "bad index");
    if (*index != loci.size() + 1) {
      fail_at(ErrorCode::NonMonotoneIndex, what, line_no,
              "expected index " + std::to_string(loci.size() + 1) + ", found " +
                  std::string(fields[0]));
    }
    double cm = 0.0;
    if (loci.empty() && (fields[2] == "-" || fields[2] == "NA")) {
      cm = 0.0;
    } else {
      const auto parsed = parse_real(fields[2]);
      if (!parsed || std::isnan(*parsed)) {
        fail_at(ErrorCode::Parse, what, line_no,
                "bad distance '" + std::string(fields[2]) + "'");
      }
      cm = *parsed;
      if (cm < 0.0 && !loci.empty()) {
        fail_at(ErrorCode::NegativeDistance, what, line_no,
                "negative distance " + std::string(fields[2]));
      }
      if (loci.empty()) cm = 0.0;
    }
    loci.push_back(MapLocus{std::string(fields[1]), cm});
  }
  if (loci.empty()) {
    throw Error(ErrorCode::Parse, "genetic map: no loci");
  }
  return GeneticMap(std::move(chromosome), std::move(loci));
}

GeneticMap load_genetic_map(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_genetic_map(in, path.stem().string());
}

// ---------------------------------------------------------------------------

Cohort::Cohort(GeneticMap map, std::vector<Trio> trios)
    : map_(std::move(map)), trios_(std::move(trios)) {
  const std::size_t p = map_.size();
  std::unordered_set<std::string> seen;
  for (const auto& trio : trios_) {
    if (!seen.insert(trio.family_id).second) {
      throw Error(ErrorCode::DuplicateFamily,
                  "duplicate family id '" + trio.family_id + "'");
    }
    for (const HaplotypePair* pair : {&trio.mother, &trio.father, &trio.offspring}) {
      for (const Haplotype* h : {&pair->maternal, &pair->paternal}) {
        if (h->size() != p) {
          throw Error(ErrorCode::LengthMismatch,
                      "family '" + trio.family_id + "': haplotype of length " +
                          std::to_string(h->size()) + ", map has " +
                          std::to_string(p) + " loci");
        }
        for (Allele a : *h) {
          if (a > 1) {
            throw Error(ErrorCode::NonBinaryAllele,
                        "family '" + trio.family_id + "': allele outside {0,1}");
          }
        }
      }
    }
  }
}

namespace {

struct PartialFamily {
  std::size_t first_line = 0;
  // [member][origin]: member 0 = mother, 1 = father, 2 = offspring.
  std::array<std::array<std::optional<Haplotype>, 2>, 3> rows;
};

int member_slot(std::string_view member) {
  if (member == "M") return 0;
  if (member == "F") return 1;
  if (member == "O") return 2;
  return -1;
}

}  // namespace

Cohort parse_cohort(GeneticMap map, std::istream& haplotypes,
                    std::istream& phenotypes) {
  const std::size_t p = map.size();

  constexpr std::string_view hap_what = "haplotype file";
  expect_header(haplotypes, hap_what, {"family", "member", "origin", "alleles"});

  // Families keep their order of first appearance.
  std::vector<std::string> order;
  std::map<std::string, PartialFamily, std::less<>> families;

  std::string line;
  std::size_t line_no = 1;
  while (std::getline(haplotypes, line)) {
    ++line_no;
    const auto view = chomp(line);
    if (view.empty()) continue;
    const auto fields = split_tabs(view);
    if (fields.size() != 4) {
      fail_at(ErrorCode::Parse, hap_what, line_no,
              "expected 4 fields, found " + std::to_string(fields.size()));
    }
    const int member = member_slot(fields[1]);
    if (member < 0) {
      fail_at(ErrorCode::Parse, hap_what, line_no,
              "member must be M, F or O, found '" + std::string(fields[1]) + "'");
    }
    int origin = -1;
    if (fields[2] == "m") origin = 0;
    if (fields[2] == "f") origin = 1;
    if (origin < 0) {
      fail_at(ErrorCode::Parse, hap_what, line_no,
              "origin must be m or f, found '" + std::string(fields[2]) + "'");
    }
    const std::string_view alleles = fields[3];
    if (alleles.size() != p) {
      fail_at(ErrorCode::LengthMismatch, hap_what, line_no,
              "haplotype has " + std::to_string(alleles.size()) +
                  " alleles, map has " + std::to_string(p));
    }
    Haplotype hap(p);
    for (std::size_t k = 0; k < p; ++k) {
      const char c = alleles[k];
      if (c != '0' && c != '1') {
        fail_at(ErrorCode::NonBinaryAllele, hap_what, line_no,
                std::string("allele '") + c + "' at locus " +
                    std::to_string(k + 1));
      }
      hap[k] = static_cast<Allele>(c - '0');
    }

    const std::string family(fields[0]);
    auto [it, inserted] = families.try_emplace(family);
    if (inserted) {
      it->second.first_line = line_no;
      order.push_back(family);
    }
    auto& slot = it->second.rows[member][origin];
    if (slot) {
      fail_at(ErrorCode::DuplicateMember, hap_what, line_no,
              "duplicate row for family '" + family + "'");
    }
    slot = std::move(hap);
  }

  constexpr std::string_view phe_what = "phenotype file";
  expect_header(phenotypes, phe_what, {"family", "D", "Y"});
  struct Phenotype {
    std::optional<double> exposure;
    std::optional<double> outcome;
  };
  std::map<std::string, Phenotype, std::less<>> phenos;
  line_no = 1;
  while (std::getline(phenotypes, line)) {
    ++line_no;
    const auto view = chomp(line);
    if (view.empty()) continue;
    const auto fields = split_tabs(view);
    if (fields.size() != 3) {
      fail_at(ErrorCode::Parse, phe_what, line_no,
              "expected 3 fields, found " + std::to_string(fields.size()));
    }
    Phenotype ph;
    for (int c = 0; c < 2; ++c) {
      const auto text = fields[1 + c];
      std::optional<double> value;
      if (!is_missing(text)) {
        value = parse_real(text);
        if (!value || !std::isfinite(*value)) {
          fail_at(ErrorCode::Parse, phe_what, line_no,
                  "bad phenotype value '" + std::string(text) + "'");
        }
      }
      (c == 0 ? ph.exposure : ph.outcome) = value;
    }
    const std::string family(fields[0]);
    if (!families.contains(family)) {
      fail_at(ErrorCode::UnmatchedFamily, phe_what, line_no,
              "family '" + family + "' has no haplotype rows");
    }
    if (!phenos.emplace(family, ph).second) {
      fail_at(ErrorCode::DuplicateFamily, phe_what, line_no,
              "duplicate phenotype row for family '" + family + "'");
    }
  }

  std::vector<Trio> trios;
  trios.reserve(order.size());
  std::size_t dropped = 0;
  for (const auto& family : order) {
    const auto& partial = families.at(family);
    static constexpr std::array<std::string_view, 3> member_names{"M", "F", "O"};
    for (int m = 0; m < 3; ++m) {
      for (int o = 0; o < 2; ++o) {
        if (!partial.rows[m][o]) {
          throw Error(ErrorCode::MissingMember,
                      "family '" + family + "' lacks row " +
                          std::string(member_names[m]) + "/" + (o == 0 ? "m" : "f"));
        }
      }
    }
    const auto ph = phenos.find(family);
    if (ph == phenos.end()) {
      throw Error(ErrorCode::UnmatchedFamily,
                  "family '" + family + "' has no phenotype row");
    }
    if (!ph->second.exposure || !ph->second.outcome) {
      ++dropped;
      log::warn("family '" + family + "' has a missing phenotype; excluded");
      continue;
    }
    auto take = [&](int m) {
      return HaplotypePair{*partial.rows[m][0], *partial.rows[m][1]};
    };
    trios.push_back(Trio{family, take(0), take(1), take(2),
                         *ph->second.exposure, *ph->second.outcome});
  }
  if (dropped > 0) {
    log::warn(std::to_string(dropped) +
              " famil" + (dropped == 1 ? "y" : "ies") +
              " excluded for missing phenotypes");
  }
  return Cohort(std::move(map), std::move(trios));
}

Cohort load_cohort(GeneticMap map, const std::filesystem::path& haplotype_path,
                   const std::filesystem::path& phenotype_path) {
  auto hap = open_input(haplotype_path);
  auto phe = open_input(phenotype_path);
  return parse_cohort(std::move(map), hap, phe);
}

// ---------------------------------------------------------------------------

void write_genetic_map(const GeneticMap& map, std::ostream& out) {
  out << "index\tid\tcM\n";
  for (std::size_t k = 0; k < map.size(); ++k) {
    const auto& locus = map.loci()[k];
    out << (k + 1) << '\t' << locus.id << '\t'
        << (k == 0 ? std::string("0") : format_exact(locus.cm_from_prev))
        << '\n';
  }
}

void write_haplotypes(const Cohort& cohort, std::ostream& out) {
  out << "family\tmember\torigin\talleles\n";
  std::string text;
  auto row = [&](const std::string& family, char member, char origin,
                 const Haplotype& h) {
    text.assign(h.size(), '0');
    for (std::size_t k = 0; k < h.size(); ++k) text[k] = static_cast<char>('0' + h[k]);
    out << family << '\t' << member << '\t' << origin << '\t' << text << '\n';
  };
  for (const auto& t : cohort.trios()) {
    row(t.family_id, 'M', 'm', t.mother.maternal);
    row(t.family_id, 'M', 'f', t.mother.paternal);
    row(t.family_id, 'F', 'm', t.father.maternal);
    row(t.family_id, 'F', 'f', t.father.paternal);
    row(t.family_id, 'O', 'm', t.offspring.maternal);
    row(t.family_id, 'O', 'f', t.offspring.paternal);
  }
}

void write_phenotypes(const Cohort& cohort, std::ostream& out) {
  out << "family\tD\tY\n";
  for (const auto& t : cohort.trios()) {
    out << t.family_id << '\t' << format_exact(t.exposure) << '\t'
        << format_exact(t.outcome) << '\n';
  }
}

CohortFiles cohort_files_in(const std::filesystem::path& directory) {
  return CohortFiles{directory / "map.tsv", directory / "haplotypes.tsv",
                     directory / "phenotypes.tsv"};
}

void write_cohort(const Cohort& cohort, const CohortFiles& files) {
  auto open = [](const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
      throw Error(ErrorCode::InvalidArgument,
                  "cannot write '" + path.string() + "'");
    }
    return out;
  };
  {
    auto out = open(files.map);
    write_genetic_map(cohort.map(), out);
  }
  {
    auto out = open(files.haplotypes);
    write_haplotypes(cohort, out);
  }
  {
    auto out = open(files.phenotypes);
    write_phenotypes(cohort, out);
  }
}

// ---------------------------------------------------------------------------

std::vector<MendelianViolation> validate_mendelian(const Trio& trio,
                                                   double epsilon) {
  std::vector<MendelianViolation> violations;
  const Severity severity = epsilon > 0.0 ? Severity::Warning : Severity::Error;
  const std::size_t p = trio.offspring.size();
  for (Origin side : {Origin::Maternal, Origin::Paternal}) {
    const auto& parent = trio.parent(side);
    const auto& child = trio.transmitted(side);
    for (std::size_t k = 0; k < p; ++k) {
      if (child[k] != parent.maternal[k] && child[k] != parent.paternal[k]) {
        violations.push_back(MendelianViolation{k + 1, side, severity});
      }
    }
  }
  return violations;
}

}  // namespace aemr
