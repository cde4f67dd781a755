#include "carkit/csv.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "carkit/errors.hpp"

namespace carkit {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_double(const std::string& s, const std::string& col, int line_no) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw CsvError("line " + std::to_string(line_no) + ": column '" + col +
                   "': expected a number, got '" + s + "'");
  return v;
}

int parse_int(const std::string& s, const std::string& col, int line_no) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw CsvError("line " + std::to_string(line_no) + ": column '" + col +
                   "': expected an integer, got '" + s + "'");
  return v;
}

Sex parse_sex(const std::string& s, int line_no) {
  if (s == "M") return Sex::male;
  if (s == "F") return Sex::female;
  throw CsvError("line " + std::to_string(line_no) + ": column 'sex': expected M or F, got '" +
                 s + "'");
}

// header -> column index, with required-name checking
class Header {
public:
  Header(const std::string& line, const std::vector<std::string>& required) {
    const auto names = split_line(line);
    for (std::size_t i = 0; i < names.size(); ++i) index_[names[i]] = i;
    for (const auto& name : required)
      if (!index_.count(name)) throw CsvError("missing required column '" + name + "'");
    n_cols_ = names.size();
  }

  std::size_t col(const std::string& name) const { return index_.at(name); }
  std::size_t n_cols() const { return n_cols_; }

private:
  std::map<std::string, std::size_t> index_;
  std::size_t n_cols_ = 0;
};

Subject parse_subject(const std::vector<std::string>& fields, const Header& h, int line_no) {
  Subject s;
  s.id = parse_int(fields[h.col("id")], "id", line_no);
  s.site = parse_int(fields[h.col("site")], "site", line_no);
  if (s.site < 1 || s.site > 10)
    throw CsvError("line " + std::to_string(line_no) + ": column 'site': value " +
                   std::to_string(s.site) + " outside 1..10");
  s.baseline = parse_double(fields[h.col("baseline")], "baseline", line_no);
  s.sex = parse_sex(fields[h.col("sex")], line_no);
  return s;
}

void check_width(const std::vector<std::string>& fields, const Header& h, int line_no) {
  if (fields.size() != h.n_cols())
    throw CsvError("line " + std::to_string(line_no) + ": expected " +
                   std::to_string(h.n_cols()) + " fields, got " + std::to_string(fields.size()));
}

}  // namespace

std::vector<Subject> read_subjects_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw CsvError("empty subjects file");
  const Header h(line, {"id", "site", "baseline", "sex"});

  std::vector<Subject> subjects;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_line(line);
    check_width(fields, h, line_no);
    subjects.push_back(parse_subject(fields, h, line_no));
  }
  if (subjects.empty()) throw CsvError("subjects file has a header but no rows");
  return subjects;
}

std::vector<Subject> read_subjects_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open '" + path + "'");
  return read_subjects_csv(in);
}

void write_randomized_csv(std::ostream& out, const std::vector<Subject>& subjects,
                          const std::vector<Arm>& arms) {
  out << "id,site,baseline,sex,arm\n";
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    const Subject& s = subjects[i];
    out << s.id << ',' << s.site << ',' << format_double(s.baseline) << ','
        << (s.sex == Sex::male ? 'M' : 'F') << ',' << arm_indicator(arms[i]) << '\n';
  }
}

Dataset read_dataset_csv(std::istream& in, OutcomeKind kind) {
  std::string line;
  if (!std::getline(in, line)) throw CsvError("empty dataset file");

  std::vector<std::string> required = {"id", "site", "baseline", "sex", "arm"};
  if (kind == OutcomeKind::tte) {
    required.push_back("time");
    required.push_back("event");
  } else {
    required.push_back("y");
  }
  const Header h(line, required);

  Dataset data;
  data.outcome_kind = kind;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_line(line);
    check_width(fields, h, line_no);
    data.subjects.push_back(parse_subject(fields, h, line_no));

    const int arm = parse_int(fields[h.col("arm")], "arm", line_no);
    if (arm != 0 && arm != 1)
      throw CsvError("line " + std::to_string(line_no) + ": column 'arm': expected 0 or 1");
    data.arms.push_back(arm == 1 ? Arm::treatment : Arm::control);

    if (kind == OutcomeKind::tte) {
      const double t = parse_double(fields[h.col("time")], "time", line_no);
      if (!(t > 0.0))
        throw CsvError("line " + std::to_string(line_no) + ": column 'time': must be positive");
      const int ev = parse_int(fields[h.col("event")], "event", line_no);
      if (ev != 0 && ev != 1)
        throw CsvError("line " + std::to_string(line_no) + ": column 'event': expected 0 or 1");
      data.time.push_back(t);
      data.event.push_back(ev);
    } else {
      const double y = parse_double(fields[h.col("y")], "y", line_no);
      if (kind == OutcomeKind::binary && y != 0.0 && y != 1.0)
        throw CsvError("line " + std::to_string(line_no) + ": column 'y': expected 0 or 1");
      data.y.push_back(y);
    }
  }
  if (data.subjects.empty()) throw CsvError("dataset file has a header but no rows");
  return data;
}

Dataset read_dataset_csv_file(const std::string& path, OutcomeKind kind) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open '" + path + "'");
  return read_dataset_csv(in, kind);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  out << "id,site,baseline,sex,arm";
  if (data.outcome_kind == OutcomeKind::tte)
    out << ",time,event";
  else
    out << ",y";
  out << '\n';
  for (std::size_t i = 0; i < data.subjects.size(); ++i) {
    const Subject& s = data.subjects[i];
    out << s.id << ',' << s.site << ',' << format_double(s.baseline) << ','
        << (s.sex == Sex::male ? 'M' : 'F') << ',' << arm_indicator(data.arms[i]);
    if (data.outcome_kind == OutcomeKind::tte)
      out << ',' << format_double(data.time[i]) << ',' << data.event[i];
    else
      out << ',' << format_double(data.y[i]);
    out << '\n';
  }
}

void write_dataset_csv_file(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw CsvError("cannot open '" + path + "' for writing");
  write_dataset_csv(out, data);
}

}  // namespace carkit
