#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "carkit/types.hpp"

namespace carkit {

// Subjects file: header id,site,baseline,sex with sex in {M,F}.
std::vector<Subject> read_subjects_csv(std::istream& in);
std::vector<Subject> read_subjects_csv_file(const std::string& path);

void write_randomized_csv(std::ostream& out, const std::vector<Subject>& subjects,
                          const std::vector<Arm>& arms);

// Dataset file: id,site,baseline,sex,arm plus y (normal/binary) or time,event
// (tte). Columns are located by header name; missing or unknown columns are
// reported by name.
Dataset read_dataset_csv(std::istream& in, OutcomeKind kind);
Dataset read_dataset_csv_file(const std::string& path, OutcomeKind kind);

void write_dataset_csv(std::ostream& out, const Dataset& data);
void write_dataset_csv_file(const std::string& path, const Dataset& data);

// shortest round-trip decimal form
std::string format_double(double v);

}  // namespace carkit
